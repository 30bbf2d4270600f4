#pragma once

#include <cstddef>

namespace gzipt::nn {

// Zero-padded "same" convolution over [C, F, T] planes. Kernels are odd-sized
// and padded by (k - 1) / 2 on each side, so F and T are preserved.
// Weights are laid out [out_channels][in_channels][kernel_freq][kernel_time].
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t freq = 1;
  std::size_t time = 1;
  std::size_t kernel_freq = 3;
  std::size_t kernel_time = 3;

  std::size_t pad_freq() const { return (kernel_freq - 1) / 2; }
  std::size_t pad_time() const { return (kernel_time - 1) / 2; }
  std::size_t weight_count() const { return out_channels * in_channels * kernel_freq * kernel_time; }
  std::size_t in_size() const { return in_channels * freq * time; }
  std::size_t out_size() const { return out_channels * freq * time; }
};

// Transposed convolution with stride 2 on frequency and 1 on time: the exact
// adjoint of a stride-(2,1) "same"-padded convolution, with one row of output
// padding so that F maps to 2F. Weights are laid out
// [in_channels][out_channels][kernel_freq][kernel_time].
struct DeconvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t in_freq = 1;
  std::size_t time = 1;
  std::size_t kernel_freq = 3;
  std::size_t kernel_time = 3;

  static constexpr std::size_t stride_freq = 2;
  std::size_t out_freq() const { return stride_freq * in_freq; }
  std::size_t pad_freq() const { return (kernel_freq - 1) / 2; }
  std::size_t pad_time() const { return (kernel_time - 1) / 2; }
  std::size_t weight_count() const { return in_channels * out_channels * kernel_freq * kernel_time; }
  std::size_t in_size() const { return in_channels * in_freq * time; }
  std::size_t out_size() const { return out_channels * out_freq() * time; }
};

// Fully connected layer applied to every time frame independently: the
// [C, F] slice of a frame is flattened to in_features = C * F.
// Weights are laid out [out_features][in_features].
struct LinearGeometry {
  std::size_t in_features = 1;
  std::size_t out_features = 1;
  std::size_t time = 1;
};

}  // namespace gzipt::nn
