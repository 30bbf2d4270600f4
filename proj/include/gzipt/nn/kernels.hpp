#pragma once

// OpenMP kernels for the layers with real arithmetic. Every output element is
// produced by exactly one thread in a fixed order, so results do not depend
// on the thread count. reference_kernels.hpp holds the serial definitions
// these are tested against.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>

#include "gzipt/nn/geometry.hpp"

namespace gzipt::nn::kernels {

namespace detail {

// dst[t] += w * src[t + shift] for every t where both indices are valid.
template <typename T>
inline void axpy_shifted(T* __restrict dst, const T* __restrict src, T w, std::ptrdiff_t n, std::ptrdiff_t shift) {
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n - shift);
#pragma omp simd
  for (std::ptrdiff_t t = lo; t < hi; ++t) dst[t] += w * src[t + shift];
}

// sum_t a[t] * b[t + shift] over valid t.
template <typename T>
inline T dot_shifted(const T* __restrict a, const T* __restrict b, std::ptrdiff_t n, std::ptrdiff_t shift) {
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n - shift);
  T acc = 0;
#pragma omp simd reduction(+ : acc)
  for (std::ptrdiff_t t = lo; t < hi; ++t) acc += a[t] * b[t + shift];
  return acc;
}

}  // namespace detail

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> weight, std::span<const T> bias,
                    std::span<T> out) {
  const auto cin = static_cast<std::ptrdiff_t>(g.in_channels);
  const auto cout = static_cast<std::ptrdiff_t>(g.out_channels);
  const auto nf = static_cast<std::ptrdiff_t>(g.freq);
  const auto nt = static_cast<std::ptrdiff_t>(g.time);
  const auto kf = static_cast<std::ptrdiff_t>(g.kernel_freq);
  const auto kt = static_cast<std::ptrdiff_t>(g.kernel_time);
  const auto pf = static_cast<std::ptrdiff_t>(g.pad_freq());
  const auto pt = static_cast<std::ptrdiff_t>(g.pad_time());
  const T* x = in.data();
  const T* w = weight.data();
  T* y = out.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t co = 0; co < cout; ++co) {
    for (std::ptrdiff_t f = 0; f < nf; ++f) {
      T* row = y + (co * nf + f) * nt;
      std::fill(row, row + nt, bias.empty() ? T{0} : bias[co]);
      for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
        const T* wk = w + (co * cin + ci) * kf * kt;
        for (std::ptrdiff_t a = 0; a < kf; ++a) {
          const std::ptrdiff_t fi = f + a - pf;
          if (fi < 0 || fi >= nf) continue;
          const T* src = x + (ci * nf + fi) * nt;
          for (std::ptrdiff_t b = 0; b < kt; ++b) detail::axpy_shifted(row, src, wk[a * kt + b], nt, b - pt);
        }
      }
    }
  }
}

// Accumulates (+=) into grad_in, grad_weight and grad_bias. grad_in may be
// empty when the input needs no gradient.
template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> in, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const auto cin = static_cast<std::ptrdiff_t>(g.in_channels);
  const auto cout = static_cast<std::ptrdiff_t>(g.out_channels);
  const auto nf = static_cast<std::ptrdiff_t>(g.freq);
  const auto nt = static_cast<std::ptrdiff_t>(g.time);
  const auto kf = static_cast<std::ptrdiff_t>(g.kernel_freq);
  const auto kt = static_cast<std::ptrdiff_t>(g.kernel_time);
  const auto pf = static_cast<std::ptrdiff_t>(g.pad_freq());
  const auto pt = static_cast<std::ptrdiff_t>(g.pad_time());
  const T* x = in.data();
  const T* w = weight.data();
  const T* gy = grad_out.data();

  if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t co = 0; co < cout; ++co) {
      const T* plane = gy + co * nf * nt;
      T acc = 0;
#pragma omp simd reduction(+ : acc)
      for (std::ptrdiff_t i = 0; i < nf * nt; ++i) acc += plane[i];
      grad_bias[co] += acc;
    }
  }

  T* gw = grad_weight.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t co = 0; co < cout; ++co) {
    for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
      T* gk = gw + (co * cin + ci) * kf * kt;
      for (std::ptrdiff_t a = 0; a < kf; ++a) {
        for (std::ptrdiff_t b = 0; b < kt; ++b) {
          T acc = 0;
          for (std::ptrdiff_t f = std::max<std::ptrdiff_t>(0, pf - a); f < std::min(nf, nf + pf - a); ++f)
            acc += detail::dot_shifted(gy + (co * nf + f) * nt, x + (ci * nf + f + a - pf) * nt, nt, b - pt);
          gk[a * kt + b] += acc;
        }
      }
    }
  }

  if (grad_in.empty()) return;
  T* gx = grad_in.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
    for (std::ptrdiff_t fi = 0; fi < nf; ++fi) {
      T* row = gx + (ci * nf + fi) * nt;
      for (std::ptrdiff_t co = 0; co < cout; ++co) {
        const T* wk = w + (co * cin + ci) * kf * kt;
        for (std::ptrdiff_t a = 0; a < kf; ++a) {
          const std::ptrdiff_t fo = fi - a + pf;
          if (fo < 0 || fo >= nf) continue;
          const T* src = gy + (co * nf + fo) * nt;
          for (std::ptrdiff_t b = 0; b < kt; ++b) detail::axpy_shifted(row, src, wk[a * kt + b], nt, pt - b);
        }
      }
    }
  }
}

template <typename T>
void deconv2d_forward(const DeconvGeometry& g, std::span<const T> in, std::span<const T> weight,
                      std::span<const T> bias, std::span<T> out) {
  const auto cin = static_cast<std::ptrdiff_t>(g.in_channels);
  const auto cout = static_cast<std::ptrdiff_t>(g.out_channels);
  const auto nfi = static_cast<std::ptrdiff_t>(g.in_freq);
  const auto nfo = static_cast<std::ptrdiff_t>(g.out_freq());
  const auto nt = static_cast<std::ptrdiff_t>(g.time);
  const auto kf = static_cast<std::ptrdiff_t>(g.kernel_freq);
  const auto kt = static_cast<std::ptrdiff_t>(g.kernel_time);
  const auto pf = static_cast<std::ptrdiff_t>(g.pad_freq());
  const auto pt = static_cast<std::ptrdiff_t>(g.pad_time());
  constexpr std::ptrdiff_t s = DeconvGeometry::stride_freq;
  const T* x = in.data();
  const T* w = weight.data();
  T* y = out.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t co = 0; co < cout; ++co) {
    for (std::ptrdiff_t fo = 0; fo < nfo; ++fo) {
      T* row = y + (co * nfo + fo) * nt;
      std::fill(row, row + nt, bias.empty() ? T{0} : bias[co]);
      for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
        const T* wk = w + (ci * cout + co) * kf * kt;
        for (std::ptrdiff_t a = 0; a < kf; ++a) {
          const std::ptrdiff_t num = fo + pf - a;  // = s * fi
          if (num < 0 || num % s != 0 || num / s >= nfi) continue;
          const T* src = x + (ci * nfi + num / s) * nt;
          for (std::ptrdiff_t b = 0; b < kt; ++b) detail::axpy_shifted(row, src, wk[a * kt + b], nt, pt - b);
        }
      }
    }
  }
}

template <typename T>
void deconv2d_backward(const DeconvGeometry& g, std::span<const T> in, std::span<const T> weight,
                       std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_weight,
                       std::span<T> grad_bias) {
  const auto cin = static_cast<std::ptrdiff_t>(g.in_channels);
  const auto cout = static_cast<std::ptrdiff_t>(g.out_channels);
  const auto nfi = static_cast<std::ptrdiff_t>(g.in_freq);
  const auto nfo = static_cast<std::ptrdiff_t>(g.out_freq());
  const auto nt = static_cast<std::ptrdiff_t>(g.time);
  const auto kf = static_cast<std::ptrdiff_t>(g.kernel_freq);
  const auto kt = static_cast<std::ptrdiff_t>(g.kernel_time);
  const auto pf = static_cast<std::ptrdiff_t>(g.pad_freq());
  const auto pt = static_cast<std::ptrdiff_t>(g.pad_time());
  constexpr std::ptrdiff_t s = DeconvGeometry::stride_freq;
  const T* x = in.data();
  const T* w = weight.data();
  const T* gy = grad_out.data();

  if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t co = 0; co < cout; ++co) {
      const T* plane = gy + co * nfo * nt;
      T acc = 0;
#pragma omp simd reduction(+ : acc)
      for (std::ptrdiff_t i = 0; i < nfo * nt; ++i) acc += plane[i];
      grad_bias[co] += acc;
    }
  }

  T* gw = grad_weight.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
    for (std::ptrdiff_t co = 0; co < cout; ++co) {
      T* gk = gw + (ci * cout + co) * kf * kt;
      for (std::ptrdiff_t a = 0; a < kf; ++a) {
        for (std::ptrdiff_t b = 0; b < kt; ++b) {
          T acc = 0;
          for (std::ptrdiff_t fi = 0; fi < nfi; ++fi) {
            const std::ptrdiff_t fo = s * fi - pf + a;
            if (fo < 0 || fo >= nfo) continue;
            acc += detail::dot_shifted(x + (ci * nfi + fi) * nt, gy + (co * nfo + fo) * nt, nt, b - pt);
          }
          gk[a * kt + b] += acc;
        }
      }
    }
  }

  if (grad_in.empty()) return;
  T* gx = grad_in.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
    for (std::ptrdiff_t fi = 0; fi < nfi; ++fi) {
      T* row = gx + (ci * nfi + fi) * nt;
      for (std::ptrdiff_t co = 0; co < cout; ++co) {
        const T* wk = w + (ci * cout + co) * kf * kt;
        for (std::ptrdiff_t a = 0; a < kf; ++a) {
          const std::ptrdiff_t fo = s * fi - pf + a;
          if (fo < 0 || fo >= nfo) continue;
          const T* src = gy + (co * nfo + fo) * nt;
          for (std::ptrdiff_t b = 0; b < kt; ++b) detail::axpy_shifted(row, src, wk[a * kt + b], nt, b - pt);
        }
      }
    }
  }
}

template <typename T>
void linear_forward(const LinearGeometry& g, std::span<const T> in, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out) {
  const auto k_in = static_cast<std::ptrdiff_t>(g.in_features);
  const auto k_out = static_cast<std::ptrdiff_t>(g.out_features);
  const auto nt = static_cast<std::ptrdiff_t>(g.time);
  const T* x = in.data();
  const T* w = weight.data();
  T* y = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < k_out; ++o) {
    T* row = y + o * nt;
    std::fill(row, row + nt, bias.empty() ? T{0} : bias[o]);
    for (std::ptrdiff_t k = 0; k < k_in; ++k) detail::axpy_shifted(row, x + k * nt, w[o * k_in + k], nt, 0);
  }
}

template <typename T>
void linear_backward(const LinearGeometry& g, std::span<const T> in, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const auto k_in = static_cast<std::ptrdiff_t>(g.in_features);
  const auto k_out = static_cast<std::ptrdiff_t>(g.out_features);
  const auto nt = static_cast<std::ptrdiff_t>(g.time);
  const T* x = in.data();
  const T* w = weight.data();
  const T* gy = grad_out.data();
  T* gw = grad_weight.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < k_out; ++o) {
    const T* grow = gy + o * nt;
    if (!grad_bias.empty()) {
      T acc = 0;
#pragma omp simd reduction(+ : acc)
      for (std::ptrdiff_t t = 0; t < nt; ++t) acc += grow[t];
      grad_bias[o] += acc;
    }
    for (std::ptrdiff_t k = 0; k < k_in; ++k) gw[o * k_in + k] += detail::dot_shifted(grow, x + k * nt, nt, 0);
  }
  if (grad_in.empty()) return;
  T* gx = grad_in.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < k_in; ++k)
    for (std::ptrdiff_t o = 0; o < k_out; ++o) detail::axpy_shifted(gx + k * nt, gy + o * nt, w[o * k_in + k], nt, 0);
}

// [C, F, T] -> [C, F / 2, T]; `which` records 0 or 1 for the winning row of
// each pair (ties pick the lower row).
template <typename T>
void maxpool_freq_forward(std::size_t channels, std::size_t freq, std::size_t time, std::span<const T> in,
                          std::span<T> out, std::span<std::uint8_t> which) {
  const auto nc = static_cast<std::ptrdiff_t>(channels);
  const auto nfo = static_cast<std::ptrdiff_t>(freq / 2);
  const auto nfi = static_cast<std::ptrdiff_t>(freq);
  const auto nt = static_cast<std::ptrdiff_t>(time);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    for (std::ptrdiff_t f = 0; f < nfo; ++f) {
      const T* lo = in.data() + (c * nfi + 2 * f) * nt;
      const T* hi = lo + nt;
      T* dst = out.data() + (c * nfo + f) * nt;
      std::uint8_t* pick = which.data() + (c * nfo + f) * nt;
      for (std::ptrdiff_t t = 0; t < nt; ++t) {
        const bool upper = hi[t] > lo[t];
        dst[t] = upper ? hi[t] : lo[t];
        pick[t] = upper ? 1 : 0;
      }
    }
  }
}

template <typename T>
void maxpool_freq_backward(std::size_t channels, std::size_t freq, std::size_t time, std::span<const T> grad_out,
                           std::span<const std::uint8_t> which, std::span<T> grad_in) {
  const auto nc = static_cast<std::ptrdiff_t>(channels);
  const auto nfo = static_cast<std::ptrdiff_t>(freq / 2);
  const auto nfi = static_cast<std::ptrdiff_t>(freq);
  const auto nt = static_cast<std::ptrdiff_t>(time);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    for (std::ptrdiff_t f = 0; f < nfo; ++f) {
      const T* g = grad_out.data() + (c * nfo + f) * nt;
      const std::uint8_t* pick = which.data() + (c * nfo + f) * nt;
      T* lo = grad_in.data() + (c * nfi + 2 * f) * nt;
      T* hi = lo + nt;
      for (std::ptrdiff_t t = 0; t < nt; ++t) (pick[t] ? hi : lo)[t] += g[t];
    }
  }
}

}  // namespace gzipt::nn::kernels
