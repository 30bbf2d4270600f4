#pragma once

// Serial, definition-level versions of the parallel kernels. They scatter
// from inputs to outputs one element at a time, sharing no loop structure
// with kernels.hpp. Used by the tests and the benchmark.

#include <cstddef>
#include <cstdint>
#include <span>

#include "gzipt/nn/geometry.hpp"

namespace gzipt::nn::reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> w, std::span<const T> bias,
                    std::span<T> out) {
  const long C = g.in_channels, O = g.out_channels, F = g.freq, N = g.time;
  const long KF = g.kernel_freq, KT = g.kernel_time, PF = g.pad_freq(), PT = g.pad_time();
  for (long o = 0; o < O; ++o)
    for (long f = 0; f < F; ++f)
      for (long t = 0; t < N; ++t) out[(o * F + f) * N + t] = bias.empty() ? T{0} : bias[o];
  for (long c = 0; c < C; ++c)
    for (long fi = 0; fi < F; ++fi)
      for (long ti = 0; ti < N; ++ti) {
        const T v = in[(c * F + fi) * N + ti];
        for (long o = 0; o < O; ++o)
          for (long a = 0; a < KF; ++a)
            for (long b = 0; b < KT; ++b) {
              const long f = fi - a + PF, t = ti - b + PT;
              if (f < 0 || f >= F || t < 0 || t >= N) continue;
              out[(o * F + f) * N + t] += w[((o * C + c) * KF + a) * KT + b] * v;
            }
      }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> in, std::span<const T> w, std::span<const T> gout,
                     std::span<T> gin, std::span<T> gw, std::span<T> gb) {
  const long C = g.in_channels, O = g.out_channels, F = g.freq, N = g.time;
  const long KF = g.kernel_freq, KT = g.kernel_time, PF = g.pad_freq(), PT = g.pad_time();
  for (long o = 0; o < O; ++o)
    for (long f = 0; f < F; ++f)
      for (long t = 0; t < N; ++t) {
        const T gy = gout[(o * F + f) * N + t];
        if (!gb.empty()) gb[o] += gy;
        for (long c = 0; c < C; ++c)
          for (long a = 0; a < KF; ++a)
            for (long b = 0; b < KT; ++b) {
              const long fi = f + a - PF, ti = t + b - PT;
              if (fi < 0 || fi >= F || ti < 0 || ti >= N) continue;
              const long wi = ((o * C + c) * KF + a) * KT + b;
              const long xi = (c * F + fi) * N + ti;
              gw[wi] += gy * in[xi];
              if (!gin.empty()) gin[xi] += gy * w[wi];
            }
      }
}

template <typename T>
void deconv2d_forward(const DeconvGeometry& g, std::span<const T> in, std::span<const T> w,
                      std::span<const T> bias, std::span<T> out) {
  const long C = g.in_channels, O = g.out_channels, FI = g.in_freq, FO = g.out_freq(), N = g.time;
  const long KF = g.kernel_freq, KT = g.kernel_time, PF = g.pad_freq(), PT = g.pad_time();
  const long S = DeconvGeometry::stride_freq;
  for (long o = 0; o < O; ++o)
    for (long f = 0; f < FO; ++f)
      for (long t = 0; t < N; ++t) out[(o * FO + f) * N + t] = bias.empty() ? T{0} : bias[o];
  for (long c = 0; c < C; ++c)
    for (long fi = 0; fi < FI; ++fi)
      for (long ti = 0; ti < N; ++ti) {
        const T v = in[(c * FI + fi) * N + ti];
        for (long o = 0; o < O; ++o)
          for (long a = 0; a < KF; ++a)
            for (long b = 0; b < KT; ++b) {
              const long fo = S * fi - PF + a, to = ti - PT + b;
              if (fo < 0 || fo >= FO || to < 0 || to >= N) continue;
              out[(o * FO + fo) * N + to] += v * w[((c * O + o) * KF + a) * KT + b];
            }
      }
}

template <typename T>
void deconv2d_backward(const DeconvGeometry& g, std::span<const T> in, std::span<const T> w,
                       std::span<const T> gout, std::span<T> gin, std::span<T> gw, std::span<T> gb) {
  const long C = g.in_channels, O = g.out_channels, FI = g.in_freq, FO = g.out_freq(), N = g.time;
  const long KF = g.kernel_freq, KT = g.kernel_time, PF = g.pad_freq(), PT = g.pad_time();
  const long S = DeconvGeometry::stride_freq;
  if (!gb.empty())
    for (long o = 0; o < O; ++o)
      for (long i = 0; i < FO * N; ++i) gb[o] += gout[o * FO * N + i];
  for (long c = 0; c < C; ++c)
    for (long fi = 0; fi < FI; ++fi)
      for (long ti = 0; ti < N; ++ti)
        for (long o = 0; o < O; ++o)
          for (long a = 0; a < KF; ++a)
            for (long b = 0; b < KT; ++b) {
              const long fo = S * fi - PF + a, to = ti - PT + b;
              if (fo < 0 || fo >= FO || to < 0 || to >= N) continue;
              const T gy = gout[(o * FO + fo) * N + to];
              const long wi = ((c * O + o) * KF + a) * KT + b;
              const long xi = (c * FI + fi) * N + ti;
              gw[wi] += gy * in[xi];
              if (!gin.empty()) gin[xi] += gy * w[wi];
            }
}

template <typename T>
void linear_forward(const LinearGeometry& g, std::span<const T> in, std::span<const T> w, std::span<const T> bias,
                    std::span<T> out) {
  const long K = g.in_features, O = g.out_features, N = g.time;
  for (long t = 0; t < N; ++t)
    for (long o = 0; o < O; ++o) {
      T acc = bias.empty() ? T{0} : bias[o];
      for (long k = 0; k < K; ++k) acc += w[o * K + k] * in[k * N + t];
      out[o * N + t] = acc;
    }
}

template <typename T>
void linear_backward(const LinearGeometry& g, std::span<const T> in, std::span<const T> w, std::span<const T> gout,
                     std::span<T> gin, std::span<T> gw, std::span<T> gb) {
  const long K = g.in_features, O = g.out_features, N = g.time;
  for (long t = 0; t < N; ++t)
    for (long o = 0; o < O; ++o) {
      const T gy = gout[o * N + t];
      if (!gb.empty()) gb[o] += gy;
      for (long k = 0; k < K; ++k) {
        gw[o * K + k] += gy * in[k * N + t];
        if (!gin.empty()) gin[k * N + t] += gy * w[o * K + k];
      }
    }
}

template <typename T>
void maxpool_freq_forward(std::size_t channels, std::size_t freq, std::size_t time, std::span<const T> in,
                          std::span<T> out, std::span<std::uint8_t> which) {
  const std::size_t fo = freq / 2;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t f = 0; f < fo; ++f)
      for (std::size_t t = 0; t < time; ++t) {
        const T a = in[(c * freq + 2 * f) * time + t];
        const T b = in[(c * freq + 2 * f + 1) * time + t];
        const std::size_t o = (c * fo + f) * time + t;
        which[o] = b > a ? 1 : 0;
        out[o] = b > a ? b : a;
      }
}

}  // namespace gzipt::nn::reference
