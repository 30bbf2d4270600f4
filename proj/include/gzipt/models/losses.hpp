#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "gzipt/common/error.hpp"

namespace gzipt::models {

inline constexpr double kProbEpsilon = 1e-7;

// Weighted binary cross entropy, averaged over frames:
//   -mean_t [ beta * y log x + (2 - beta) (1 - y) log(1 - x) ]
// x is clamped to [eps, 1 - eps]. When `grad` is non-empty it receives
// dL/dx, evaluated at the clamped x so saturated outputs still get a signal.
template <typename T>
double wbce_loss(std::span<const T> probs, std::span<const std::uint8_t> labels, double beta,
                 std::span<T> grad = {}) {
  require(probs.size() == labels.size(), "wbce_loss: length mismatch");
  require(!probs.empty(), "wbce_loss: empty input");
  require(beta > 0.0 && beta < 2.0, "wbce_loss: beta must lie in (0, 2)");
  const double n = static_cast<double>(probs.size());
  double total = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    require(labels[t] <= 1, "wbce_loss: labels must be binary");
    const double x = std::clamp(static_cast<double>(probs[t]), kProbEpsilon, 1.0 - kProbEpsilon);
    const double y = labels[t];
    total += beta * y * std::log(x) + (2.0 - beta) * (1.0 - y) * std::log(1.0 - x);
    if (!grad.empty()) grad[t] = static_cast<T>(-(beta * y / x - (2.0 - beta) * (1.0 - y) / (1.0 - x)) / n);
  }
  return -total / n;
}

// Mean per-frame categorical cross entropy of a [n_classes x T] row-major
// probability block against class ids.
template <typename T>
double ipt_loss(std::span<const T> probs, std::size_t n_classes, std::span<const std::uint8_t> labels,
                std::span<T> grad = {}) {
  const std::size_t nt = labels.size();
  require(nt > 0 && probs.size() == n_classes * nt, "ipt_loss: shape mismatch");
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), T{0});
  double total = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    require(labels[t] < n_classes, "ipt_loss: invalid label id " + std::to_string(labels[t]));
    const double p = std::max(static_cast<double>(probs[labels[t] * nt + t]), kProbEpsilon);
    total -= std::log(p);
    if (!grad.empty()) grad[labels[t] * nt + t] = static_cast<T>(-1.0 / (p * static_cast<double>(nt)));
  }
  return total / static_cast<double>(nt);
}

}  // namespace gzipt::models
