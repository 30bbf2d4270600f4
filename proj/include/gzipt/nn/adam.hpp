#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gzipt/common/error.hpp"
#include "gzipt/nn/tensor.hpp"

namespace gzipt::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are kept in 64-bit regardless of T.
template <typename T>
class Adam {
 public:
  Adam(std::vector<BasicTensor<T>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    require(cfg.lr > 0.0 && cfg.eps > 0.0, "adam: lr and eps must be positive");
    require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
            "adam: betas must lie in [0, 1)");
    for (auto* p : params_) {
      require(p->has_grad(), "adam: parameter without gradient buffer");
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  // Applies one update from the gradients currently stored in the
  // parameters. Throws NumericError, leaving parameters untouched, if any
  // gradient is non-finite.
  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i)
      for (T g : params_[i]->grad())
        if (!std::isfinite(static_cast<double>(g)))
          throw NumericError("adam: non-finite gradient in parameter " + std::to_string(i));
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto data = params_[i]->data();
      auto grad = params_[i]->grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < data.size(); ++k) {
        const double g = grad[k];
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
        const double update = cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
        data[k] = static_cast<T>(static_cast<double>(data[k]) - update);
      }
    }
  }

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<BasicTensor<T>*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace gzipt::nn
