// AdamW over a flat parameter vector.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "igl/core.hpp"

namespace igl::nnet {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;

  void validate() const {
    if (!(lr >= 0) || !std::isfinite(lr)) throw ValidationError("learning rate must be finite and non-negative");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ValidationError("Adam betas must lie in [0, 1)");
    if (!(eps > 0)) throw ValidationError("Adam epsilon must be positive");
    if (!(weight_decay >= 0)) throw ValidationError("weight decay must be non-negative");
    if (!(clip_norm >= 0)) throw ValidationError("clip_norm must be non-negative");
  }
};

/// Adaptive moments with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
template <typename T>
class AdamW {
 public:
  AdamW(AdamWConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) { cfg_.validate(); }

  const AdamWConfig& config() const { return cfg_; }
  std::size_t steps() const { return t_; }

  void step(std::span<T> params, std::span<const T> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
      throw ValidationError("optimizer state does not match parameter count");
    ++t_;
    double scale = 1.0;
    if (cfg_.clip_norm > 0) {
      double sq = 0;
      for (auto g : grad) sq += static_cast<double>(g) * static_cast<double>(g);
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
    }
    const double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const double g = static_cast<double>(grad[i]) * scale;
      m_[i] = cfg_.beta1 * m_[i] + (1 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1 - cfg_.beta2) * g * g;
      const double upd = (m_[i] / b1t) / (std::sqrt(v_[i] / b2t) + cfg_.eps) +
                         cfg_.weight_decay * static_cast<double>(params[i]);
      params[i] = static_cast<T>(static_cast<double>(params[i]) - cfg_.lr * upd);
    }
  }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace igl::nnet
