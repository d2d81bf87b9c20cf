// Finite-difference verification of the analytic gradients.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "igl/constraints.hpp"
#include "igl/nnet/network.hpp"
#include "igl/nnet/train.hpp"

namespace igl::nnet {

struct GradCheckConfig {
  double step = 1e-4;
  std::size_t samples = 64;
  std::uint64_t seed = 1;
  constraints::PenaltyWeights weights = constraints::PenaltyWeights::zero();
  /// Minimum distance of the base grid from every penalty kink.
  double kink_margin = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a kink or flipped a label
  bool base_near_kink = false;
};

namespace detail {

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-5});
}

}  // namespace detail

/// Compares the analytic gradient of CE plus the weighted penalties for one
/// OpenIE example with central differences on a random parameter subsample.
/// Samples whose perturbation changes any argmax label or penalty regime are
/// skipped, since the loss is only piecewise smooth there.
inline GradCheckResult gradient_check(IglNetwork<double>& net, const TrainingExample<OieLabel>& ex,
                                      const GradCheckConfig& cfg = {}) {
  GradCheckResult res;
  const bool penalised = !cfg.weights.all_zero();
  auto trace = net.forward(ex.ids, true);
  std::vector<Mat<double>> dlogits;
  constraints::combined_loss_grad(trace, ex.gold, ex.masks, cfg.weights, penalised, 1.0, dlogits);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(trace, dlogits, grad);

  const auto base_grid = trace.grid<OieLabel>();
  const auto regime = constraints::penalty_regime(base_grid, ex.masks);
  if (penalised) res.base_near_kink = constraints::kink_margin(base_grid, ex.masks) < cfg.kink_margin;

  auto loss_at = [&](bool* labels_ok, bool* regime_ok) {
    auto t = net.forward(ex.ids);
    *labels_ok = t.labels == trace.labels;
    double l = ce_loss(t, ex.gold);
    if (penalised) {
      auto g = t.grid<OieLabel>();
      *regime_ok = constraints::penalty_regime(g, ex.masks) == regime;
      l += constraints::penalties(g, ex.masks, cfg.weights).weighted(cfg.weights);
    } else {
      *regime_ok = true;
    }
    return l;
  };

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, net.parameter_count() - 1);
  auto p = net.mutable_parameters();
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    const auto i = pick(rng);
    const double orig = p[i];
    bool lp = false, lm = false, rp = false, rm = false;
    p[i] = orig + cfg.step;
    const double up = loss_at(&lp, &rp);
    p[i] = orig - cfg.step;
    const double down = loss_at(&lm, &rm);
    p[i] = orig;
    if (!lp || !lm || !rp || !rm) {
      ++res.skipped;
      continue;
    }
    const double numeric = (up - down) / (2 * cfg.step);
    res.max_rel_error = std::max(res.max_rel_error, detail::rel_error(grad[i], numeric));
    ++res.checked;
  }
  return res;
}

}  // namespace igl::nnet
