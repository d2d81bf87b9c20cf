// Soft coverage penalties over OpenIE probability grids, the combined
// constrained loss, and discrete violation counts for reporting.
//
// Y(m, n, k) is the probability that token n carries label k in row m.
//   posc = sum_n imp_n * (1 - max_m max_{k in S,R,O} Y(m,n,k))
//   hvc  = sum_n hv_n  * |1 - sum_m Y(m,n,R)|
//   hve  = sum_m max(0, sum_n hv_n * Y(m,n,R) - 1)
//   ec   = max(0, sum_n hv_n - sum_m max_n hv_n * Y(m,n,R))
// Each function can also accumulate scale * dJ/dY into a gradient grid, using
// the zero subgradient at hinge and absolute-value kinks.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "igl/core.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/network.hpp"

namespace igl::constraints {

using lingo::TokenMasks;

struct PenaltyWeights {
  double posc = 3.0;
  double hvc = 3.0;
  double hve = 3.0;
  double ec = 3.0;

  void validate() const {
    for (double w : {posc, hvc, hve, ec}) {
      if (!std::isfinite(w) || w < 0) throw ValidationError("penalty weights must be finite and non-negative");
    }
  }
  bool all_zero() const { return posc == 0 && hvc == 0 && hve == 0 && ec == 0; }
  static PenaltyWeights zero() { return {0, 0, 0, 0}; }
};

template <typename T>
using OieGrid = ProbGrid<OieLabel, T>;

namespace detail {

template <typename T>
void check(const OieGrid<T>& y, const TokenMasks& masks, const OieGrid<T>* grad) {
  if (masks.important.size() != y.cols() || masks.head_verb.size() != y.cols())
    throw ValidationError("token masks are not aligned with the grid");
  if (grad && (grad->rows() != y.rows() || grad->cols() != y.cols()))
    throw ValidationError("gradient grid shape mismatch");
}

template <typename T>
T sign(T v) {
  return v > T(0) ? T(1) : v < T(0) ? T(-1) : T(0);
}

constexpr OieLabel kArgLabels[] = {OieLabel::S, OieLabel::R, OieLabel::O};

}  // namespace detail

template <typename T>
T posc_penalty(const OieGrid<T>& y, const TokenMasks& masks, OieGrid<T>* grad = nullptr,
               T scale = T(1)) {
  detail::check(y, masks, grad);
  T total = T(0);
  for (std::size_t n = 0; n < y.cols(); ++n) {
    if (!masks.important[n]) continue;
    T best = -std::numeric_limits<T>::infinity();
    std::size_t bm = 0;
    OieLabel bk = OieLabel::S;
    for (std::size_t m = 0; m < y.rows(); ++m) {
      for (auto k : detail::kArgLabels) {
        if (y(m, n, k) > best) {
          best = y(m, n, k);
          bm = m;
          bk = k;
        }
      }
    }
    if (y.rows() == 0) best = T(0);
    total += T(1) - best;
    if (grad && y.rows()) (*grad)(bm, n, bk) -= scale;
  }
  return total;
}

template <typename T>
T hvc_penalty(const OieGrid<T>& y, const TokenMasks& masks, OieGrid<T>* grad = nullptr,
              T scale = T(1)) {
  detail::check(y, masks, grad);
  T total = T(0);
  for (std::size_t n = 0; n < y.cols(); ++n) {
    if (!masks.head_verb[n]) continue;
    T sum = T(0);
    for (std::size_t m = 0; m < y.rows(); ++m) sum += y(m, n, OieLabel::R);
    total += std::abs(T(1) - sum);
    if (grad) {
      T g = -detail::sign(T(1) - sum) * scale;
      for (std::size_t m = 0; m < y.rows(); ++m) (*grad)(m, n, OieLabel::R) += g;
    }
  }
  return total;
}

template <typename T>
T hve_penalty(const OieGrid<T>& y, const TokenMasks& masks, OieGrid<T>* grad = nullptr,
              T scale = T(1)) {
  detail::check(y, masks, grad);
  T total = T(0);
  for (std::size_t m = 0; m < y.rows(); ++m) {
    T sum = T(0);
    for (std::size_t n = 0; n < y.cols(); ++n)
      if (masks.head_verb[n]) sum += y(m, n, OieLabel::R);
    const T excess = sum - T(1);
    if (excess > T(0)) {
      total += excess;
      if (grad) {
        for (std::size_t n = 0; n < y.cols(); ++n)
          if (masks.head_verb[n]) (*grad)(m, n, OieLabel::R) += scale;
      }
    }
  }
  return total;
}

template <typename T>
T ec_penalty(const OieGrid<T>& y, const TokenMasks& masks, OieGrid<T>* grad = nullptr,
             T scale = T(1)) {
  detail::check(y, masks, grad);
  const T verbs = static_cast<T>(masks.head_verb_count());
  T covered = T(0);
  std::vector<std::size_t> best_n(y.rows(), y.cols());
  for (std::size_t m = 0; m < y.rows(); ++m) {
    T best = T(0);
    for (std::size_t n = 0; n < y.cols(); ++n) {
      if (masks.head_verb[n] && y(m, n, OieLabel::R) > best) {
        best = y(m, n, OieLabel::R);
        best_n[m] = n;
      }
    }
    covered += best;
  }
  const T gap = verbs - covered;
  if (gap <= T(0)) return T(0);
  if (grad) {
    for (std::size_t m = 0; m < y.rows(); ++m)
      if (best_n[m] < y.cols()) (*grad)(m, best_n[m], OieLabel::R) -= scale;
  }
  return gap;
}

struct PenaltyBreakdown {
  double posc = 0, hvc = 0, hve = 0, ec = 0;
  double weighted(const PenaltyWeights& w) const {
    return w.posc * posc + w.hvc * hvc + w.hve * hve + w.ec * ec;
  }
};

/// Weighted penalty sum; accumulates scale * d/dY into `grad` when given.
template <typename T>
PenaltyBreakdown penalties(const OieGrid<T>& y, const TokenMasks& masks, const PenaltyWeights& w,
                           OieGrid<T>* grad = nullptr, T scale = T(1)) {
  PenaltyBreakdown b;
  b.posc = static_cast<double>(posc_penalty(y, masks, grad, scale * T(w.posc)));
  b.hvc = static_cast<double>(hvc_penalty(y, masks, grad, scale * T(w.hvc)));
  b.hve = static_cast<double>(hve_penalty(y, masks, grad, scale * T(w.hve)));
  b.ec = static_cast<double>(ec_penalty(y, masks, grad, scale * T(w.ec)));
  return b;
}

/// Discrete choices made by the penalties at a grid (which cell attains each
/// max, which side of each hinge or absolute value). Two grids with the same
/// regime lie on one smooth piece of every penalty.
template <typename T>
std::vector<long> penalty_regime(const OieGrid<T>& y, const TokenMasks& masks) {
  std::vector<long> sig;
  OieGrid<T> g(y.rows(), y.cols());
  posc_penalty(y, masks, &g);
  hvc_penalty(y, masks, &g);
  hve_penalty(y, masks, &g);
  ec_penalty(y, masks, &g);
  for (auto v : g.data()) sig.push_back(static_cast<long>(std::lround(static_cast<double>(v) * 4)));
  const T verbs = static_cast<T>(masks.head_verb_count());
  T covered = T(0);
  for (std::size_t m = 0; m < y.rows(); ++m) {
    T best = T(0);
    for (std::size_t n = 0; n < y.cols(); ++n)
      if (masks.head_verb[n]) best = std::max(best, y(m, n, OieLabel::R));
    covered += best;
  }
  sig.push_back(verbs - covered > T(0));
  return sig;
}

/// Smallest distance from any hinge, absolute-value or max argument to its
/// kink. Finite differences are only trustworthy when this is not tiny.
template <typename T>
double kink_margin(const OieGrid<T>& y, const TokenMasks& masks) {
  double margin = std::numeric_limits<double>::infinity();
  auto see = [&](double v) { margin = std::min(margin, std::abs(v)); };
  for (std::size_t n = 0; n < y.cols(); ++n) {
    if (masks.important[n]) {
      std::vector<double> vals;
      for (std::size_t m = 0; m < y.rows(); ++m)
        for (auto k : detail::kArgLabels) vals.push_back(static_cast<double>(y(m, n, k)));
      std::sort(vals.rbegin(), vals.rend());
      if (vals.size() > 1) see(vals[0] - vals[1]);
    }
    if (masks.head_verb[n]) {
      double sum = 0;
      for (std::size_t m = 0; m < y.rows(); ++m) sum += static_cast<double>(y(m, n, OieLabel::R));
      see(1 - sum);
    }
  }
  double covered = 0;
  for (std::size_t m = 0; m < y.rows(); ++m) {
    double sum = 0;
    std::vector<double> vals{0.0};
    for (std::size_t n = 0; n < y.cols(); ++n) {
      if (!masks.head_verb[n]) continue;
      sum += static_cast<double>(y(m, n, OieLabel::R));
      vals.push_back(static_cast<double>(y(m, n, OieLabel::R)));
    }
    see(sum - 1);
    std::sort(vals.rbegin(), vals.rend());
    if (vals.size() > 1) see(vals[0] - vals[1]);
    covered += vals[0];
  }
  if (masks.head_verb_count()) see(static_cast<double>(masks.head_verb_count()) - covered);
  return margin;
}

// ---------------------------------------------------------------------------
// Combined loss

/// Training steps below `warmup` use cross-entropy only.
inline bool constraints_active(std::size_t step, std::size_t warmup) { return step >= warmup; }

inline constexpr std::size_t kNoConstraints = std::numeric_limits<std::size_t>::max();

/// J = J_CE + sum_c lambda_c J_c once `step` reaches `warmup`, else J_CE.
template <typename T>
T combined_loss(const nnet::ForwardTrace<T>& trace, const HardGrid<OieLabel>& gold,
                const TokenMasks& masks, const PenaltyWeights& w, std::size_t step,
                std::size_t warmup) {
  w.validate();
  T ce = nnet::ce_loss(trace, gold);
  if (!constraints_active(step, warmup) || w.all_zero()) return ce;
  return ce + static_cast<T>(penalties(trace.template grid<OieLabel>(), masks, w).weighted(w));
}

/// Value and per-level logit gradient of the combined loss, scaled by `scale`.
template <typename T>
T combined_loss_grad(const nnet::ForwardTrace<T>& trace, const HardGrid<OieLabel>& gold,
                     const TokenMasks& masks, const PenaltyWeights& w, bool active, T scale,
                     std::vector<nnet::Mat<T>>& dlogits, PenaltyBreakdown* breakdown = nullptr) {
  w.validate();
  T value = nnet::ce_loss(trace, gold);
  nnet::ce_logit_grad(trace, gold, scale, dlogits);
  if (!active || w.all_zero()) return value;
  const auto y = trace.template grid<OieLabel>();
  OieGrid<T> dy(y.rows(), y.cols());
  auto b = penalties(y, masks, w, &dy, scale);
  if (breakdown) *breakdown = b;
  value += static_cast<T>(b.weighted(w));
  constexpr auto K = LabelTraits<OieLabel>::kSize;
  for (std::size_t m = 0; m < y.rows(); ++m) {
    nnet::Mat<T> dp(static_cast<Eigen::Index>(y.cols()), static_cast<Eigen::Index>(K));
    for (std::size_t n = 0; n < y.cols(); ++n)
      for (std::size_t k = 0; k < K; ++k)
        dp(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = dy.at(m, n, k);
    dlogits[m] += nnet::softmax_rows_backward<T>(trace.probs[m], dp);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Discrete violation counts

struct ViolationReport {
  std::size_t posc = 0;
  std::size_t hvc = 0;
  std::size_t hve = 0;
  std::size_t ec = 0;
  std::size_t extraction_count = 0;

  std::size_t total() const { return posc + hvc + hve + ec; }
  ViolationReport& operator+=(const ViolationReport& o) {
    posc += o.posc;
    hvc += o.hvc;
    hve += o.hve;
    ec += o.ec;
    extraction_count += o.extraction_count;
    return *this;
  }
  bool operator==(const ViolationReport&) const = default;
};

/// Integer analogs of the soft penalties on one hard grid. A row is an
/// extraction when it carries any non-N label.
inline ViolationReport count_violations(const HardGrid<OieLabel>& grid, const TokenMasks& masks) {
  if (masks.important.size() != grid.cols() || masks.head_verb.size() != grid.cols())
    throw ValidationError("token masks are not aligned with the grid");
  ViolationReport r;
  std::vector<std::size_t> rows;
  for (std::size_t m = 0; m < grid.rows(); ++m)
    if (!grid.row_is_empty(m)) rows.push_back(m);
  r.extraction_count = rows.size();

  std::size_t rows_with_verb = 0;
  for (auto m : rows) {
    std::size_t verbs = 0;
    for (std::size_t n = 0; n < grid.cols(); ++n)
      verbs += masks.head_verb[n] && grid(m, n) == OieLabel::R;
    if (verbs >= 2) ++r.hve;
    if (verbs >= 1) ++rows_with_verb;
  }
  std::size_t verb_total = 0;
  for (std::size_t n = 0; n < grid.cols(); ++n) {
    if (masks.important[n]) {
      bool covered = false;
      for (auto m : rows) covered = covered || grid(m, n) != OieLabel::N;
      if (!covered) ++r.posc;
    }
    if (masks.head_verb[n]) {
      ++verb_total;
      std::size_t in_rel = 0;
      for (auto m : rows) in_rel += grid(m, n) == OieLabel::R;
      if (in_rel != 1) ++r.hvc;
    }
  }
  r.ec = verb_total > rows_with_verb ? verb_total - rows_with_verb : 0;
  return r;
}

inline ViolationReport count_violations(const std::vector<HardGrid<OieLabel>>& grids,
                                        const std::vector<TokenMasks>& masks) {
  if (grids.size() != masks.size()) throw ValidationError("one mask set per grid required");
  ViolationReport total;
  for (std::size_t i = 0; i < grids.size(); ++i) total += count_violations(grids[i], masks[i]);
  return total;
}

}  // namespace igl::constraints
