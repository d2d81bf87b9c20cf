// Maximum-weight one-to-one assignment on a rectangular weight matrix
// (Hungarian method with potentials), plus the greedy matcher used by the
// lenient scorers.
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "igl/core.hpp"

namespace igl::eval {

using WeightMatrix = std::vector<std::vector<double>>;

inline constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

struct Assignment {
  std::vector<std::size_t> row_to_col;  // kUnassigned where unmatched
  double total = 0.0;
};

/// Exact maximum-weight matching. Weights must be non-negative; pairs of
/// weight zero are reported as unassigned.
inline Assignment max_weight_assignment(const WeightMatrix& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w[0].size() : 0;
  Assignment out;
  out.row_to_col.assign(rows, kUnassigned);
  if (rows == 0 || cols == 0) return out;
  const std::size_t n = std::max(rows, cols);
  double top = 0;
  for (const auto& r : w) {
    if (r.size() != cols) throw ValidationError("ragged weight matrix");
    for (double v : r) {
      if (v < 0) throw ValidationError("assignment weights must be non-negative");
      top = std::max(top, v);
    }
  }
  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? top - w[i][j] : top;
  };

  // 1-based arrays; p[j] is the row matched to column j.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    if (i < rows && j - 1 < cols && w[i][j - 1] > 0) {
      out.row_to_col[i] = j - 1;
      out.total += w[i][j - 1];
    }
  }
  return out;
}

/// Greedy one-to-one matching: repeatedly takes the heaviest remaining pair
/// with weight above `threshold`. Ties go to the lower row, then lower column.
inline Assignment greedy_assignment(const WeightMatrix& w, double threshold = 0.0) {
  Assignment out;
  out.row_to_col.assign(w.size(), kUnassigned);
  struct Edge {
    double weight;
    std::size_t r, c;
  };
  std::vector<Edge> edges;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    cols = std::max(cols, w[r].size());
    for (std::size_t c = 0; c < w[r].size(); ++c)
      if (w[r][c] > threshold) edges.push_back({w[r][c], r, c});
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.weight > b.weight; });
  std::vector<char> col_used(cols, 0);
  for (const auto& e : edges) {
    if (out.row_to_col[e.r] != kUnassigned || col_used[e.c]) continue;
    out.row_to_col[e.r] = e.c;
    col_used[e.c] = 1;
    out.total += e.weight;
  }
  return out;
}

}  // namespace igl::eval
