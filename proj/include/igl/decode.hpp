// Grid decoding: OpenIE rows become extractions, coordination rows become
// coordination structures.
#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "igl/core.hpp"

namespace igl::decode {

struct DecodeConfig {
  /// Rows without a relation are always dropped since an extraction needs
  /// one; the flag is kept so configs can state it explicitly.
  bool require_relation = true;
  bool require_subject = false;
  double min_confidence = -std::numeric_limits<double>::infinity();

  void validate() const {
    if (std::isnan(min_confidence) || min_confidence == std::numeric_limits<double>::infinity())
      throw ValidationError("min_confidence must be finite or -inf");
  }
};

/// Mean log-probability of the labeled (S, R or O) cells of row m.
inline double row_confidence(const PredictedGrid<OieLabel>& g, std::size_t m) {
  double sum = 0;
  std::size_t cells = 0;
  for (std::size_t n = 0; n < g.labels.cols(); ++n) {
    auto l = g.labels(m, n);
    if (l == OieLabel::N) continue;
    sum += std::log(g.probs(m, n, l));
    ++cells;
  }
  return cells ? sum / static_cast<double>(cells) : 0.0;
}

inline std::vector<Extraction> grid_to_extractions(const PredictedGrid<OieLabel>& g,
                                                   const SentencePtr& s,
                                                   const DecodeConfig& cfg = {}) {
  if (!s) throw ValidationError("decoding needs a sentence");
  if (g.labels.cols() != s->size()) throw ValidationError("grid width does not match sentence length");
  std::vector<Extraction> out;
  for (std::size_t m = 0; m < g.labels.rows(); ++m) {
    Extraction e;
    for (std::size_t n = 0; n < g.labels.cols(); ++n) {
      switch (g.labels(m, n)) {
        case OieLabel::S: e.subject.push_back(n); break;
        case OieLabel::R: e.relation.push_back(n); break;
        case OieLabel::O: e.object.push_back(n); break;
        case OieLabel::N: break;
      }
    }
    if (e.relation.empty()) continue;
    if (cfg.require_subject && e.subject.empty()) continue;
    e.confidence = row_confidence(g, m);
    if (e.confidence < cfg.min_confidence) continue;
    e.source = s;
    out.push_back(std::move(e));
  }
  return out;
}

/// Convenience for hard grids: every labeled cell has probability one.
inline std::vector<Extraction> grid_to_extractions(const HardGrid<OieLabel>& g, const SentencePtr& s,
                                                   const DecodeConfig& cfg = {}) {
  return grid_to_extractions(PredictedGrid<OieLabel>{ProbGrid<OieLabel>::one_hot(g), g}, s, cfg);
}

namespace detail {

inline bool is_comma(const Sentence& s, std::size_t n) { return s[n].surface == ","; }

}  // namespace detail

/// Structures of one row. A chain is a run of CONJ spans joined only by
/// commas or CC tokens; each chain containing a CC yields one structure whose
/// coordinator is its last CC.
inline std::vector<CoordinationStructure> decode_coordination_row(const HardGrid<CoordLabel>& g,
                                                                  std::size_t m, const Sentence& s) {
  std::vector<CoordinationStructure> out;
  const std::size_t n_cols = g.cols();
  CoordinationStructure cur;
  cur.level = m;
  bool have_cc = false;
  std::size_t pending_cc = 0;

  auto flush = [&] {
    if (have_cc && cur.conjuncts.size() >= 2) out.push_back(cur);
    cur = CoordinationStructure{};
    cur.level = m;
    have_cc = false;
  };

  std::size_t n = 0;
  while (n < n_cols) {
    const auto l = g(m, n);
    if (l == CoordLabel::CONJ) {
      std::size_t e = n;
      while (e < n_cols && g(m, e) == CoordLabel::CONJ) ++e;
      if (!cur.conjuncts.empty() && pending_cc) {
        cur.coordinator = pending_cc - 1;
        have_cc = true;
      }
      pending_cc = 0;
      cur.conjuncts.push_back({n, e});
      n = e;
      continue;
    }
    if (l == CoordLabel::CC) {
      pending_cc = n + 1;
      ++n;
      continue;
    }
    if (detail::is_comma(s, n) && !cur.conjuncts.empty()) {
      ++n;
      continue;
    }
    flush();
    pending_cc = 0;
    ++n;
  }
  flush();
  return out;
}

inline std::vector<CoordinationStructure> grid_to_coordinations(const HardGrid<CoordLabel>& g,
                                                                const Sentence& s) {
  if (g.cols() != s.size()) throw ValidationError("grid width does not match sentence length");
  std::vector<CoordinationStructure> out;
  for (std::size_t m = 0; m < g.rows(); ++m) {
    auto row = decode_coordination_row(g, m, s);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace igl::decode
