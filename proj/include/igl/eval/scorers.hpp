// Extraction scorers: CaRB, CaRB(1-1), OIE16-C and Wire57-C, plus
// confidence-swept precision-recall curves and their area.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "igl/core.hpp"
#include "igl/eval/assignment.hpp"
#include "igl/lingo.hpp"

namespace igl::eval {

enum class Scorer { Carb, CarbOneOne, Oie16C, Wire57C };

inline std::string_view scorer_name(Scorer s) {
  switch (s) {
    case Scorer::Carb: return "carb";
    case Scorer::CarbOneOne: return "carb_one_one";
    case Scorer::Oie16C: return "oie16c";
    case Scorer::Wire57C: return "wire57c";
  }
  return "?";
}

inline Scorer parse_scorer(std::string_view s) {
  for (auto sc : {Scorer::Carb, Scorer::CarbOneOne, Scorer::Oie16C, Scorer::Wire57C})
    if (scorer_name(sc) == s) return sc;
  if (s == "carb11" || s == "carb-1-1") return Scorer::CarbOneOne;
  throw ValidationError("unknown scorer '" + std::string(s) +
                        "' (expected carb, carb_one_one, oie16c or wire57c)");
}

struct ScoredTriple {
  TextTriple triple;
  double confidence = 0.0;
};

/// Extractions keyed by sentence id. Gold confidences are ignored.
using ExtractionSet = std::map<std::string, std::vector<ScoredTriple>>;

struct CurvePoint {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
};

struct ScoreReport {
  Scorer scorer = Scorer::Carb;
  double precision = 0;  // percent
  double recall = 0;
  double f1 = 0;
  std::vector<CurvePoint> curve;
  std::optional<double> auc;
  std::vector<std::string> warnings;
};

inline double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

// ---------------------------------------------------------------------------
// Token bags

/// Case-folded tokens of each slot, brackets dropped from appended tokens,
/// each slot sorted for multiset intersection.
struct TokenBag {
  std::array<std::vector<std::string>, 3> slots;
  std::vector<std::string> all;  // sorted union of the three slots

  std::size_t size() const { return all.size(); }
};

inline std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : lingo::tokenize_words(text)) out.push_back(casefold(unbracket(w)));
  return out;
}

inline TokenBag bag_of(const TextTriple& t) {
  TokenBag b;
  b.slots[0] = words_of(t.subject);
  b.slots[1] = words_of(t.relation);
  b.slots[2] = words_of(t.object);
  for (auto& s : b.slots) {
    std::sort(s.begin(), s.end());
    b.all.insert(b.all.end(), s.begin(), s.end());
  }
  std::sort(b.all.begin(), b.all.end());
  return b;
}

/// Size of the multiset intersection of two sorted word lists.
inline std::size_t shared_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

/// Slot-wise shared tokens; zero unless the relations share a token.
inline std::size_t carb_shared(const TokenBag& gold, const TokenBag& sys) {
  if (shared_count(gold.slots[1], sys.slots[1]) == 0) return 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < 3; ++k) n += shared_count(gold.slots[k], sys.slots[k]);
  return n;
}

inline bool wire57_candidate(const TokenBag& gold, const TokenBag& sys) {
  for (std::size_t k = 0; k < 3; ++k)
    if (!gold.slots[k].empty() && shared_count(gold.slots[k], sys.slots[k]) == 0) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Per-sentence tallies

/// Precision and recall numerators and denominators for one sentence, summed
/// over the corpus (micro-average).
struct Tally {
  double p_num = 0, p_den = 0, r_num = 0, r_den = 0;

  Tally& operator+=(const Tally& o) {
    p_num += o.p_num;
    p_den += o.p_den;
    r_num += o.r_num;
    r_den += o.r_den;
    return *this;
  }
  Tally& operator-=(const Tally& o) {
    p_num -= o.p_num;
    p_den -= o.p_den;
    r_num -= o.r_num;
    r_den -= o.r_den;
    return *this;
  }
  double precision() const { return p_den > 0 ? 100.0 * p_num / p_den : 0.0; }
  double recall() const { return r_den > 0 ? 100.0 * r_num / r_den : 0.0; }
};

/// Scores one sentence. CaRB variants and Wire57-C count tokens; OIE16-C
/// counts extractions.
inline Tally score_sentence(Scorer scorer, const std::vector<TokenBag>& gold,
                            const std::vector<const TokenBag*>& sys) {
  Tally t;
  for (const auto* e : sys) t.p_den += scorer == Scorer::Oie16C ? 1.0 : static_cast<double>(e->size());
  for (const auto& g : gold) t.r_den += scorer == Scorer::Oie16C ? 1.0 : static_cast<double>(g.size());
  if (sys.empty() || gold.empty()) return t;

  switch (scorer) {
    case Scorer::Carb:
    case Scorer::CarbOneOne: {
      WeightMatrix w(sys.size(), std::vector<double>(gold.size(), 0.0));
      for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t j = 0; j < gold.size(); ++j)
          w[i][j] = static_cast<double>(carb_shared(gold[j], *sys[i]));
      const auto a = max_weight_assignment(w);
      t.p_num = a.total;
      if (scorer == Scorer::CarbOneOne) {
        t.r_num = a.total;
      } else {
        for (std::size_t j = 0; j < gold.size(); ++j) {
          double best = 0;
          for (std::size_t i = 0; i < sys.size(); ++i) best = std::max(best, w[i][j]);
          t.r_num += best;
        }
      }
      break;
    }
    case Scorer::Oie16C: {
      WeightMatrix w(sys.size(), std::vector<double>(gold.size(), 0.0));
      for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t j = 0; j < gold.size(); ++j)
          w[i][j] = static_cast<double>(shared_count(gold[j].all, sys[i]->all));
      const auto a = greedy_assignment(w, 0.0);
      for (auto c : a.row_to_col) {
        if (c == kUnassigned) continue;
        t.p_num += 1;
        t.r_num += 1;
      }
      break;
    }
    case Scorer::Wire57C: {
      WeightMatrix f1(sys.size(), std::vector<double>(gold.size(), 0.0));
      WeightMatrix shared(sys.size(), std::vector<double>(gold.size(), 0.0));
      for (std::size_t i = 0; i < sys.size(); ++i) {
        for (std::size_t j = 0; j < gold.size(); ++j) {
          if (!wire57_candidate(gold[j], *sys[i])) continue;
          const double s = static_cast<double>(shared_count(gold[j].all, sys[i]->all));
          if (s == 0) continue;
          shared[i][j] = s;
          f1[i][j] = f1_of(s / static_cast<double>(sys[i]->size()), s / static_cast<double>(gold[j].size()));
        }
      }
      const auto a = greedy_assignment(f1, 0.0);
      for (std::size_t i = 0; i < sys.size(); ++i) {
        if (a.row_to_col[i] == kUnassigned) continue;
        t.p_num += shared[i][a.row_to_col[i]];
        t.r_num += shared[i][a.row_to_col[i]];
      }
      break;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Corpus scoring

namespace detail {

struct PreparedSentence {
  std::vector<TokenBag> gold;
  std::vector<TokenBag> sys;
  std::vector<double> conf;
};

inline std::map<std::string, PreparedSentence> prepare(const ExtractionSet& system,
                                                       const ExtractionSet& gold,
                                                       std::vector<std::string>& warnings) {
  std::map<std::string, PreparedSentence> out;
  for (const auto& [id, triples] : gold)
    for (const auto& t : triples) out[id].gold.push_back(bag_of(t.triple));
  for (const auto& [id, triples] : system) {
    if (!gold.count(id))
      warnings.push_back("system sentence '" + id + "' has no gold entry; scored with zero credit");
    auto& p = out[id];
    for (const auto& t : triples) {
      p.sys.push_back(bag_of(t.triple));
      p.conf.push_back(t.confidence);
    }
  }
  return out;
}

inline Tally tally_at(Scorer scorer, const PreparedSentence& p, double threshold) {
  std::vector<const TokenBag*> kept;
  for (std::size_t i = 0; i < p.sys.size(); ++i)
    if (p.conf[i] >= threshold) kept.push_back(&p.sys[i]);
  return score_sentence(scorer, p.gold, kept);
}

}  // namespace detail

/// Precision, recall and F1 using every system extraction.
inline ScoreReport score(Scorer scorer, const ExtractionSet& system, const ExtractionSet& gold) {
  ScoreReport r;
  r.scorer = scorer;
  const auto prepared = detail::prepare(system, gold, r.warnings);
  Tally total;
  for (const auto& [id, p] : prepared)
    total += detail::tally_at(scorer, p, -std::numeric_limits<double>::infinity());
  r.precision = total.precision();
  r.recall = total.recall();
  r.f1 = f1_of(r.precision, r.recall);
  return r;
}

inline ScoreReport carb_score(const ExtractionSet& s, const ExtractionSet& g) { return score(Scorer::Carb, s, g); }
inline ScoreReport carb_one_one(const ExtractionSet& s, const ExtractionSet& g) {
  return score(Scorer::CarbOneOne, s, g);
}
inline ScoreReport oie16c_score(const ExtractionSet& s, const ExtractionSet& g) { return score(Scorer::Oie16C, s, g); }
inline ScoreReport wire57c_score(const ExtractionSet& s, const ExtractionSet& g) {
  return score(Scorer::Wire57C, s, g);
}

/// Area under a precision-recall curve, percent scale. Precision is first
/// made non-increasing in recall (running max from the high-recall end) and
/// the curve is anchored at recall 0.
inline double curve_auc(std::vector<CurvePoint> curve) {
  if (curve.empty()) return 0.0;
  std::stable_sort(curve.begin(), curve.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.recall < b.recall; });
  for (std::size_t i = curve.size() - 1; i-- > 0;)
    curve[i].precision = std::max(curve[i].precision, curve[i + 1].precision);
  double area = 0, prev_r = 0, prev_p = curve.front().precision;
  for (const auto& pt : curve) {
    area += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_r = pt.recall;
    prev_p = pt.precision;
  }
  return area / 100.0;
}

/// Sweeps every distinct confidence (descending) as a threshold, keeping
/// extractions at or above it. Only the sentences whose kept set changes are
/// rescored at each step.
inline ScoreReport pr_curve_auc(Scorer scorer, const ExtractionSet& system, const ExtractionSet& gold) {
  if (scorer == Scorer::Wire57C) throw ValidationError("AUC undefined for Wire57-C");
  ScoreReport r = score(scorer, system, gold);
  std::vector<std::string> ignored;
  const auto prepared = detail::prepare(system, gold, ignored);

  std::map<double, std::set<std::string>, std::greater<>> by_conf;
  for (const auto& [id, p] : prepared)
    for (double c : p.conf) by_conf[c].insert(id);

  std::map<std::string, Tally> current;
  Tally total;
  for (const auto& [id, p] : prepared) {
    current[id] = detail::tally_at(scorer, p, std::numeric_limits<double>::infinity());
    total += current[id];
  }
  for (const auto& [threshold, ids] : by_conf) {
    for (const auto& id : ids) {
      total -= current[id];
      current[id] = detail::tally_at(scorer, prepared.at(id), threshold);
      total += current[id];
    }
    r.curve.push_back({threshold, total.precision(), total.recall()});
  }
  r.auc = curve_auc(r.curve);
  return r;
}

}  // namespace igl::eval
