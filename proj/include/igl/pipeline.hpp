// End-to-end extraction: coordination splitting, per-leaf grid extraction,
// rescoring and dedup. Also converts gold text triples into grid rows.
#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "igl/core.hpp"
#include "igl/decode.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/network.hpp"

namespace igl::pipeline {

// ---------------------------------------------------------------------------
// Splitting

struct SplitChoice {
  CoordinationStructure structure;  // in the coordinates of the sentence it split
  std::size_t conjunct = 0;
};

struct SplitLeaf {
  Sentence sentence;
  std::vector<std::size_t> origin;  // root token index of every leaf token
  std::vector<SplitChoice> path;
};

struct SplitTree {
  Sentence root;
  std::vector<SplitLeaf> leaves;
};

namespace detail {

struct Work {
  std::vector<std::string> words;
  std::vector<std::size_t> origin;
  std::vector<CoordinationStructure> pending;
  std::vector<SplitChoice> path;
};

inline std::optional<Span> remap_span(const Span& sp, const std::vector<std::optional<std::size_t>>& map) {
  std::optional<std::size_t> lo, hi;
  for (std::size_t p = sp.begin; p < sp.end; ++p) {
    if (!map[p]) continue;
    lo = lo ? std::min(*lo, *map[p]) : *map[p];
    hi = hi ? std::max(*hi, *map[p]) : *map[p];
  }
  if (!lo) return std::nullopt;
  return Span{*lo, *hi + 1};
}

inline std::optional<CoordinationStructure> remap(const CoordinationStructure& c,
                                                  const std::vector<std::optional<std::size_t>>& map) {
  if (!map[c.coordinator]) return std::nullopt;
  CoordinationStructure out{c.level, *map[c.coordinator], {}};
  for (const auto& sp : c.conjuncts) {
    auto m = remap_span(sp, map);
    if (!m) return std::nullopt;
    out.conjuncts.push_back(*m);
  }
  return out;
}

inline bool preceded_by_between(const CoordinationStructure& c, const std::vector<std::string>& words) {
  const auto b = c.span().begin;
  return b > 0 && casefold(words[b - 1]) == "between";
}

/// Drops a comma that directly follows another comma or opens the sentence.
inline void tidy_commas(Work& w) {
  Work out;
  for (std::size_t i = 0; i < w.words.size(); ++i) {
    if (w.words[i] == "," && (out.words.empty() || out.words.back() == ",")) continue;
    out.words.push_back(w.words[i]);
    out.origin.push_back(w.origin[i]);
  }
  w.words = std::move(out.words);
  w.origin = std::move(out.origin);
}

inline void expand(Work w, std::vector<SplitLeaf>& leaves, const std::string& raw) {
  std::erase_if(w.pending, [&](const CoordinationStructure& c) { return preceded_by_between(c, w.words); });
  if (w.pending.empty()) {
    tidy_commas(w);
    if (w.words.empty()) return;
    leaves.push_back({Sentence(w.words, raw), w.origin, w.path});
    return;
  }
  std::size_t outer = 0;
  for (std::size_t i = 1; i < w.pending.size(); ++i) {
    const auto& a = w.pending[i];
    const auto& b = w.pending[outer];
    if (a.level < b.level || (a.level == b.level && a.span().begin < b.span().begin)) outer = i;
  }
  const CoordinationStructure s = w.pending[outer];
  for (std::size_t i = 0; i < w.pending.size(); ++i) {
    if (i != outer && w.pending[i].level == s.level && w.pending[i].span().overlaps(s.span()))
      throw ValidationError("overlapping coordination structures at level " + std::to_string(s.level));
  }
  const Span whole = s.span();
  for (std::size_t k = 0; k < s.conjuncts.size(); ++k) {
    const Span c = s.conjuncts[k];
    Work next;
    std::vector<std::optional<std::size_t>> map(w.words.size());
    auto keep = [&](std::size_t p) {
      map[p] = next.words.size();
      next.words.push_back(w.words[p]);
      next.origin.push_back(w.origin[p]);
    };
    for (std::size_t p = 0; p < whole.begin; ++p) keep(p);
    for (std::size_t p = c.begin; p < c.end; ++p) keep(p);
    for (std::size_t p = whole.end; p < w.words.size(); ++p) keep(p);
    for (std::size_t i = 0; i < w.pending.size(); ++i) {
      if (i == outer) continue;
      if (auto m = remap(w.pending[i], map); m && m->conjuncts.size() >= 2) next.pending.push_back(*m);
    }
    next.path = w.path;
    next.path.push_back({s, k});
    expand(std::move(next), leaves, raw);
  }
}

}  // namespace detail

/// Splits `s` on its coordination structures, outermost level first: each
/// structure's span is replaced by each of its conjuncts in turn. Structures
/// right after "between" are left intact. Appended tokens are dropped; leaves
/// are real-token sentences, deduplicated by text.
inline SplitTree split_sentence(const Sentence& s, const std::vector<CoordinationStructure>& structures) {
  const auto real = lingo::strip_special(s);
  for (const auto& c : structures) {
    validate_structure(c);
    if (c.span().end > real.size() || c.coordinator >= real.size())
      throw ValidationError("coordination structure lies outside the sentence");
  }
  detail::Work w;
  w.words = real.surfaces();
  for (std::size_t i = 0; i < real.size(); ++i) w.origin.push_back(i);
  w.pending = structures;
  SplitTree tree{real, {}};
  std::vector<SplitLeaf> leaves;
  detail::expand(std::move(w), leaves, real.raw());
  std::set<std::vector<std::string>> seen;
  for (auto& l : leaves)
    if (seen.insert(l.sentence.surfaces()).second) tree.leaves.push_back(std::move(l));
  return tree;
}

// ---------------------------------------------------------------------------
// Grid sources and rescoring

class OieGridSource {
 public:
  virtual ~OieGridSource() = default;
  /// `s` carries the appended tokens.
  virtual PredictedGrid<OieLabel> predict(const Sentence& s) const = 0;
};

class CoordGridSource {
 public:
  virtual ~CoordGridSource() = default;
  /// `s` has no appended tokens.
  virtual HardGrid<CoordLabel> predict(const Sentence& s) const = 0;
};

template <typename T>
class NetworkOieSource final : public OieGridSource {
 public:
  /// `levels` overrides the configured grid height when non-zero.
  explicit NetworkOieSource(const nnet::IglNetwork<T>& net, std::size_t levels = 0) : net_(&net), levels_(levels) {
    if (net.config().task != nnet::Task::Oie) throw ValidationError("extraction model was trained for coordination");
  }
  PredictedGrid<OieLabel> predict(const Sentence& s) const override {
    return net_->forward(s, levels_).template predicted<OieLabel>();
  }

 private:
  const nnet::IglNetwork<T>* net_;
  std::size_t levels_;
};

template <typename T>
class NetworkCoordSource final : public CoordGridSource {
 public:
  /// `levels` overrides the configured grid height when non-zero.
  explicit NetworkCoordSource(const nnet::IglNetwork<T>& net, std::size_t levels = 0) : net_(&net), levels_(levels) {
    if (net.config().task != nnet::Task::Coord) throw ValidationError("coordination model was trained for extraction");
  }
  HardGrid<CoordLabel> predict(const Sentence& s) const override {
    return net_->forward(s, levels_).template hard<CoordLabel>();
  }

 private:
  const nnet::IglNetwork<T>* net_;
  std::size_t levels_;
};

/// Fixed grids keyed by sentence text; unknown sentences get an all-N grid.
template <typename Label>
class OracleGrids {
 public:
  explicit OracleGrids(std::size_t rows) : rows_(rows) {}
  void add(const Sentence& s, HardGrid<Label> g) { grids_[s.text()] = std::move(g); }
  HardGrid<Label> lookup(const Sentence& s) const {
    if (auto it = grids_.find(s.text()); it != grids_.end()) return it->second;
    return HardGrid<Label>(rows_, s.size());
  }

 private:
  std::size_t rows_;
  std::map<std::string, HardGrid<Label>> grids_;
};

class OracleOieSource final : public OieGridSource {
 public:
  explicit OracleOieSource(std::size_t rows) : grids_(rows) {}
  void add(const Sentence& s, HardGrid<OieLabel> g) { grids_.add(s, std::move(g)); }
  PredictedGrid<OieLabel> predict(const Sentence& s) const override {
    auto g = grids_.lookup(s);
    return {ProbGrid<OieLabel>::one_hot(g), g};
  }

 private:
  OracleGrids<OieLabel> grids_;
};

class OracleCoordSource final : public CoordGridSource {
 public:
  explicit OracleCoordSource(std::size_t rows) : grids_(rows) {}
  void add(const Sentence& s, HardGrid<CoordLabel> g) { grids_.add(s, std::move(g)); }
  HardGrid<CoordLabel> predict(const Sentence& s) const override { return grids_.lookup(s); }

 private:
  OracleGrids<CoordLabel> grids_;
};

class Rescorer {
 public:
  virtual ~Rescorer() = default;
  virtual double rescore(const Sentence& original, const Extraction& e) const = 0;
};

class IdentityRescorer final : public Rescorer {
 public:
  double rescore(const Sentence&, const Extraction& e) const override { return e.confidence; }
};

// ---------------------------------------------------------------------------
// Extraction

struct ExtractConfig {
  decode::DecodeConfig decode;
};

/// Highest confidence wins among duplicates; the result is sorted by
/// descending confidence, ties by normalized text.
inline std::vector<Extraction> merge_extractions(std::vector<Extraction> all) {
  std::map<DedupKey, Extraction> best;
  for (auto& e : all) {
    auto key = normalize_extraction(e, *e.source);
    auto it = best.find(key);
    if (it == best.end() || e.confidence > it->second.confidence) best[key] = std::move(e);
  }
  std::vector<std::pair<DedupKey, Extraction>> items(best.begin(), best.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second.confidence > b.second.confidence; });
  std::vector<Extraction> out;
  for (auto& [k, e] : items) out.push_back(std::move(e));
  return out;
}

struct ExtractOutput {
  std::vector<Extraction> extractions;
  std::size_t leaves = 0;
};

inline ExtractOutput extract_sentence(const Sentence& sentence, const OieGridSource& oie,
                                      const CoordGridSource* coord = nullptr,
                                      const ExtractConfig& cfg = {},
                                      const Rescorer& rescorer = IdentityRescorer()) {
  const auto real = lingo::strip_special(sentence);
  std::vector<Sentence> leaves;
  if (coord) {
    auto grid = coord->predict(real);
    auto tree = split_sentence(real, decode::grid_to_coordinations(grid, real));
    for (auto& l : tree.leaves) leaves.push_back(std::move(l.sentence));
  } else {
    leaves.push_back(real);
  }
  std::vector<Extraction> all;
  for (const auto& leaf : leaves) {
    auto s = std::make_shared<const Sentence>(lingo::append_special(leaf));
    for (auto& e : decode::grid_to_extractions(oie.predict(*s), s, cfg.decode)) {
      e.confidence = rescorer.rescore(real, e);
      all.push_back(std::move(e));
    }
  }
  return {merge_extractions(std::move(all)), leaves.size()};
}

inline std::vector<Extraction> extract(std::string_view raw, const OieGridSource& oie,
                                       const CoordGridSource* coord = nullptr, const ExtractConfig& cfg = {},
                                       const Rescorer& rescorer = IdentityRescorer()) {
  return extract_sentence(lingo::tokenize(raw), oie, coord, cfg, rescorer).extractions;
}

// ---------------------------------------------------------------------------
// Gold alignment

struct AlignResult {
  std::vector<OieLabel> row;  // empty when skipped
  std::string skip_reason;
  bool skipped() const { return row.empty(); }
};

namespace detail {

using Candidate = std::vector<std::size_t>;

inline bool word_eq(std::string_view a, std::string_view b) { return casefold(a) == casefold(b); }

inline std::vector<Candidate> contiguous_matches(const Sentence& s, const std::vector<std::string>& words) {
  std::vector<Candidate> out;
  const std::size_t n = s.real_size();
  if (words.empty() || words.size() > n) return out;
  for (std::size_t b = 0; b + words.size() <= n; ++b) {
    bool ok = true;
    for (std::size_t k = 0; k < words.size() && ok; ++k) ok = word_eq(s[b + k].surface, words[k]);
    if (!ok) continue;
    Candidate c(words.size());
    for (std::size_t k = 0; k < words.size(); ++k) c[k] = b + k;
    out.push_back(std::move(c));
  }
  return out;
}

inline std::optional<std::size_t> appended_index(const Sentence& s, std::string_view surface) {
  for (std::size_t i = s.real_size(); i < s.size(); ++i)
    if (s[i].surface == surface) return i;
  return std::nullopt;
}

/// Exact matches of an argument; a leading "is" or trailing "of"/"from" may
/// fall back to the appended token of the same word. Bracketed words must.
inline std::vector<Candidate> argument_matches(const Sentence& s, std::vector<std::string> words) {
  if (words.empty()) return {};
  auto is_lead = [](const std::string& w) { return casefold(w) == "is" || w == kAppendedIs; };
  auto is_trail = [](const std::string& w) {
    auto f = casefold(w);
    return f == "of" || f == "from" || w == kAppendedOf || w == kAppendedFrom;
  };
  const bool can_lead = is_lead(words.front());
  const bool can_trail = words.size() > (can_lead ? 1u : 0u) && is_trail(words.back());
  for (int variant = 0; variant < 4; ++variant) {
    const bool lead = variant & 1, trail = variant & 2;
    if ((lead && !can_lead) || (trail && !can_trail)) continue;
    if (!lead && words.size() > (trail ? 1u : 0u) && is_appended_surface(words.front())) continue;
    if (!trail && words.size() > (lead ? 1u : 0u) && is_appended_surface(words.back())) continue;
    std::vector<std::string> core(words.begin() + (lead ? 1 : 0), words.end() - (trail ? 1 : 0));
    if (std::any_of(core.begin(), core.end(), [](const auto& w) { return is_appended_surface(w); })) continue;
    std::vector<std::size_t> extra;
    if (lead) {
      auto i = appended_index(s, kAppendedIs);
      if (!i) continue;
      extra.push_back(*i);
    }
    if (trail) {
      auto f = casefold(unbracket(words.back()));
      auto i = appended_index(s, f == "of" ? kAppendedOf : kAppendedFrom);
      if (!i) continue;
      extra.push_back(*i);
    }
    std::vector<Candidate> found;
    if (core.empty()) {
      found.push_back({});
    } else {
      found = contiguous_matches(s, core);
    }
    for (auto& c : found) {
      c.insert(c.end(), extra.begin(), extra.end());
      std::sort(c.begin(), c.end());
    }
    if (!found.empty()) return found;
  }
  return {};
}

inline bool overlaps(const Candidate& a, const Candidate& b) {
  for (auto i : a)
    if (std::find(b.begin(), b.end(), i) != b.end()) return true;
  return false;
}

inline std::size_t gap(const Candidate& a, const Candidate& b) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (auto i : a)
    for (auto j : b) best = std::min(best, i > j ? i - j : j - i);
  return best;
}

}  // namespace detail

/// Labels one grid row for a gold triple, or explains why it was skipped.
/// `s` must carry the appended tokens.
inline AlignResult align_gold(const Sentence& s, const TextTriple& gold) {
  using detail::Candidate;
  static constexpr const char* kSlot[] = {"subject", "relation", "object"};
  const std::string* text[] = {&gold.subject, &gold.relation, &gold.object};
  std::array<std::vector<std::string>, 3> words;
  std::array<std::vector<Candidate>, 3> cand;
  std::array<bool, 3> present{};
  for (std::size_t a = 0; a < 3; ++a) {
    words[a] = lingo::tokenize_words(*text[a]);
    present[a] = !words[a].empty();
    if (!present[a]) continue;
    cand[a] = detail::argument_matches(s, words[a]);
    if (cand[a].empty()) return {{}, std::string("no match for ") + kSlot[a] + " '" + *text[a] + "'"};
  }
  if (!present[1]) return {{}, "gold relation is empty"};

  std::array<std::optional<Candidate>, 3> chosen;
  auto prune = [&]() -> bool {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t a = 0; a < 3; ++a) {
        if (!present[a] || chosen[a] || cand[a].size() != 1) continue;
        chosen[a] = cand[a][0];
        changed = true;
      }
      for (std::size_t a = 0; a < 3; ++a) {
        if (!present[a] || chosen[a]) continue;
        auto before = cand[a].size();
        std::erase_if(cand[a], [&](const Candidate& c) {
          for (std::size_t b = 0; b < 3; ++b)
            if (chosen[b] && detail::overlaps(c, *chosen[b])) return true;
          return false;
        });
        if (cand[a].empty()) return false;
        changed = changed || cand[a].size() != before;
      }
    }
    return true;
  };
  if (!prune()) return {{}, "arguments cannot be placed without overlap"};

  // Arguments with identical text that share exactly as many matches are
  // placed jointly, in slot order.
  for (std::size_t a = 0; a < 3; ++a) {
    if (!present[a] || chosen[a]) continue;
    std::vector<std::size_t> group;
    for (std::size_t b = a; b < 3; ++b)
      if (present[b] && !chosen[b] && words[b] == words[a] && cand[b] == cand[a]) group.push_back(b);
    if (group.size() < 2 || group.size() != cand[a].size()) continue;
    bool disjoint = true;
    for (std::size_t i = 0; i < cand[a].size(); ++i)
      for (std::size_t j = i + 1; j < cand[a].size(); ++j) disjoint = disjoint && !detail::overlaps(cand[a][i], cand[a][j]);
    if (!disjoint) continue;
    const auto shared = cand[a];
    for (std::size_t i = 0; i < group.size(); ++i) {
      chosen[group[i]] = shared[i];
      cand[group[i]] = {shared[i]};
    }
  }
  if (!prune()) return {{}, "arguments cannot be placed without overlap"};

  std::vector<std::size_t> ambiguous;
  for (std::size_t a = 0; a < 3; ++a)
    if (present[a] && !chosen[a]) ambiguous.push_back(a);
  if (ambiguous.size() >= 2) return {{}, "multiple matches for more than one argument"};
  if (ambiguous.size() == 1) {
    const auto a = ambiguous[0];
    std::size_t best = 0, best_cost = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < cand[a].size(); ++i) {
      std::size_t cost = 0;
      for (std::size_t b = 0; b < 3; ++b)
        if (chosen[b] && !chosen[b]->empty()) cost += detail::gap(cand[a][i], *chosen[b]);
      if (cost < best_cost) {
        best_cost = cost;
        best = i;
      }
    }
    chosen[a] = cand[a][best];
  }

  std::vector<OieLabel> row(s.size(), OieLabel::N);
  const OieLabel lab[] = {OieLabel::S, OieLabel::R, OieLabel::O};
  for (std::size_t a = 0; a < 3; ++a) {
    if (!chosen[a]) continue;
    for (auto i : *chosen[a]) {
      if (row[i] != OieLabel::N) return {{}, "arguments overlap"};
      row[i] = lab[a];
    }
  }

  // The row must decode back to the gold text.
  HardGrid<OieLabel> g(1, s.size());
  g.set_row(0, row);
  auto sp = std::make_shared<const Sentence>(s);
  auto back = decode::grid_to_extractions(g, sp);
  auto plain = [](const std::string& t) {
    std::vector<std::string_view> w;
    auto toks = lingo::tokenize_words(t);
    for (auto& x : toks) w.push_back(unbracket(x));
    return normalize_text(join(w));
  };
  if (back.size() != 1) return {{}, "aligned row does not decode"};
  auto got = to_text(back[0], s);
  if (plain(got.subject) != plain(gold.subject) || plain(got.relation) != plain(gold.relation) ||
      plain(got.object) != plain(gold.object))
    return {{}, "aligned row does not reproduce the gold text"};
  return {row, {}};
}

struct GoldGrid {
  HardGrid<OieLabel> grid;
  std::size_t aligned = 0;
  std::size_t truncated = 0;
  std::vector<std::string> skipped;  // one reason per skipped triple
};

/// Aligns every triple, orders rows by first relation token then first
/// subject token, pads with all-N rows and keeps at most `levels` rows.
inline GoldGrid build_gold_grid(const Sentence& s, const std::vector<TextTriple>& gold, std::size_t levels) {
  GoldGrid out{HardGrid<OieLabel>(levels, s.size()), 0, 0, {}};
  std::vector<std::vector<OieLabel>> rows;
  for (const auto& t : gold) {
    auto r = align_gold(s, t);
    if (r.skipped()) {
      out.skipped.push_back(r.skip_reason);
      continue;
    }
    if (std::find(rows.begin(), rows.end(), r.row) == rows.end()) rows.push_back(std::move(r.row));
  }
  auto first = [](const std::vector<OieLabel>& row, OieLabel l) {
    auto it = std::find(row.begin(), row.end(), l);
    return static_cast<std::size_t>(it - row.begin());
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    auto ka = std::pair{first(a, OieLabel::R), first(a, OieLabel::S)};
    auto kb = std::pair{first(b, OieLabel::R), first(b, OieLabel::S)};
    return ka < kb;
  });
  out.aligned = rows.size();
  if (rows.size() > levels) {
    out.truncated = rows.size() - levels;
    rows.resize(levels);
  }
  for (std::size_t m = 0; m < rows.size(); ++m) out.grid.set_row(m, rows[m]);
  return out;
}

}  // namespace igl::pipeline
