// Domain types shared by every part of the toolkit: tokens, sentences,
// label alphabets, label grids, extractions and coordination structures.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace igl {

/// Raised when caller-supplied data violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for failures that are not the caller's fault (numerical blowups, IO).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Tokens and sentences

struct Token {
  std::string surface;
  std::size_t index = 0;
  bool is_appended = false;

  bool operator==(const Token&) const = default;
};

/// The three synthetic tokens appended after the real words so that relation
/// words missing from the surface text can still be labeled.
inline constexpr std::string_view kAppendedIs = "[is]";
inline constexpr std::string_view kAppendedOf = "[of]";
inline constexpr std::string_view kAppendedFrom = "[from]";
inline constexpr std::size_t kAppendedCount = 3;

inline bool is_appended_surface(std::string_view s) {
  return s == kAppendedIs || s == kAppendedOf || s == kAppendedFrom;
}

class Sentence {
 public:
  Sentence() = default;

  /// Builds a sentence from surfaces. Appended flags are derived from the
  /// bracketed surfaces, which must form a suffix of exactly three tokens.
  Sentence(std::vector<std::string> surfaces, std::string raw)
      : raw_(std::move(raw)) {
    tokens_.reserve(surfaces.size());
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      tokens_.push_back(Token{std::move(surfaces[i]), i, false});
    }
    std::size_t n = tokens_.size();
    if (n >= kAppendedCount && tokens_[n - 3].surface == kAppendedIs &&
        tokens_[n - 2].surface == kAppendedOf &&
        tokens_[n - 1].surface == kAppendedFrom) {
      for (std::size_t i = n - 3; i < n; ++i) tokens_[i].is_appended = true;
    }
    if (real_size() == 0) throw ValidationError("sentence has no real tokens");
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }
  const Token& at(std::size_t i) const {
    if (i >= tokens_.size()) {
      throw ValidationError("token index " + std::to_string(i) +
                            " out of range for sentence of length " +
                            std::to_string(tokens_.size()));
    }
    return tokens_[i];
  }
  std::size_t size() const { return tokens_.size(); }
  const std::string& raw() const { return raw_; }

  bool has_appended() const {
    return !tokens_.empty() && tokens_.back().is_appended;
  }
  std::size_t real_size() const {
    return has_appended() ? tokens_.size() - kAppendedCount : tokens_.size();
  }

  std::vector<std::string> surfaces() const {
    std::vector<std::string> out;
    out.reserve(tokens_.size());
    for (const auto& t : tokens_) out.push_back(t.surface);
    return out;
  }

  /// Space-joined real tokens.
  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < real_size(); ++i) {
      if (i) out += ' ';
      out += tokens_[i].surface;
    }
    return out;
  }

 private:
  std::vector<Token> tokens_;
  std::string raw_;
};

using SentencePtr = std::shared_ptr<const Sentence>;

// ---------------------------------------------------------------------------
// Label alphabets

enum class OieLabel : std::uint8_t { S = 0, R = 1, O = 2, N = 3 };
enum class CoordLabel : std::uint8_t { CC = 0, CONJ = 1, NONE = 2 };

template <typename Label>
struct LabelTraits;

template <>
struct LabelTraits<OieLabel> {
  static constexpr std::size_t kSize = 4;
  static constexpr OieLabel kNone = OieLabel::N;
  static constexpr std::string_view names[kSize] = {"S", "R", "O", "N"};
};

template <>
struct LabelTraits<CoordLabel> {
  static constexpr std::size_t kSize = 3;
  static constexpr CoordLabel kNone = CoordLabel::NONE;
  // "N" is accepted on input as an alias for NONE.
  static constexpr std::string_view names[kSize] = {"CC", "CONJ", "N"};
};

template <typename Label>
constexpr std::size_t label_index(Label l) {
  return static_cast<std::size_t>(l);
}

template <typename Label>
constexpr Label label_from_index(std::size_t k) {
  return static_cast<Label>(k);
}

template <typename Label>
std::string_view label_name(Label l) {
  return LabelTraits<Label>::names[label_index(l)];
}

template <typename Label>
Label parse_label(std::string_view s) {
  for (std::size_t k = 0; k < LabelTraits<Label>::kSize; ++k) {
    if (LabelTraits<Label>::names[k] == s) return label_from_index<Label>(k);
  }
  if constexpr (std::is_same_v<Label, CoordLabel>) {
    if (s == "NONE") return CoordLabel::NONE;
  }
  throw ValidationError("unknown label '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Label grids

/// M x N matrix of hard labels, one row per extraction (or coordination level).
template <typename Label>
class HardGrid {
 public:
  HardGrid() = default;
  HardGrid(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), cells_(rows * cols, LabelTraits<Label>::kNone) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Label& operator()(std::size_t m, std::size_t n) { return cells_[m * cols_ + n]; }
  Label operator()(std::size_t m, std::size_t n) const { return cells_[m * cols_ + n]; }

  std::vector<Label> row(std::size_t m) const {
    return {cells_.begin() + static_cast<std::ptrdiff_t>(m * cols_),
            cells_.begin() + static_cast<std::ptrdiff_t>((m + 1) * cols_)};
  }
  void set_row(std::size_t m, const std::vector<Label>& labels) {
    if (labels.size() != cols_) throw ValidationError("row length does not match grid width");
    std::copy(labels.begin(), labels.end(),
              cells_.begin() + static_cast<std::ptrdiff_t>(m * cols_));
  }
  bool row_is_empty(std::size_t m) const {
    for (std::size_t n = 0; n < cols_; ++n) {
      if ((*this)(m, n) != LabelTraits<Label>::kNone) return false;
    }
    return true;
  }

  bool operator==(const HardGrid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Label> cells_;
};

/// M x N grid whose cells are probability distributions over the alphabet.
template <typename Label, typename T = double>
class ProbGrid {
 public:
  static constexpr std::size_t kLabels = LabelTraits<Label>::kSize;

  ProbGrid() = default;
  ProbGrid(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), cells_(rows * cols * kLabels, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t m, std::size_t n, Label k) {
    return cells_[(m * cols_ + n) * kLabels + label_index(k)];
  }
  T operator()(std::size_t m, std::size_t n, Label k) const {
    return cells_[(m * cols_ + n) * kLabels + label_index(k)];
  }
  T& at(std::size_t m, std::size_t n, std::size_t k) {
    return cells_[(m * cols_ + n) * kLabels + k];
  }
  T at(std::size_t m, std::size_t n, std::size_t k) const {
    return cells_[(m * cols_ + n) * kLabels + k];
  }

  Label argmax(std::size_t m, std::size_t n) const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kLabels; ++k) {
      if (at(m, n, k) > at(m, n, best)) best = k;
    }
    return label_from_index<Label>(best);
  }

  HardGrid<Label> hard() const {
    HardGrid<Label> g(rows_, cols_);
    for (std::size_t m = 0; m < rows_; ++m)
      for (std::size_t n = 0; n < cols_; ++n) g(m, n) = argmax(m, n);
    return g;
  }

  /// True when every cell sums to one within `tol`.
  bool normalized(double tol = 1e-6) const {
    for (std::size_t c = 0; c < rows_ * cols_; ++c) {
      double sum = 0;
      for (std::size_t k = 0; k < kLabels; ++k) sum += static_cast<double>(cells_[c * kLabels + k]);
      if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
  }

  static ProbGrid one_hot(const HardGrid<Label>& g) {
    ProbGrid p(g.rows(), g.cols());
    for (std::size_t m = 0; m < g.rows(); ++m)
      for (std::size_t n = 0; n < g.cols(); ++n) p(m, n, g(m, n)) = T(1);
    return p;
  }

  std::vector<T>& data() { return cells_; }
  const std::vector<T>& data() const { return cells_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> cells_;
};

/// Probability grid plus the per-cell argmax labels it was decoded from.
template <typename Label>
struct PredictedGrid {
  ProbGrid<Label> probs;
  HardGrid<Label> labels;
};

// ---------------------------------------------------------------------------
// Extractions

struct Extraction {
  std::vector<std::size_t> subject;
  std::vector<std::size_t> relation;
  std::vector<std::size_t> object;
  /// Length-normalized log-probability; exponentiate only for display.
  double confidence = 0.0;
  SentencePtr source;
};

/// A gold or system extraction expressed as plain text.
struct TextTriple {
  std::string subject;
  std::string relation;
  std::string object;

  auto operator<=>(const TextTriple&) const = default;
};

/// Checks sortedness, index bounds, non-empty relation and slot disjointness.
inline void validate_extraction(const Extraction& e, const Sentence& s) {
  if (e.relation.empty()) throw ValidationError("extraction has an empty relation");
  const std::vector<std::size_t>* slots[] = {&e.subject, &e.relation, &e.object};
  std::vector<std::size_t> all;
  for (const auto* slot : slots) {
    if (!std::is_sorted(slot->begin(), slot->end()))
      throw ValidationError("extraction slot indices are not sorted");
    for (auto i : *slot) {
      if (i >= s.size()) {
        throw ValidationError("extraction index " + std::to_string(i) +
                              " out of range for sentence of length " +
                              std::to_string(s.size()));
      }
      all.push_back(i);
    }
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw ValidationError("token index appears in two slots of one extraction");
}

/// Surfaces of one slot in rendering order: "[is]" leads, the real words
/// follow in sentence order, "[of]" and "[from]" trail.
inline std::vector<std::string_view> slot_surfaces(const std::vector<std::size_t>& idx,
                                                   const Sentence& s) {
  std::vector<std::string_view> lead, body, tail;
  for (auto i : idx) {
    const Token& t = s.at(i);
    if (!t.is_appended) {
      body.push_back(t.surface);
    } else if (t.surface == kAppendedIs) {
      lead.push_back(t.surface);
    } else {
      tail.push_back(t.surface);
    }
  }
  lead.insert(lead.end(), body.begin(), body.end());
  lead.insert(lead.end(), tail.begin(), tail.end());
  return lead;
}

inline std::string join(const std::vector<std::string_view>& words, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

/// Slot text with appended tokens kept in their bracketed form.
inline std::string slot_text(const std::vector<std::size_t>& idx, const Sentence& s) {
  return join(slot_surfaces(idx, s));
}

inline TextTriple to_text(const Extraction& e, const Sentence& s) {
  return {slot_text(e.subject, s), slot_text(e.relation, s), slot_text(e.object, s)};
}

/// "[is]" -> "is"; other words unchanged.
inline std::string_view unbracket(std::string_view w) {
  if (is_appended_surface(w)) return w.substr(1, w.size() - 2);
  return w;
}

/// Subject, relation and object words joined by single spaces, appended
/// tokens without brackets, empty slots omitted.
inline std::string serialize_extraction(const Extraction& e, const Sentence& s) {
  validate_extraction(e, s);
  std::vector<std::string_view> words;
  for (const auto* slot : {&e.subject, &e.relation, &e.object}) {
    for (auto w : slot_surfaces(*slot, s)) words.push_back(unbracket(w));
  }
  return join(words);
}

// ---------------------------------------------------------------------------
// Dedup keys

inline std::string casefold(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Case-folds and collapses whitespace runs; trims both ends. Idempotent.
inline std::string normalize_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

struct DedupKey {
  std::string subject;
  std::string relation;
  std::string object;

  auto operator<=>(const DedupKey&) const = default;
};

inline DedupKey normalize_triple(const TextTriple& t) {
  return {normalize_text(t.subject), normalize_text(t.relation), normalize_text(t.object)};
}

inline DedupKey normalize_extraction(const Extraction& e, const Sentence& s) {
  return normalize_triple(to_text(e, s));
}

// ---------------------------------------------------------------------------
// Coordination

struct Span {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive

  std::size_t size() const { return end - begin; }
  bool contains(const Span& o) const { return begin <= o.begin && o.end <= end; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  auto operator<=>(const Span&) const = default;
};

struct CoordinationStructure {
  std::size_t level = 0;
  std::size_t coordinator = 0;
  std::vector<Span> conjuncts;

  /// From the first conjunct's start to the last conjunct's end.
  Span span() const { return {conjuncts.front().begin, conjuncts.back().end}; }

  bool operator==(const CoordinationStructure&) const = default;
};

inline void validate_structure(const CoordinationStructure& c) {
  if (c.conjuncts.size() < 2) throw ValidationError("coordination needs at least two conjuncts");
  for (std::size_t i = 0; i < c.conjuncts.size(); ++i) {
    if (c.conjuncts[i].size() == 0) throw ValidationError("empty conjunct span");
    if (i && c.conjuncts[i - 1].end > c.conjuncts[i].begin)
      throw ValidationError("conjunct spans overlap or are out of order");
  }
  Span s = c.span();
  if (c.coordinator + 1 < s.begin || c.coordinator > s.end)
    throw ValidationError("coordinator is not adjacent to its conjuncts");
}

}  // namespace igl
