// Templated toy corpora with gold extractions, gold POS tags and gold
// coordination rows. Used by tests, the acceptance suite and `igl synth`.
#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "igl/core.hpp"
#include "igl/lingo.hpp"

namespace igl::synthetic {

using lingo::PosTag;

struct OieSample {
  Sentence sentence;  // real tokens only
  std::vector<PosTag> tags;
  std::vector<TextTriple> gold;
};

struct CoordSample {
  Sentence sentence;
  std::vector<std::vector<CoordLabel>> levels;  // one label row per level
};

namespace words {
inline const std::vector<std::string> kNames = {"John", "Mary", "Alice", "Robert", "Susan", "David",
                                                "Linda", "Peter", "Laura", "Kevin", "Nancy", "Oscar"};
inline const std::vector<std::string> kVerbs = {"bought", "painted", "visited", "cooked", "sold",  "built",
                                                "found",  "wrote",   "opened",  "cleaned", "repaired", "borrowed"};
inline const std::vector<std::string> kNouns = {"car",    "house", "boat",  "letter", "garden", "bridge",
                                                "window", "cake",  "piano", "camera", "ticket", "lamp"};
inline const std::vector<std::string> kAdjs = {"old", "red", "small", "famous", "quiet", "bright"};
inline const std::vector<std::string> kRoles = {"mayor", "doctor", "teacher", "captain", "baker", "judge"};
inline const std::vector<std::string> kPlaces = {"Paris", "Rome", "Berlin", "Madrid", "Vienna", "Oslo"};
inline const std::vector<std::string> kPreps = {"near", "behind", "beside"};
inline const std::vector<std::string> kDets = {"the", "a"};
}  // namespace words

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  /// `drop_last` is the probability of withholding the final gold triple of
  /// a two-triple sentence, imitating incomplete bootstrapped training data.
  std::vector<OieSample> oie(std::size_t count, double drop_last = 0.0) {
    std::vector<OieSample> out;
    out.reserve(count);
    std::bernoulli_distribution drop(drop_last);
    for (std::size_t i = 0; i < count; ++i) {
      auto s = oie_one(i % 5);
      if (s.gold.size() > 1 && drop(rng_)) s.gold.pop_back();
      out.push_back(std::move(s));
    }
    return out;
  }

  std::vector<CoordSample> coord(std::size_t count, std::size_t levels) {
    std::vector<CoordSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(coord_one(i % 4, levels));
    return out;
  }

 private:
  struct Builder {
    std::vector<std::string> w;
    std::vector<PosTag> t;
    std::size_t add(const std::string& word, PosTag tag) {
      w.push_back(word);
      t.push_back(tag);
      return w.size() - 1;
    }
    std::string text(std::size_t b, std::size_t e) const {
      std::string s;
      for (std::size_t i = b; i < e; ++i) s += (i > b ? " " : "") + w[i];
      return s;
    }
  };

  const std::string& pick(const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  const std::string& pick_other(const std::vector<std::string>& v, const std::string& avoid) {
    for (;;) {
      const auto& w = pick(v);
      if (w != avoid) return w;
    }
  }

  OieSample finish(Builder& b, std::vector<TextTriple> gold) {
    auto s = Sentence(b.w, b.text(0, b.w.size()));
    return {std::move(s), b.t, std::move(gold)};
  }

  OieSample oie_one(std::size_t kind) {
    Builder b;
    const auto& name = pick(words::kNames);
    switch (kind) {
      case 0: {  // NAME VERB DET NOUN .
        b.add(name, PosTag::NOUN);
        auto v = b.add(pick(words::kVerbs), PosTag::VERB);
        auto o = b.add(pick(words::kDets), PosTag::OTHER);
        b.add(pick(words::kNouns), PosTag::NOUN);
        b.add(".", PosTag::OTHER);
        return finish(b, {{name, b.w[v], b.text(o, o + 2)}});
      }
      case 1: {  // NAME VERB DET NOUN PREP DET NOUN .
        b.add(name, PosTag::NOUN);
        auto v = b.add(pick(words::kVerbs), PosTag::VERB);
        auto o = b.add(pick(words::kDets), PosTag::OTHER);
        b.add(pick(words::kNouns), PosTag::NOUN);
        b.add(pick(words::kPreps), PosTag::OTHER);
        b.add(pick(words::kDets), PosTag::OTHER);
        b.add(pick(words::kNouns), PosTag::NOUN);
        b.add(".", PosTag::OTHER);
        return finish(b, {{name, b.w[v], b.text(o, o + 5)}});
      }
      case 2: {  // NAME is DET ADJ NOUN .
        b.add(name, PosTag::NOUN);
        b.add("is", PosTag::VERB);
        auto o = b.add(pick(words::kDets), PosTag::OTHER);
        b.add(pick(words::kAdjs), PosTag::ADJ);
        b.add(pick(words::kNouns), PosTag::NOUN);
        b.add(".", PosTag::OTHER);
        return finish(b, {{name, "is", b.text(o, o + 3)}});
      }
      case 3: {  // NAME VERB DET NOUN after NAME VERB DET NOUN .
        b.add(name, PosTag::NOUN);
        auto v1 = b.add(pick(words::kVerbs), PosTag::VERB);
        auto o1 = b.add(pick(words::kDets), PosTag::OTHER);
        auto n1 = b.add(pick(words::kNouns), PosTag::NOUN);
        b.add("after", PosTag::OTHER);
        // Distinct second subject and object keep every gold argument alignable.
        auto s2 = b.add(pick_other(words::kNames, name), PosTag::NOUN);
        auto v2 = b.add(pick(words::kVerbs), PosTag::VERB);
        auto o2 = b.add(pick(words::kDets), PosTag::OTHER);
        b.add(pick_other(words::kNouns, b.w[n1]), PosTag::NOUN);
        b.add(".", PosTag::OTHER);
        return finish(b, {{name, b.w[v1], b.text(o1, o1 + 2)}, {b.w[s2], b.w[v2], b.text(o2, o2 + 2)}});
      }
      default: {  // NAME , the ROLE of PLACE , VERB DET NOUN .
        b.add(name, PosTag::NOUN);
        b.add(",", PosTag::OTHER);
        auto r = b.add("the", PosTag::OTHER);
        b.add(pick(words::kRoles), PosTag::NOUN);
        b.add("of", PosTag::OTHER);
        auto p = b.add(pick(words::kPlaces), PosTag::NOUN);
        b.add(",", PosTag::OTHER);
        auto v = b.add(pick(words::kVerbs), PosTag::VERB);
        auto o = b.add(pick(words::kDets), PosTag::OTHER);
        b.add(pick(words::kNouns), PosTag::NOUN);
        b.add(".", PosTag::OTHER);
        return finish(b, {{name, b.w[v], b.text(o, o + 2)}, {name, "[is] " + b.text(r, r + 3), b.w[p]}});
      }
    }
  }

  CoordSample coord_one(std::size_t kind, std::size_t levels) {
    Builder b;
    std::vector<CoordLabel> row;
    auto lab = [&](const std::string& w, CoordLabel l) {
      b.add(w, PosTag::OTHER);
      row.push_back(l);
    };
    auto conj_np = [&] {
      lab(pick(words::kDets), CoordLabel::CONJ);
      lab(pick(words::kNouns), CoordLabel::CONJ);
    };
    lab(pick(words::kNames), CoordLabel::NONE);
    lab(pick(words::kVerbs), CoordLabel::NONE);
    switch (kind) {
      case 0:  // X and Y
        conj_np();
        lab("and", CoordLabel::CC);
        conj_np();
        break;
      case 1:  // X , Y and Z
        conj_np();
        lab(",", CoordLabel::NONE);
        conj_np();
        lab("and", CoordLabel::CC);
        conj_np();
        break;
      case 2:  // X or Y near the Z
        conj_np();
        lab("or", CoordLabel::CC);
        conj_np();
        lab(pick(words::kPreps), CoordLabel::NONE);
        lab("the", CoordLabel::NONE);
        lab(pick(words::kNouns), CoordLabel::NONE);
        break;
      default:  // no coordination
        lab(pick(words::kDets), CoordLabel::NONE);
        lab(pick(words::kAdjs), CoordLabel::NONE);
        lab(pick(words::kNouns), CoordLabel::NONE);
        break;
    }
    lab(".", CoordLabel::NONE);
    CoordSample s{Sentence(b.w, b.text(0, b.w.size())), {}};
    s.levels.push_back(row);
    for (std::size_t m = 1; m < levels; ++m) s.levels.emplace_back(row.size(), CoordLabel::NONE);
    return s;
  }

  std::mt19937_64 rng_;
};

}  // namespace igl::synthetic
