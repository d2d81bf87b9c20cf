#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "igl/decode.hpp"
#include "igl/pipeline.hpp"
#include "igl/synthetic.hpp"
#include "scenarios.hpp"

using namespace igl;

namespace {

SentencePtr share(Sentence s) { return std::make_shared<const Sentence>(std::move(s)); }

HardGrid<OieLabel> row_grid(const std::string& labels) {
  std::istringstream in(labels);
  std::vector<OieLabel> row;
  std::string t;
  while (in >> t) row.push_back(parse_label<OieLabel>(t));
  HardGrid<OieLabel> g(1, row.size());
  g.set_row(0, row);
  return g;
}

HardGrid<CoordLabel> coord_row(const std::string& labels) {
  std::istringstream in(labels);
  std::vector<CoordLabel> row;
  std::string t;
  while (in >> t) row.push_back(parse_label<CoordLabel>(t));
  HardGrid<CoordLabel> g(1, row.size());
  g.set_row(0, row);
  return g;
}

std::vector<std::string> leaf_texts(const pipeline::SplitTree& t) {
  std::vector<std::string> out;
  for (const auto& l : t.leaves) out.push_back(l.sentence.text());
  return out;
}

std::set<DedupKey> keys(const std::vector<Extraction>& es) {
  std::set<DedupKey> out;
  for (const auto& e : es) out.insert(normalize_extraction(e, *e.source));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// grid_to_extractions

TEST(DecodeOie, FigureOneRow) {
  auto s = share(lingo::append_special(lingo::tokenize("Rome , the capital of Italy")));
  auto g = row_grid("S N R R R O R N N");
  auto es = decode::grid_to_extractions(g, s);
  ASSERT_EQ(es.size(), 1u);
  EXPECT_EQ(to_text(es[0], *s), (TextTriple{"Rome", "[is] the capital of", "Italy"}));
  EXPECT_EQ(es[0].confidence, 0.0);
}

TEST(DecodeOie, EmptyAndRelationlessRowsAreDropped) {
  auto s = share(lingo::tokenize("a b c"));
  HardGrid<OieLabel> g(3, 3);
  g(1, 0) = OieLabel::S;
  g(1, 2) = OieLabel::O;
  g(2, 0) = OieLabel::S;
  g(2, 1) = OieLabel::R;
  auto es = decode::grid_to_extractions(g, s);
  ASSERT_EQ(es.size(), 1u);
  EXPECT_EQ(es[0].relation, (std::vector<std::size_t>{1}));
}

TEST(DecodeOie, RequireSubjectAndMinConfidence) {
  auto s = share(lingo::tokenize("a b c"));
  auto hard = row_grid("N R O");
  PredictedGrid<OieLabel> p{ProbGrid<OieLabel>::one_hot(hard), hard};
  decode::DecodeConfig cfg;
  EXPECT_EQ(decode::grid_to_extractions(p, s, cfg).size(), 1u);
  cfg.require_subject = true;
  EXPECT_TRUE(decode::grid_to_extractions(p, s, cfg).empty());
  cfg.require_subject = false;
  p.probs(0, 1, OieLabel::R) = 0.5;
  p.probs(0, 1, OieLabel::N) = 0.5;
  cfg.min_confidence = -0.1;
  EXPECT_TRUE(decode::grid_to_extractions(p, s, cfg).empty());
}

TEST(DecodeOie, ConfidenceIsMeanLogProbability) {
  auto s = share(lingo::tokenize("a b c d"));
  auto hard = row_grid("S R N O");
  PredictedGrid<OieLabel> p{ProbGrid<OieLabel>::one_hot(hard), hard};
  p.probs(0, 0, OieLabel::S) = 0.8;
  p.probs(0, 0, OieLabel::N) = 0.2;
  p.probs(0, 3, OieLabel::O) = 0.5;
  p.probs(0, 3, OieLabel::R) = 0.5;
  auto es = decode::grid_to_extractions(p, s);
  ASSERT_EQ(es.size(), 1u);
  EXPECT_NEAR(es[0].confidence, (std::log(0.8) + std::log(1.0) + std::log(0.5)) / 3, 1e-12);
}

TEST(DecodeOie, TotalAndWellFormedOnRandomGrids) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t rows = 1 + rng() % 5, cols = 1 + rng() % 9;
    std::vector<std::string> w;
    for (std::size_t i = 0; i < cols; ++i) w.push_back("w" + std::to_string(i));
    auto s = share(Sentence(w, ""));
    HardGrid<OieLabel> g(rows, cols);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t n = 0; n < cols; ++n) g(m, n) = static_cast<OieLabel>(rng() % 4);
    auto es = decode::grid_to_extractions(g, s);
    for (const auto& e : es) {
      EXPECT_NO_THROW(validate_extraction(e, *s));
      EXPECT_LE(e.confidence, 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// grid_to_coordinations

TEST(DecodeCoord, CommaSeparatedList) {
  auto s = lingo::tokenize("apples , oranges and bananas");
  auto cs = decode::grid_to_coordinations(coord_row("CONJ N CONJ CC CONJ"), s);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].coordinator, 3u);
  EXPECT_EQ(cs[0].conjuncts, (std::vector<Span>{{0, 1}, {2, 3}, {4, 5}}));
  EXPECT_EQ(cs[0].level, 0u);
}

TEST(DecodeCoord, NoneRowAndLoneConjunct) {
  auto s = lingo::tokenize("a b c");
  EXPECT_TRUE(decode::grid_to_coordinations(coord_row("N N N"), s).empty());
  EXPECT_TRUE(decode::grid_to_coordinations(coord_row("CONJ CC N"), s).empty());
  EXPECT_TRUE(decode::grid_to_coordinations(coord_row("CONJ N CONJ"), s).empty());
}

TEST(DecodeCoord, OtherTokensBreakChains) {
  auto s = lingo::tokenize("x and y ; p or q");
  auto cs = decode::grid_to_coordinations(coord_row("CONJ CC CONJ N CONJ CC CONJ"), s);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].coordinator, 1u);
  EXPECT_EQ(cs[1].coordinator, 5u);
}

TEST(DecodeCoord, TableOneLevels) {
  auto s = lingo::tokenize(scenario::kLens);
  auto cs = decode::grid_to_coordinations(scenario::lens_coord_grid(), s);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].level, 0u);
  EXPECT_EQ(cs[0].conjuncts, (std::vector<Span>{{6, 9}, {10, 13}, {15, 23}}));
  EXPECT_EQ(cs[1].level, 1u);
  EXPECT_EQ(cs[1].conjuncts, (std::vector<Span>{{16, 17}, {18, 19}}));
  EXPECT_TRUE(cs[0].conjuncts[2].contains(cs[1].span()));
}

TEST(DecodeCoord, TotalAndDisjointWithinLevel) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t rows = 1 + rng() % 3, cols = 1 + rng() % 12;
    std::vector<std::string> w;
    for (std::size_t i = 0; i < cols; ++i) w.push_back(rng() % 5 == 0 ? "," : "w");
    Sentence s(w, "");
    HardGrid<CoordLabel> g(rows, cols);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t n = 0; n < cols; ++n) g(m, n) = static_cast<CoordLabel>(rng() % 3);
    auto cs = decode::grid_to_coordinations(g, s);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      EXPECT_NO_THROW(validate_structure(cs[i]));
      for (std::size_t j = i + 1; j < cs.size(); ++j)
        if (cs[i].level == cs[j].level) EXPECT_FALSE(cs[i].span().overlaps(cs[j].span()));
    }
  }
}

// ---------------------------------------------------------------------------
// split_sentence

TEST(Split, NoStructuresIsIdentity) {
  auto s = lingo::tokenize("John ate an apple .");
  auto t = pipeline::split_sentence(s, {});
  ASSERT_EQ(t.leaves.size(), 1u);
  EXPECT_EQ(t.leaves[0].sentence.surfaces(), s.surfaces());
}

TEST(Split, TableOneYieldsFourLeaves) {
  auto s = lingo::tokenize(scenario::kLens);
  auto t = pipeline::split_sentence(s, decode::grid_to_coordinations(scenario::lens_coord_grid(), s));
  EXPECT_EQ(leaf_texts(t), scenario::kLensLeaves);
}

TEST(Split, LeavesAreSubsequencesAndFixedPoints) {
  auto s = lingo::tokenize(scenario::kLens);
  auto t = pipeline::split_sentence(s, decode::grid_to_coordinations(scenario::lens_coord_grid(), s));
  for (const auto& l : t.leaves) {
    ASSERT_EQ(l.origin.size(), l.sentence.size());
    for (std::size_t i = 0; i < l.origin.size(); ++i) {
      EXPECT_EQ(l.sentence[i].surface, s[l.origin[i]].surface);
      if (i) EXPECT_LT(l.origin[i - 1], l.origin[i]);
    }
    auto again = pipeline::split_sentence(l.sentence, {});
    EXPECT_EQ(again.leaves[0].sentence.surfaces(), l.sentence.surfaces());
  }
}

TEST(Split, BetweenIsNotSplit) {
  auto s = lingo::tokenize(scenario::kBetween);
  auto t = pipeline::split_sentence(s, decode::grid_to_coordinations(scenario::between_coord_grid(), s));
  EXPECT_EQ(leaf_texts(t), std::vector<std::string>{scenario::kBetween});
}

TEST(Split, PlainCoordinationIsSplit) {
  auto s = lingo::tokenize("I ate an apple and an orange .");
  CoordinationStructure c{0, 4, {{2, 4}, {5, 7}}};
  auto t = pipeline::split_sentence(s, {c});
  EXPECT_EQ(leaf_texts(t), (std::vector<std::string>{"I ate an apple .", "I ate an orange ."}));
}

TEST(Split, DuplicateLeavesCollapse) {
  auto s = lingo::tokenize("cats and cats sleep");
  CoordinationStructure c{0, 1, {{0, 1}, {2, 3}}};
  EXPECT_EQ(leaf_texts(pipeline::split_sentence(s, {c})), std::vector<std::string>{"cats sleep"});
}

TEST(Split, SameLevelOverlapIsRejected) {
  auto s = lingo::tokenize("a and b and c");
  CoordinationStructure x{0, 1, {{0, 1}, {2, 3}}};
  CoordinationStructure y{0, 3, {{2, 3}, {4, 5}}};
  EXPECT_THROW(pipeline::split_sentence(s, {x, y}), ValidationError);
}

// ---------------------------------------------------------------------------
// extract

TEST(Extract, TableOneWithOracles) {
  auto o = scenario::lens_oracles();
  auto es = pipeline::extract(scenario::kLens, o.oie, &o.coord);
  std::set<DedupKey> want;
  for (const auto& t : scenario::kLensTriples) want.insert(normalize_triple(t));
  EXPECT_EQ(keys(es), want);
  EXPECT_EQ(es.size(), 4u);
}

TEST(Extract, NeutralWithoutCoordinations) {
  auto s = lingo::append_special(lingo::tokenize("John ate an apple ."));
  pipeline::OracleOieSource oie(3);
  HardGrid<OieLabel> g(3, s.size());
  g.set_row(0, {OieLabel::S, OieLabel::R, OieLabel::O, OieLabel::O, OieLabel::N, OieLabel::N, OieLabel::N, OieLabel::N});
  oie.add(s, g);
  pipeline::OracleCoordSource none(3);
  auto alone = pipeline::extract_sentence(s, oie);
  auto piped = pipeline::extract_sentence(s, oie, &none);
  ASSERT_EQ(alone.extractions.size(), 1u);
  EXPECT_EQ(keys(alone.extractions), keys(piped.extractions));
  EXPECT_EQ(piped.leaves, 1u);
}

TEST(Extract, MergeKeepsBestDuplicateAndSorts) {
  auto a = share(lingo::tokenize("I ate an apple ."));
  auto b = share(lingo::tokenize("I ate an apple and pie ."));
  std::vector<Extraction> all = {
      {{0}, {1}, {2, 3}, -0.5, a},
      {{0}, {1}, {2, 3}, -0.1, b},
      {{0}, {1}, {5}, -0.3, b},
  };
  auto m = pipeline::merge_extractions(all);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].confidence, -0.1);
  EXPECT_EQ(m[1].confidence, -0.3);
}

TEST(Extract, RescorerIsApplied) {
  struct Halve final : pipeline::Rescorer {
    double rescore(const Sentence&, const Extraction& e) const override { return e.confidence - 1; }
  };
  auto o = scenario::lens_oracles();
  auto es = pipeline::extract_sentence(lingo::tokenize(scenario::kLens), o.oie, &o.coord, {}, Halve{}).extractions;
  for (const auto& e : es) EXPECT_EQ(e.confidence, -1.0);
}

// ---------------------------------------------------------------------------
// align_gold

TEST(Align, UniqueMatches) {
  auto s = lingo::append_special(lingo::tokenize("Rome is the capital of Italy"));
  auto r = pipeline::align_gold(s, {"Rome", "is the capital of", "Italy"});
  ASSERT_FALSE(r.skipped()) << r.skip_reason;
  using L = OieLabel;
  EXPECT_EQ(r.row, (std::vector<L>{L::S, L::R, L::R, L::R, L::R, L::O, L::N, L::N, L::N}));
}

TEST(Align, AppendedTokenFallback) {
  auto s = lingo::append_special(lingo::tokenize("Rome , the capital of Italy"));
  auto r = pipeline::align_gold(s, {"Rome", "is the capital of", "Italy"});
  ASSERT_FALSE(r.skipped()) << r.skip_reason;
  EXPECT_EQ(r.row[6], OieLabel::R);
  auto b = pipeline::align_gold(s, {"Rome", "[is] the capital of", "Italy"});
  EXPECT_EQ(b.row, r.row);
  auto f = pipeline::align_gold(lingo::append_special(lingo::tokenize("Obama , president the US")),
                                {"Obama", "[is] president [of]", "the US"});
  ASSERT_FALSE(f.skipped()) << f.skip_reason;
}

TEST(Align, IdenticalArgumentsTakeSentenceOrder) {
  auto s = lingo::append_special(lingo::tokenize("the dog chased the dog"));
  auto r = pipeline::align_gold(s, {"the dog", "chased", "the dog"});
  ASSERT_FALSE(r.skipped()) << r.skip_reason;
  using L = OieLabel;
  EXPECT_EQ(r.row, (std::vector<L>{L::S, L::S, L::R, L::O, L::O, L::N, L::N, L::N}));
}

TEST(Align, AmbiguousArgumentClosestToAnchors) {
  auto s = lingo::append_special(lingo::tokenize("Bob met Ann , then Ann left and Bob met Carl"));
  auto r = pipeline::align_gold(s, {"Bob", "left", "Ann"});
  ASSERT_TRUE(r.skipped());  // subject and object both repeat
  auto q = pipeline::align_gold(s, {"Ann", "left", ""});
  ASSERT_FALSE(q.skipped()) << q.skip_reason;
  EXPECT_EQ(q.row[5], OieLabel::S);
  EXPECT_EQ(q.row[2], OieLabel::N);
}

TEST(Align, TwoAmbiguousArgumentsSkip) {
  auto s = lingo::append_special(lingo::tokenize("a cat saw a dog and a cat saw a dog"));
  auto r = pipeline::align_gold(s, {"a cat", "saw", "a dog"});
  EXPECT_TRUE(r.skipped());
  EXPECT_EQ(r.skip_reason, "multiple matches for more than one argument");
}

TEST(Align, BareAppendedRelation) {
  auto s = lingo::append_special(lingo::tokenize("Max , a pilot , flies jets ."));
  auto r = pipeline::align_gold(s, {"Max", "[is]", "a pilot"});
  ASSERT_FALSE(r.skipped()) << r.skip_reason;
  EXPECT_EQ(r.row[s.real_size()], OieLabel::R);
  auto of = pipeline::align_gold(s, {"Max", "[of]", "a pilot"});
  ASSERT_FALSE(of.skipped()) << of.skip_reason;
  EXPECT_EQ(of.row[s.real_size() + 1], OieLabel::R);
}

TEST(Align, MissingArgumentSkipsWithReason) {
  auto s = lingo::append_special(lingo::tokenize("Rome is old"));
  auto r = pipeline::align_gold(s, {"Paris", "is", "old"});
  EXPECT_TRUE(r.skipped());
  EXPECT_NE(r.skip_reason.find("subject"), std::string::npos);
}

TEST(Align, RoundTripOnRandomSyntheticPairs) {
  synthetic::Generator gen(5);
  for (const auto& sample : gen.oie(100)) {
    auto s = lingo::append_special(sample.sentence);
    auto sp = share(s);
    for (const auto& t : sample.gold) {
      auto r = pipeline::align_gold(s, t);
      ASSERT_FALSE(r.skipped()) << r.skip_reason << " | " << sample.sentence.raw() << " | " << t.subject << " / " << t.relation << " / " << t.object;
      HardGrid<OieLabel> g(1, s.size());
      g.set_row(0, r.row);
      auto es = decode::grid_to_extractions(g, sp);
      ASSERT_EQ(es.size(), 1u);
      EXPECT_EQ(to_text(es[0], s), t);
    }
  }
}

TEST(GoldGrid, RowsOrderedPaddedAndTruncated) {
  auto s = lingo::append_special(lingo::tokenize("Ann sang and Bob danced"));
  std::vector<TextTriple> gold = {{"Bob", "danced", ""}, {"Ann", "sang", ""}, {"Ann", "sang", ""}};
  auto g = pipeline::build_gold_grid(s, gold, 3);
  EXPECT_EQ(g.aligned, 2u);
  EXPECT_EQ(g.grid(0, 1), OieLabel::R);
  EXPECT_EQ(g.grid(1, 4), OieLabel::R);
  EXPECT_TRUE(g.grid.row_is_empty(2));
  auto t = pipeline::build_gold_grid(s, gold, 1);
  EXPECT_EQ(t.truncated, 1u);
  EXPECT_EQ(t.grid(0, 1), OieLabel::R);
}
