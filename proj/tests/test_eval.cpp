#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "igl/eval/assignment.hpp"
#include "igl/eval/scorers.hpp"
#include "igl/io.hpp"
#include "oracles.hpp"

using namespace igl;
using namespace igl::eval;

namespace {

ExtractionSet one(std::initializer_list<TextTriple> triples, const std::string& id = "1") {
  ExtractionSet s;
  for (const auto& t : triples) s[id].push_back({t, 0.0});
  return s;
}

ExtractionSet fixture(const std::string& name, bool system) {
  return io::read_extractions(std::string(IGL_FIXTURE_DIR) + "/coordination_scoring/" + name + ".tsv", system);
}

void expect_prf(const ScoreReport& r, double p, double rc, double f, double tol = 0.05) {
  EXPECT_NEAR(r.precision, p, tol);
  EXPECT_NEAR(r.recall, rc, tol);
  EXPECT_NEAR(r.f1, f, tol);
}

}  // namespace

// ---------------------------------------------------------------------------
// Assignment

TEST(Assignment, MatchesBruteForceOnSmallInstances) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t rows = 1 + rng() % 5, cols = 1 + rng() % 5;
    WeightMatrix w(rows, std::vector<double>(cols));
    for (auto& r : w)
      for (auto& v : r) v = static_cast<double>(rng() % 5);
    auto a = max_weight_assignment(w);
    EXPECT_DOUBLE_EQ(a.total, oracle::brute_force_assignment(w));
    std::vector<bool> used(cols, false);
    double sum = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      auto c = a.row_to_col[r];
      if (c == kUnassigned) continue;
      ASSERT_LT(c, cols);
      EXPECT_FALSE(used[c]);
      used[c] = true;
      EXPECT_GT(w[r][c], 0.0);
      sum += w[r][c];
    }
    EXPECT_DOUBLE_EQ(sum, a.total);
  }
}

TEST(Assignment, GreedyTakesLargestFirst) {
  WeightMatrix w = {{3, 2}, {2, 0}};
  auto g = greedy_assignment(w);
  EXPECT_EQ(g.row_to_col[0], 0u);
  EXPECT_EQ(g.row_to_col[1], kUnassigned);
  EXPECT_EQ(g.total, 3.0);
  EXPECT_EQ(max_weight_assignment(w).total, 4.0);
}

TEST(Assignment, RejectsNegativeWeights) {
  EXPECT_THROW(max_weight_assignment({{-1.0}}), ValidationError);
}

TEST(Assignment, EmptyAndRagged) {
  EXPECT_EQ(max_weight_assignment({}).total, 0.0);
  EXPECT_THROW(max_weight_assignment({{1, 2}, {1}}), ValidationError);
}

// ---------------------------------------------------------------------------
// Split versus unsplit coordination fixtures

TEST(CoordinationScoring, TalksSystemOne) {
  auto g = fixture("talks_gold", false), s = fixture("talks_system1", true);
  expect_prf(carb_score(s, g), 50.0, 66.67, 57.14);
  expect_prf(carb_one_one(s, g), 50.0, 66.67, 57.14);
}

TEST(CoordinationScoring, TalksSystemTwo) {
  auto g = fixture("talks_gold", false), s = fixture("talks_system2", true);
  expect_prf(carb_score(s, g), 100, 100, 100);
  expect_prf(carb_one_one(s, g), 100, 100, 100);
}

TEST(CoordinationScoring, AppleSystemOne) {
  auto g = fixture("apple_gold", false), s = fixture("apple_system1", true);
  expect_prf(carb_score(s, g), 100, 100, 100);
  expect_prf(carb_one_one(s, g), 100, 100, 100);
}

TEST(CoordinationScoring, AppleSystemTwo) {
  auto g = fixture("apple_gold", false), s = fixture("apple_system2", true);
  expect_prf(carb_score(s, g), 57.14, 100, 72.73);
  // One assignment feeds both sides: 4 shared tokens over 7 system and 8 gold tokens.
  expect_prf(carb_one_one(s, g), 57.14, 50.0, 53.33);
}

// ---------------------------------------------------------------------------
// Scorer examples

TEST(Scorers, IdentityScoresPerfect) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = oracle::random_instance(rng);
    for (auto sc : {Scorer::Carb, Scorer::CarbOneOne, Scorer::Oie16C, Scorer::Wire57C}) {
      auto r = score(sc, inst.gold, inst.gold);
      EXPECT_DOUBLE_EQ(r.precision, 100.0) << scorer_name(sc);
      EXPECT_DOUBLE_EQ(r.recall, 100.0) << scorer_name(sc);
    }
  }
}

TEST(Scorers, Oie16IsLenient) {
  auto g = one({{"John", "bought", "a red car"}});
  auto s = one({{"Mary", "sold", "a boat"}});
  expect_prf(oie16c_score(s, g), 100, 100, 100);
  auto d = one({{"Mary", "sold", "boats"}});
  expect_prf(oie16c_score(d, g), 0, 0, 0);
}

TEST(Scorers, Wire57NeedsEveryGoldArgument) {
  auto g = one({{"John", "bought", "a red car"}});
  auto s = one({{"John", "bought", "yesterday"}});
  auto r = wire57c_score(s, g);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  auto t = one({{"John", "bought", "a car"}});
  expect_prf(wire57c_score(t, g), 100, 80, 88.89);
}

TEST(Scorers, Wire57GreedyAgreesWithBruteForceOnSmallCase) {
  auto g = one({{"a b", "c", "d e"}, {"a", "c", "f"}});
  auto s = one({{"a b", "c", "d"}, {"a", "c", "f g"}});
  // Only (s0,g0) and (s1,g1) pass the candidate filter, so the one
  // admissible pairing is also the brute-force optimum: shared 4 + 3 tokens
  // over 8 system and 8 gold tokens.
  auto r = wire57c_score(s, g);
  EXPECT_NEAR(r.precision, 87.5, 1e-9);
  EXPECT_NEAR(r.recall, 87.5, 1e-9);
}

TEST(Scorers, CarbRelationsMustShareAToken) {
  auto g = one({{"John", "bought", "a car"}});
  auto s = one({{"John", "sold", "a car"}});
  auto r = carb_score(s, g);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
}

TEST(Scorers, CaseFoldedAndUnbracketed) {
  auto g = one({{"Rome", "is the capital of", "Italy"}});
  auto s = one({{"rome", "[is] the CAPITAL of", "italy"}});
  expect_prf(carb_score(s, g), 100, 100, 100);
}

TEST(Scorers, UnknownSentenceWarnsAndScoresZero) {
  auto g = one({{"a", "b", "c"}}, "1");
  auto s = one({{"a", "b", "c"}}, "1");
  s["2"].push_back({{"x", "y", "z"}, 0.0});
  auto r = carb_score(s, g);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("'2'"), std::string::npos);
  EXPECT_NEAR(r.precision, 50.0, 1e-9);
  EXPECT_NEAR(r.recall, 100.0, 1e-9);
}

TEST(Scorers, ParseNames) {
  EXPECT_EQ(parse_scorer("carb"), Scorer::Carb);
  EXPECT_EQ(parse_scorer("carb11"), Scorer::CarbOneOne);
  EXPECT_EQ(parse_scorer("oie16c"), Scorer::Oie16C);
  EXPECT_EQ(parse_scorer("wire57c"), Scorer::Wire57C);
  EXPECT_THROW(parse_scorer("bleu"), ValidationError);
}

// ---------------------------------------------------------------------------
// Properties

TEST(ScorerProperties, CarbRecallDominatesOneToOne) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = oracle::random_instance(rng);
    EXPECT_GE(carb_score(inst.system, inst.gold).recall + 1e-9, carb_one_one(inst.system, inst.gold).recall);
  }
}

TEST(ScorerProperties, OrderInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_instance(rng);
    auto shuffled = inst.system;
    for (auto& [id, v] : shuffled) std::shuffle(v.begin(), v.end(), rng);
    // Greedy matchers break weight ties by position, so only the exact ones qualify.
    for (auto sc : {Scorer::Carb, Scorer::CarbOneOne}) {
      auto a = score(sc, inst.system, inst.gold), b = score(sc, shuffled, inst.gold);
      EXPECT_NEAR(a.precision, b.precision, 1e-9) << scorer_name(sc);
      EXPECT_NEAR(a.recall, b.recall, 1e-9);
    }
  }
}

TEST(ScorerProperties, ZeroSimilarityExtractionOnlyLowersPrecision) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_instance(rng);
    auto more = inst.system;
    more["1"].push_back({{"zz", "yy", "xx"}, 0.0});
    for (auto sc : {Scorer::Carb, Scorer::CarbOneOne, Scorer::Oie16C, Scorer::Wire57C}) {
      auto a = score(sc, inst.system, inst.gold), b = score(sc, more, inst.gold);
      EXPECT_LE(b.precision, a.precision + 1e-9) << scorer_name(sc);
      EXPECT_NEAR(b.recall, a.recall, 1e-9) << scorer_name(sc);
    }
  }
}

TEST(ScorerProperties, RecallNonIncreasingInThreshold) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_instance(rng);
    for (auto sc : {Scorer::Carb, Scorer::CarbOneOne, Scorer::Oie16C}) {
      auto r = pr_curve_auc(sc, inst.system, inst.gold);
      for (std::size_t i = 1; i < r.curve.size(); ++i) {
        EXPECT_LT(r.curve[i].threshold, r.curve[i - 1].threshold);
        EXPECT_GE(r.curve[i].recall + 1e-9, r.curve[i - 1].recall) << scorer_name(sc);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Curves

TEST(Curve, SingleConfidenceIsARectangle) {
  auto g = fixture("apple_gold", false), s = fixture("apple_system2", true);
  auto r = pr_curve_auc(Scorer::Carb, s, g);
  ASSERT_EQ(r.curve.size(), 1u);
  EXPECT_NEAR(*r.auc, r.precision * r.recall / 100.0, 1e-9);
}

TEST(Curve, IncrementalSweepMatchesFullRescoring) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = oracle::random_instance(rng, 5);
    auto r = pr_curve_auc(Scorer::Carb, inst.system, inst.gold);
    for (const auto& pt : r.curve) {
      ExtractionSet kept;
      for (const auto& [id, v] : inst.system)
        for (const auto& t : v)
          if (t.confidence >= pt.threshold) kept[id].push_back(t);
      auto full = carb_score(kept, inst.gold);
      EXPECT_NEAR(full.precision, pt.precision, 1e-9);
      EXPECT_NEAR(full.recall, pt.recall, 1e-9);
    }
  }
}

TEST(Curve, AucUsesMonotoneStaircase) {
  std::vector<CurvePoint> c = {{0.9, 50, 20}, {0.5, 80, 40}, {0.1, 40, 60}};
  // precision becomes 80, 80, 40 over recall 20, 40, 60; anchored at recall 0 with 80.
  double want = (20 * 80 + 20 * 80 + 20 * (80 + 40) / 2.0) / 100.0;
  EXPECT_NEAR(curve_auc(c), want, 1e-12);
}

TEST(Curve, Wire57HasNoAuc) {
  try {
    pr_curve_auc(Scorer::Wire57C, {}, {});
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "AUC undefined for Wire57-C");
  }
}
