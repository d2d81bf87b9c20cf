#include <gtest/gtest.h>

#include <random>

#include "igl/constraints.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/network.hpp"
#include "oracles.hpp"

using namespace igl;
using namespace igl::constraints;
using lingo::TokenMasks;

namespace {

TokenMasks masks(std::vector<bool> imp, std::vector<bool> hv) { return {std::move(imp), std::move(hv)}; }

OieGrid<double> one_hot(std::size_t rows, std::size_t cols,
                        std::initializer_list<std::tuple<std::size_t, std::size_t, OieLabel>> cells) {
  HardGrid<OieLabel> g(rows, cols);
  for (auto [m, n, l] : cells) g(m, n) = l;
  return OieGrid<double>::one_hot(g);
}

}  // namespace

// ---------------------------------------------------------------------------
// POSC

TEST(Posc, FullCoverageIsZero) {
  auto y = one_hot(2, 3, {{0, 0, OieLabel::S}, {0, 1, OieLabel::R}, {1, 2, OieLabel::O}});
  EXPECT_DOUBLE_EQ(posc_penalty(y, masks({true, true, true}, {false, false, false})), 0.0);
}

TEST(Posc, BestNonNoneProbabilityCounts) {
  OieGrid<double> y(2, 1);
  y(0, 0, OieLabel::S) = 0.6;
  y(0, 0, OieLabel::N) = 0.4;
  y(1, 0, OieLabel::R) = 0.3;
  y(1, 0, OieLabel::N) = 0.7;
  EXPECT_NEAR(posc_penalty(y, masks({true}, {false})), 0.4, 1e-15);
}

TEST(Posc, AllNoneCountsImportantTokens) {
  auto y = one_hot(3, 5, {});
  EXPECT_DOUBLE_EQ(posc_penalty(y, masks({true, false, true, true, false}, std::vector<bool>(5))), 3.0);
}

// ---------------------------------------------------------------------------
// HVC

TEST(Hvc, ExactlyOneRelationIsZero) {
  auto y = one_hot(2, 2, {{0, 1, OieLabel::R}});
  EXPECT_DOUBLE_EQ(hvc_penalty(y, masks({true, true}, {false, true})), 0.0);
}

TEST(Hvc, TwoRelationsCostOne) {
  auto y = one_hot(2, 2, {{0, 1, OieLabel::R}, {1, 1, OieLabel::R}});
  EXPECT_DOUBLE_EQ(hvc_penalty(y, masks({true, true}, {false, true})), 1.0);
}

TEST(Hvc, MissingRelationCostsOne) {
  auto y = one_hot(2, 2, {{0, 1, OieLabel::S}});
  EXPECT_DOUBLE_EQ(hvc_penalty(y, masks({true, true}, {false, true})), 1.0);
}

TEST(Hvc, RaisingUndercoveredRelationNeverIncreasesPenalty) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    auto cells = oracle::random_cells(rng, 3, 4);
    std::vector<bool> hv = {true, false, true, true};
    auto y = oracle::to_grid(cells);
    for (std::size_t n = 0; n < 4; ++n) {
      if (!hv[n]) continue;
      double sum = 0;
      for (std::size_t m = 0; m < 3; ++m) sum += y(m, n, OieLabel::R);
      if (sum >= 1) continue;
      auto z = y;
      double bump = std::min(1 - sum, z(0, n, OieLabel::N));
      z(0, n, OieLabel::R) += bump;
      z(0, n, OieLabel::N) -= bump;
      auto mk = masks(std::vector<bool>(4, true), hv);
      EXPECT_LE(hvc_penalty(z, mk), hvc_penalty(y, mk) + 1e-12);
    }
  }
}

// ---------------------------------------------------------------------------
// HVE

TEST(Hve, SingleHeadVerbIsZero) {
  auto y = one_hot(1, 3, {{0, 1, OieLabel::R}});
  EXPECT_DOUBLE_EQ(hve_penalty(y, masks({true, true, true}, {false, true, true})), 0.0);
}

TEST(Hve, GainedAndEndorsedInOneRelation) {
  auto s = lingo::tokenize("Obama gained popularity after Oprah endorsed him for the presidency");
  auto mk = lingo::masks_for(s, lingo::LexiconTagger::shipped());
  auto y = one_hot(1, s.size(), {{0, 0, OieLabel::S}, {0, 1, OieLabel::R}, {0, 5, OieLabel::R}, {0, 2, OieLabel::O}});
  EXPECT_DOUBLE_EQ(hve_penalty(y, mk), 1.0);
}

TEST(Hve, TwoOverloadedRowsCostTwo) {
  auto y = one_hot(2, 2, {{0, 0, OieLabel::R}, {0, 1, OieLabel::R}, {1, 0, OieLabel::R}, {1, 1, OieLabel::R}});
  EXPECT_DOUBLE_EQ(hve_penalty(y, masks({true, true}, {true, true})), 2.0);
}

// ---------------------------------------------------------------------------
// EC

TEST(Ec, EnoughExtractionsIsZero) {
  auto y = one_hot(2, 2, {{0, 0, OieLabel::R}, {1, 1, OieLabel::R}});
  EXPECT_DOUBLE_EQ(ec_penalty(y, masks({true, true}, {true, true})), 0.0);
}

TEST(Ec, AllNoneCountsHeadVerbs) {
  auto y = one_hot(3, 2, {});
  EXPECT_DOUBLE_EQ(ec_penalty(y, masks({true, true}, {true, true})), 2.0);
}

TEST(Ec, HalfCoveredRow) {
  OieGrid<double> y = one_hot(2, 2, {});
  y(0, 0, OieLabel::R) = 0.5;
  y(0, 0, OieLabel::N) = 0.5;
  EXPECT_DOUBLE_EQ(ec_penalty(y, masks({true, true}, {true, true})), 1.5);
}

// ---------------------------------------------------------------------------
// Shared properties

TEST(Penalties, MatchScalarOracleOnRandomGrids) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t rows = 1 + rng() % 5, cols = 1 + rng() % 12;
    auto cells = oracle::random_cells(rng, rows, cols);
    std::vector<bool> imp(cols), hv(cols);
    for (std::size_t n = 0; n < cols; ++n) {
      imp[n] = rng() % 3 != 0;
      hv[n] = imp[n] && rng() % 3 == 0;
    }
    auto y = oracle::to_grid(cells);
    auto mk = masks(imp, hv);
    EXPECT_LE(oracle::relative_error(posc_penalty(y, mk), oracle::posc(cells, imp)), 1e-10);
    EXPECT_LE(oracle::relative_error(hvc_penalty(y, mk), oracle::hvc(cells, hv)), 1e-10);
    EXPECT_LE(oracle::relative_error(hve_penalty(y, mk), oracle::hve(cells, hv)), 1e-10);
    EXPECT_LE(oracle::relative_error(ec_penalty(y, mk), oracle::ec(cells, hv)), 1e-10);
  }
}

TEST(Penalties, NonNegativeOnRandomGrids) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t rows = 1 + rng() % 5, cols = 1 + rng() % 10;
    auto y = oracle::to_grid(oracle::random_cells(rng, rows, cols));
    std::vector<bool> imp(cols), hv(cols);
    for (std::size_t n = 0; n < cols; ++n) hv[n] = (imp[n] = rng() % 2) && rng() % 2;
    auto b = penalties(y, masks(imp, hv), PenaltyWeights{});
    EXPECT_GE(b.posc, 0);
    EXPECT_GE(b.hvc, 0);
    EXPECT_GE(b.hve, 0);
    EXPECT_GE(b.ec, 0);
  }
}

TEST(Penalties, GradientMatchesFiniteDifferenceOffKinks) {
  std::mt19937_64 rng(8);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t rows = 1 + rng() % 4, cols = 2 + rng() % 6;
    auto y = oracle::to_grid(oracle::random_cells(rng, rows, cols));
    std::vector<bool> imp(cols), hv(cols);
    for (std::size_t n = 0; n < cols; ++n) hv[n] = (imp[n] = rng() % 3 != 0) && rng() % 2;
    auto mk = masks(imp, hv);
    if (kink_margin(y, mk) < 1e-3) continue;
    PenaltyWeights w{1.0, 2.0, 0.5, 3.0};
    OieGrid<double> g(rows, cols);
    penalties(y, mk, w, &g);
    const double h = 1e-6;
    for (std::size_t i = 0; i < y.data().size(); ++i) {
      auto up = y, dn = y;
      up.data()[i] += h;
      dn.data()[i] -= h;
      double num = (penalties(up, mk, w).weighted(w) - penalties(dn, mk, w).weighted(w)) / (2 * h);
      EXPECT_NEAR(g.data()[i], num, 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Penalties, ShapeMismatchIsRejected) {
  auto y = one_hot(1, 3, {});
  EXPECT_THROW(posc_penalty(y, masks({true}, {false})), ValidationError);
  EXPECT_THROW(ec_penalty(y, masks({true, true, true}, {false})), ValidationError);
}

TEST(Weights, DefaultsAndValidation) {
  PenaltyWeights w;
  EXPECT_EQ(w.posc, 3.0);
  EXPECT_EQ(w.ec, 3.0);
  EXPECT_THROW((PenaltyWeights{-1, 0, 0, 0}.validate()), ValidationError);
  EXPECT_THROW((PenaltyWeights{0, std::nan(""), 0, 0}.validate()), ValidationError);
}

// ---------------------------------------------------------------------------
// Combined loss

TEST(CombinedLoss, WeightedSumArithmetic) {
  PenaltyBreakdown b{0.4, 1.0, 0.0, 0.0};
  EXPECT_NEAR(2.0 + b.weighted(PenaltyWeights{}), 6.2, 1e-12);
}

TEST(CombinedLoss, WarmupAndZeroWeights) {
  auto s = lingo::append_special(lingo::tokenize("Obama gained popularity after Oprah endorsed him"));
  nnet::EncoderConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.ffn_dim = 8;
  c.encoder_layers = 1;
  c.iterative_layers = 1;
  c.max_levels = 3;
  c.max_len = 16;
  nnet::IglNetwork<double> net(c, nnet::Vocabulary::build({s}));
  auto tr = net.forward(s);
  HardGrid<OieLabel> gold(3, s.size());
  gold(0, 0) = OieLabel::S;
  gold(0, 1) = OieLabel::R;
  gold(0, 2) = OieLabel::O;
  auto mk = lingo::masks_for(s, lingo::LexiconTagger::shipped());
  const double ce = nnet::ce_loss(tr, gold);
  PenaltyWeights w;
  EXPECT_EQ(combined_loss(tr, gold, mk, w, 3, 4), ce);
  EXPECT_EQ(combined_loss(tr, gold, mk, PenaltyWeights::zero(), 100, 0), ce);
  for (std::size_t step : {0u, 10u, 100000u}) EXPECT_EQ(combined_loss(tr, gold, mk, w, step, kNoConstraints), ce);
  const double full = combined_loss(tr, gold, mk, w, 4, 4);
  EXPECT_NEAR(full, ce + penalties(tr.grid<OieLabel>(), mk, w).weighted(w), 1e-12);
  EXPECT_GT(full, ce);
  EXPECT_THROW(combined_loss(tr, gold, mk, PenaltyWeights{-1, 0, 0, 0}, 0, 0), ValidationError);
}

// ---------------------------------------------------------------------------
// Discrete violations

TEST(Violations, NothingCovered) {
  auto s = lingo::tokenize("John quickly ate .");
  auto mk = lingo::masks_for(s, lingo::LexiconTagger::shipped());
  ASSERT_EQ(std::count(mk.important.begin(), mk.important.end(), true), 3);
  HardGrid<OieLabel> g(3, s.size());
  auto r = count_violations(g, mk);
  EXPECT_EQ(r, (ViolationReport{3, 1, 0, 1, 0}));
}

TEST(Violations, TwoHeadVerbsInOneRelation) {
  auto mk = masks({true, true, true}, {false, true, true});
  HardGrid<OieLabel> g(2, 3);
  g(0, 0) = OieLabel::S;
  g(0, 1) = OieLabel::R;
  g(0, 2) = OieLabel::R;
  auto r = count_violations(g, mk);
  EXPECT_EQ(r.hve, 1u);
  EXPECT_EQ(r.hvc, 0u);
  EXPECT_EQ(r.ec, 1u);
  EXPECT_EQ(r.extraction_count, 1u);
}

TEST(Violations, TableOneConstrainedExtractionCoversEverything) {
  auto s = lingo::append_special(lingo::tokenize(
      "Other signs of lens subluxation include mild conjunctival redness , vitreous humour degeneration , "
      "and an increase or decrease of anterior chamber depth ."));
  auto mk = lingo::masks_for(s, lingo::LexiconTagger::shipped());
  HardGrid<OieLabel> g(5, s.size());
  for (std::size_t n = 0; n < 5; ++n) g(0, n) = OieLabel::S;
  g(0, 5) = OieLabel::R;
  for (std::size_t n = 6; n < 23; ++n) g(0, n) = OieLabel::O;
  auto r = count_violations(g, mk);
  EXPECT_EQ(r.posc, 0u);
  EXPECT_EQ(r.hvc, 0u);
  EXPECT_EQ(r.extraction_count, 1u);
}

TEST(Violations, ZeroPenaltyGridsHaveZeroCounts) {
  // One-hot grids that satisfy every constraint score zero both ways.
  auto mk = masks({true, true, true, true, false}, {false, true, false, true, false});
  HardGrid<OieLabel> g(3, 5);
  g(0, 0) = OieLabel::S;
  g(0, 1) = OieLabel::R;
  g(0, 2) = OieLabel::O;
  g(1, 2) = OieLabel::S;
  g(1, 3) = OieLabel::R;
  auto y = OieGrid<double>::one_hot(g);
  auto b = penalties(y, mk, PenaltyWeights{});
  EXPECT_EQ(b.weighted(PenaltyWeights{}), 0.0);
  EXPECT_EQ(count_violations(g, mk).total(), 0u);
}

TEST(Violations, BoundsHold) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t rows = 1 + rng() % 5, cols = 1 + rng() % 10;
    HardGrid<OieLabel> g(rows, cols);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t n = 0; n < cols; ++n) g(m, n) = static_cast<OieLabel>(rng() % 4);
    std::vector<bool> imp(cols), hv(cols);
    for (std::size_t n = 0; n < cols; ++n) hv[n] = (imp[n] = rng() % 2) && rng() % 2;
    auto r = count_violations(g, masks(imp, hv));
    EXPECT_LE(r.posc, cols);
    EXPECT_LE(r.hve, r.extraction_count);
    EXPECT_LE(r.extraction_count, rows);
  }
}
