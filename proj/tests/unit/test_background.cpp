#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "ionbell/background.hpp"

namespace {

using namespace ionbell;
using namespace ionbell::estimation;
using mc::CountsTable;
using test_support::Gen;

CountsTable random_table(Gen& g, int settings, int outcomes, int bins) {
  CountsTable t(settings, outcomes, bins);
  for (double& x : t.raw()) x = g.integer(0, 200);
  return t;
}

TEST(Background, ZeroBackgroundIsIdentity) {
  Gen g(71);
  const CountsTable t = random_table(g, 6, 4, 12);
  const CountsTable out = background_correct(t, no_background(t));
  EXPECT_EQ(out.raw(), t.raw());
  EXPECT_EQ(no_background(t).total(), 0.0);
}

TEST(Background, FractionAndTotalSplitEvenly) {
  Gen g(72);
  const CountsTable t = random_table(g, 6, 4, 3);
  const BackgroundEstimate f = background_from_fraction(t, 0.1);
  ASSERT_EQ(f.per_setting.size(), 6u);
  EXPECT_NEAR(f.total(), 0.1 * t.total(), 1e-9);
  for (double a : f.per_setting) EXPECT_NEAR(a, 0.1 * t.total() / 6, 1e-9);
  const BackgroundEstimate tot = background_from_total(t, 60.0);
  for (double a : tot.per_setting) EXPECT_DOUBLE_EQ(a, 10.0);
  EXPECT_THROW(background_from_fraction(t, 1.0), std::invalid_argument);
  EXPECT_THROW(background_from_total(t, -1.0), std::invalid_argument);
}

TEST(Background, SidebandScaling) {
  EXPECT_DOUBLE_EQ(accidentals_from_sidebands(90.0, 9.0), 10.0);
  EXPECT_THROW(accidentals_from_sidebands(90.0, 0.0), std::invalid_argument);
}

TEST(Background, TruthTableGivesSettingTotals) {
  CountsTable acc(3, 2, 4);
  acc.add(0, 1, 2, 5);
  acc.add(2, 0, 0, 7);
  acc.add(2, 1, 3, 1);
  const BackgroundEstimate bg = background_from_truth(acc);
  EXPECT_EQ(bg.per_setting, (std::vector<double>{5, 0, 8}));
}

TEST(BackgroundProperty, FlatFloorIsRemovedExactly) {
  Gen g(73);
  for (int trial = 0; trial < 100; ++trial) {
    const int settings = g.integer(1, 8);
    const int outcomes = g.integer(2, 4);
    const int bins = g.integer(1, 12);
    const CountsTable signal = random_table(g, settings, outcomes, bins);
    CountsTable noisy = signal;
    BackgroundEstimate bg;
    for (int s = 0; s < settings; ++s) {
      const double per_cell = g.uniform(0.0, 30.0);
      bg.per_setting.push_back(per_cell * outcomes * bins);
      for (int o = 0; o < outcomes; ++o) {
        for (int b = 0; b < bins; ++b) noisy.add(s, o, b, per_cell);
      }
    }
    const CountsTable out = background_correct(noisy, bg);
    for (std::size_t i = 0; i < out.raw().size(); ++i) {
      EXPECT_NEAR(out.raw()[i], signal.raw()[i], 1e-9);
    }
  }
}

TEST(BackgroundProperty, CorrectedTotalsAndPositivity) {
  Gen g(74);
  for (int trial = 0; trial < 100; ++trial) {
    const CountsTable t = random_table(g, 4, 4, 6);
    BackgroundEstimate bg;
    for (int s = 0; s < 4; ++s) bg.per_setting.push_back(g.uniform(0.0, 1.5) * t.setting_total(s));
    const CountsTable out = background_correct(t, bg);
    for (double x : out.raw()) EXPECT_GE(x, 0.0);
    for (int s = 0; s < 4; ++s) {
      EXPECT_NEAR(out.setting_total(s), std::max(t.setting_total(s) - bg.per_setting[s], 0.0), 1e-8);
    }
  }
}

TEST(Background, MismatchedEstimateRejected) {
  CountsTable t(3, 2, 2);
  EXPECT_THROW(background_correct(t, BackgroundEstimate{{1.0}}), std::invalid_argument);
}

}  // namespace
