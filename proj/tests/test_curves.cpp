#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "twosettle/curves.hpp"
#include "twosettle/error.hpp"

using namespace twosettle;

namespace {

MarketScenario market(double rho = 0.0) {
  const std::vector<double> s{38.7, 30, 45, 25};
  std::vector<Utility> u{{"ME", 1300}, {"NH", 1500}, {"CT", 2000}, {"VT", 800}};
  std::vector<ErrorModel> m;
  for (double v : s) m.push_back(ErrorModel::gaussian(v));
  if (rho == 0.0) return MarketScenario(u, JointErrorModel::independent(m), PricingModel::table1_symmetric(), 35.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(4, 4, rho);
  r.diagonal().setOnes();
  return MarketScenario(u, JointErrorModel::correlated(m, r), PricingModel::table1_symmetric(), 35.0);
}

PriceBelief five_node() { return PriceBelief({25, 30, 35, 40, 45}, {0.1, 0.2, 0.4, 0.2, 0.1}); }

std::vector<BiddingCurve> zeros(std::size_t n) { return std::vector<BiddingCurve>(n, BiddingCurve::constant(0.0)); }

}  // namespace

TEST(BiddingCurve, RightContinuousSteps) {
  const BiddingCurve c({20, 30, 40}, {1, 2, 3});
  EXPECT_EQ(c(10), 1);
  EXPECT_EQ(c(20), 1);
  EXPECT_EQ(c(29.999), 1);
  EXPECT_EQ(c(30), 2);
  EXPECT_EQ(c(45), 3);
}

TEST(BiddingCurve, Validation) {
  EXPECT_THROW(BiddingCurve({}, {}), Error);
  EXPECT_THROW(BiddingCurve({20, 20}, {1, 2}), Error);
  EXPECT_THROW(BiddingCurve({-1, 20}, {1, 2}), Error);
  EXPECT_THROW(BiddingCurve({10}, {std::numeric_limits<double>::infinity()}), Error);
}

TEST(PriceBelief, Validation) {
  EXPECT_THROW(PriceBelief({30, 40}, {0.5, 0.4}), Error);
  EXPECT_THROW(PriceBelief({40, 30}, {0.5, 0.5}), Error);
  EXPECT_THROW(PriceBelief({0, 30}, {0.5, 0.5}), Error);
  EXPECT_THROW(PriceBelief({30, 40}, {1.5, -0.5}), Error);
  EXPECT_NO_THROW(PriceBelief({30, 40}, {0.5, 0.5 + 5e-10}));
}

TEST(CurveCost, PointBeliefReducesToScalarGame) {
  const auto sc = market();
  const auto v = expected_curve_cost(sc, zeros(4), PriceBelief::point(35.0), 0);
  CostEvaluator ev(sc);
  EXPECT_DOUBLE_EQ(v.value, ev.expected_abc(StrategyProfile::zeros(4), 0).value);
}

TEST(CurveCost, TwoPointBeliefIsAverage) {
  const auto sc = market();
  const auto v = expected_curve_cost(sc, zeros(4), PriceBelief({30, 40}, {0.5, 0.5}), 1);
  CostEvaluator e30(sc.with_p_d(30)), e40(sc.with_p_d(40));
  const auto z = StrategyProfile::zeros(4);
  EXPECT_NEAR(v.value, 0.5 * e30.expected_abc(z, 1).value + 0.5 * e40.expected_abc(z, 1).value, 1e-12);
}

TEST(CurveCost, ConstantCurveMatchesScalarAverage) {
  const auto sc = market();
  const auto belief = five_node();
  auto curves = zeros(4);
  curves[2] = BiddingCurve::constant(-17.5);
  const auto v = expected_curve_cost(sc, curves, belief, 2);
  double ref = 0.0;
  for (std::size_t k = 0; k < belief.size(); ++k) {
    CostEvaluator ev(sc.with_p_d(belief.prices()[k]));
    ref += belief.masses()[k] * ev.expected_abc(StrategyProfile::zeros(4).with(2, -17.5), 2).value;
  }
  EXPECT_NEAR(v.value, ref, 1e-9);
}

TEST(CurveCost, FlexibleDemand) {
  const auto sc = market();
  std::vector<BiddingCurve> demand{BiddingCurve({10, 35}, {1500, 1100}), BiddingCurve::constant(1500),
                                   BiddingCurve::constant(2000), BiddingCurve::constant(800)};
  CurveGame g(sc, PriceBelief::point(40.0), {}, demand);
  std::vector<double> d{1100, 1500, 2000, 800};
  CostEvaluator ev(sc.with_p_d(40.0).with_demands(d));
  EXPECT_DOUBLE_EQ(g.expected_curve_cost(zeros(4), 0).value, ev.expected_abc(StrategyProfile::zeros(4), 0).value);
}

TEST(BumpFamily, CoversIntervalsAndAmplitudes) {
  const auto belief = five_node();
  const auto fam = bump_family(belief, 4, {-50, -20, 20, 50});
  ASSERT_EQ(fam.size(), 16u);
  EXPECT_EQ(fam[0].lo, 25.0);
  EXPECT_EQ(fam[0].hi, 30.0);
  EXPECT_TRUE(std::isinf(fam.back().hi));
  // Each bump is nonzero only on its interval.
  for (const auto& b : fam) {
    for (double p : belief.prices()) {
      const bool inside = p >= b.lo && p < b.hi;
      EXPECT_EQ(b.curve(p), inside ? b.amplitude : 0.0);
    }
  }
}

TEST(CurveEquilibrium, ZeroCurvesBeatEveryBump) {
  CurveGame g(market(), five_node());
  const auto rep = verify_curve_equilibrium(g, bump_family(five_node(), 4, {-50, -20, 20, 50}));
  EXPECT_TRUE(rep.is_equilibrium);
  EXPECT_LE(rep.max_gain, 0.0);
  EXPECT_LE(rep.efficiency_gap, 0.0);
}

TEST(CurveEquilibrium, EightIntervalFamily) {
  const PriceBelief belief({20, 25, 30, 35, 40, 45, 50, 55, 60}, std::vector<double>(9, 1.0 / 9));
  CurveGame g(market(), belief);
  EXPECT_TRUE(verify_curve_equilibrium(g, bump_family(belief, 8, {-50, 50})).is_equilibrium);
}

TEST(CurveEquilibrium, CorrelatedErrors) {
  CurveGame g(market(0.3), five_node());
  EXPECT_TRUE(verify_curve_equilibrium(g, bump_family(five_node(), 4, {-50, -20, 20, 50})).is_equilibrium);
}

TEST(CurveEquilibrium, SingleBumpCostsMore) {
  const auto belief = five_node();
  CurveGame g(market(), belief);
  auto curves = zeros(4);
  const double base = g.expected_curve_cost(curves, 0).value;
  curves[0] = BiddingCurve({35, 40}, {50, 0});
  EXPECT_GT(g.expected_curve_cost(curves, 0).value, base);
}

TEST(CurveDominance, LargerDeviationCostsMore) {
  const auto belief = five_node();
  CurveGame g(market(), belief);
  auto small = zeros(4), large = zeros(4);
  small[1] = BiddingCurve({25, 35}, {10, -10});
  large[1] = BiddingCurve({25, 35, 45}, {10, -30, -30});
  EXPECT_GT(g.expected_curve_cost(large, 1).value, g.expected_curve_cost(small, 1).value);
}

TEST(CurveFaultImmunity, RationalCostFallsWithFaultyBump) {
  const auto belief = five_node();
  CurveGame g(market(), belief);
  double prev = 1e300;
  for (double amp : {0.0, 25.0, 50.0, 100.0}) {
    auto curves = zeros(4);
    for (std::size_t s = 1; s < 4; ++s) curves[s] = BiddingCurve({30, 40}, {amp / 3.0, 0.0});
    const double v = g.expected_curve_cost(curves, 0).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}
