#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "twosettle/error.hpp"
#include "twosettle/pricing.hpp"

using namespace twosettle;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = lo + (hi - lo) * k / (n - 1);
  return g;
}

}  // namespace

TEST(SpotPrice, ZeroMismatchIsDayAhead) {
  EXPECT_EQ(PricingModel::table1_symmetric().spot_price(0.0, 35.0), 35.0);
  EXPECT_EQ(PricingModel::table1_asymmetric().spot_price(0.0, 35.0), 35.0);
}

TEST(SpotPrice, Branches) {
  const auto m = PricingModel::table1_symmetric();
  // (0.0034*100 + 1.2378)*35, (-0.0034*100 + 0.7622)*35
  EXPECT_NEAR(m.spot_price(100.0, 35.0), 55.223, 1e-9);
  EXPECT_NEAR(m.spot_price(-100.0, 35.0), 14.777, 1e-9);
  EXPECT_NEAR(spot_price(m, 100.0, 35.0) + spot_price(m, -100.0, 35.0), 70.0, 1e-12);
}

TEST(SpotPrice, NonPositiveDayAheadRejected) {
  EXPECT_THROW(PricingModel::table1_symmetric().spot_price(1.0, 0.0), Error);
}

TEST(SpotPrice, SymmetricModelsAreOddAboutDayAhead) {
  const auto m = PricingModel::piecewise_linear(0.01, 0.01, 1.4, 0.6);
  for (double d : grid(-300, 300, 61)) {
    if (d == 0.0) continue;
    EXPECT_NEAR(m.spot_price(d, 35.0) + m.spot_price(-d, 35.0), 70.0, 70.0 * 1e-9);
  }
}

TEST(SpotPrice, OneSidedLimitsAndPremium) {
  const auto m = PricingModel::table1_symmetric();
  EXPECT_NEAR(m.spot_price(1e-12, 35.0), 1.2378 * 35.0, 1e-9);
  EXPECT_NEAR(m.spot_price(-1e-12, 35.0), 0.7622 * 35.0, 1e-9);
  EXPECT_NEAR(m.spot_price(0.0, 35.0, +1) - m.spot_price(0.0, 35.0, -1), (1.2378 - 0.7622) * 35.0, 1e-12);
}

TEST(SpotPrice, GeneralOddLinearReducesToPiecewiseLinear) {
  const auto g = PricingModel::general_odd(0.0034, 1.0, 1.2378, 0.7622);
  const auto l = PricingModel::table1_symmetric();
  for (double d : grid(-500, 500, 101)) EXPECT_NEAR(g.spot_price(d, 35.0), l.spot_price(d, 35.0), 1e-12);
}

TEST(SpotPrice, GeneralOddIsOddAndMonotone) {
  const auto g = PricingModel::general_odd(0.0034, 1.15, 1.2378, 0.7622);
  double prev = -1e300;
  for (double d : grid(-400, 400, 801)) {
    const double p = g.spot_price(d, 35.0);
    EXPECT_GE(p, prev);
    prev = p;
    if (d != 0.0) EXPECT_NEAR(p + g.spot_price(-d, 35.0), 70.0, 1e-9);
  }
}

TEST(CheckSymmetric, Table1Rows) {
  EXPECT_TRUE(check_symmetric(PricingModel::table1_symmetric()));
  EXPECT_FALSE(check_symmetric(PricingModel::table1_asymmetric()));
  EXPECT_FALSE(check_symmetric(PricingModel::piecewise_linear(1, 1, 1, 1)));
  EXPECT_TRUE(check_symmetric(PricingModel::general_odd(0.0034, 1.0, 1.2378, 0.7622)));
  EXPECT_FALSE(check_symmetric(PricingModel::general_odd(0.0034, 1.15, 1.2378, 0.7622)));
}

TEST(CheckSymmetric, InterceptToleranceIsTight) {
  EXPECT_TRUE(check_symmetric(PricingModel::piecewise_linear(0.1, 0.1, 1.5, 0.5 + 5e-13)));
  EXPECT_FALSE(check_symmetric(PricingModel::piecewise_linear(0.1, 0.1, 1.5, 0.5 + 5e-12)));
}

TEST(PricingModel, Validation) {
  EXPECT_THROW(PricingModel::piecewise_linear(-0.1, 0.0, 1.0, 1.0), Error);
  EXPECT_THROW(PricingModel::general_odd(0.1, 1.0, 1.2, 0.7), Error);
  EXPECT_THROW(PricingModel::general_odd(0.1, 1.0, 0.8, 1.2), Error);
  EXPECT_THROW(PricingModel::general_odd(0.1, 0.0, 1.2, 0.8), Error);
}

TEST(Conditions, PowerAboveOne) {
  const auto g = PricingModel::general_odd(0.0034, 1.15, 1.2378, 0.7622).odd();
  const auto c = classify_conditions(g, grid(-300, 300, 121));
  EXPECT_EQ(c, std::set<Condition>{Condition::Cond11});
}

TEST(Conditions, PowerBelowOne) {
  const auto g = PricingModel::general_odd(0.0034, 0.9, 1.2378, 0.7622).odd();
  EXPECT_TRUE(classify_conditions(g, grid(-300, 300, 121)).count(Condition::Cond13));
}

TEST(Conditions, LinearIsInBothWeakClasses) {
  const auto g = PricingModel::general_odd(0.0034, 1.0, 1.2378, 0.7622).odd();
  const auto c = classify_conditions(g, grid(-300, 300, 121));
  EXPECT_EQ(c, (std::set<Condition>{Condition::Cond11, Condition::Cond12}));
  // Without a gap the non-increasing class is not available.
  const auto flat = PricingModel::general_odd(0.0034, 1.0, 1.0, 1.0).odd();
  EXPECT_EQ(classify_conditions(flat, grid(-300, 300, 121)), std::set<Condition>{Condition::Cond11});
}

TEST(Conditions, ShortGridRejected) {
  const auto g = PricingModel::general_odd(0.0034, 1.0, 1.2378, 0.7622).odd();
  EXPECT_THROW(classify_conditions(g, grid(-1, 1, 7)), Error);
}

TEST(Conditions, Names) {
  EXPECT_STREQ(to_string(Condition::Cond11), "COND_11");
  EXPECT_STREQ(to_string(Condition::Cond13), "COND_13");
}

TEST(PricingText, RoundTrip) {
  for (const auto& m : {PricingModel::table1_symmetric(), PricingModel::table1_asymmetric(),
                        PricingModel::general_odd(0.0034, 0.9, 1.2378, 0.7622)}) {
    EXPECT_EQ(PricingModel::from_text(m.to_text()), m);
  }
}

TEST(PricingText, Errors) {
  EXPECT_THROW(PricingModel::from_text("variant=piecewise_linear\na1=1\na2=1\nb1=1\n"), ParseError);
  EXPECT_THROW(PricingModel::from_text("variant=piecewise_linear\na1=1\na1=1\na2=1\nb1=1\nb2=1\n"), ParseError);
  EXPECT_THROW(PricingModel::from_text("variant=piecewise_linear\na1=1\na2=1\nb1=1\nb2=1\nzz=3\n"), ParseError);
  EXPECT_THROW(PricingModel::from_text("variant=cubic\n"), ParseError);
  try {
    PricingModel::from_text("variant=piecewise_linear\nbogus\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
