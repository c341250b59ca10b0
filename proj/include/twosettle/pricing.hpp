#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>

namespace twosettle {

// p_s = p_d                     for delta == 0
//       (a1*delta + b1) * p_d   for delta > 0
//       (a2*delta + b2) * p_d   for delta < 0
struct PiecewiseLinear {
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 1.0;
  double b2 = 1.0;
};

// p_s = (b1 + a*|delta|^k) * p_d for delta > 0, (b2 - a*|delta|^k) * p_d for delta < 0.
struct GeneralOdd {
  double a = 0.0;
  double k = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
};

enum class Condition { Cond11, Cond12, Cond13 };

const char* to_string(Condition c);

class PricingModel {
 public:
  static PricingModel piecewise_linear(double a1, double a2, double b1, double b2);
  static PricingModel general_odd(double a, double k, double b1, double b2);
  static PricingModel table1_symmetric();
  static PricingModel table1_asymmetric();

  bool is_general_odd() const { return odd_; }
  const PiecewiseLinear& linear() const { return linear_; }
  const GeneralOdd& odd() const { return general_; }
  double b1() const { return odd_ ? general_.b1 : linear_.b1; }
  double b2() const { return odd_ ? general_.b2 : linear_.b2; }

  // side < 0 evaluates the delta < 0 branch, side > 0 the delta > 0 branch;
  // side == 0 picks the branch from the sign of delta.
  double spot_price(double delta, double p_d, int side = 0) const;

  // Slope and intercepts when the model is linear and odd about p_d
  // (a1 == a2, b1 + b2 == 2, b1 >= b2), which is when the closed cost
  // expressions apply.
  struct LinearOdd {
    double a;
    double b1;
    double b2;
  };
  std::optional<LinearOdd> linear_odd() const;

  // Flat key=value block with keys variant, a1, a2, b1, b2, a, k.
  std::string to_text() const;
  static PricingModel from_text(const std::string& text);

  bool operator==(const PricingModel& o) const;

 private:
  bool odd_ = false;
  PiecewiseLinear linear_;
  GeneralOdd general_;
};

double spot_price(const PricingModel& model, double delta, double p_d);

// a1 == a2, |b1 + b2 - 2| <= 1e-12, b1 > b2. A general odd model qualifies when k == 1.
bool check_symmetric(const PricingModel& model);

// Which derivative orderings hold for the odd part on the grid.
std::set<Condition> classify_conditions(const GeneralOdd& model, std::span<const double> grid);

}  // namespace twosettle
