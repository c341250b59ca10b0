#include "twosettle/pricing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "twosettle/error.hpp"

namespace twosettle {

namespace {

void require_finite_non_negative(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) throw Error(std::string(name) + " must be finite and >= 0");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(Condition c) {
  switch (c) {
    case Condition::Cond11: return "COND_11";
    case Condition::Cond12: return "COND_12";
    case Condition::Cond13: return "COND_13";
  }
  return "?";
}

PricingModel PricingModel::piecewise_linear(double a1, double a2, double b1, double b2) {
  require_finite_non_negative(a1, "a1");
  require_finite_non_negative(a2, "a2");
  require_finite_non_negative(b1, "b1");
  require_finite_non_negative(b2, "b2");
  PricingModel m;
  m.linear_ = {a1, a2, b1, b2};
  return m;
}

PricingModel PricingModel::general_odd(double a, double k, double b1, double b2) {
  require_finite_non_negative(a, "a");
  require_finite_non_negative(b1, "b1");
  require_finite_non_negative(b2, "b2");
  if (!(k > 0.0) || !std::isfinite(k)) throw Error("k must be positive");
  if (std::abs(b1 + b2 - 2.0) > 1e-12) throw Error("general odd pricing needs b1 + b2 = 2");
  if (b1 < b2) throw Error("general odd pricing needs b1 >= b2");
  PricingModel m;
  m.odd_ = true;
  m.general_ = {a, k, b1, b2};
  return m;
}

PricingModel PricingModel::table1_symmetric() {
  return piecewise_linear(0.0034, 0.0034, 1.2378, 0.7622);
}

PricingModel PricingModel::table1_asymmetric() {
  return piecewise_linear(0.0034, 0.0005, 1.2378, 0.6638);
}

double PricingModel::spot_price(double delta, double p_d, int side) const {
  if (!(p_d > 0.0)) throw Error("p_d must be positive");
  if (side == 0) {
    if (delta == 0.0) return p_d;
    side = delta > 0.0 ? 1 : -1;
  }
  if (odd_) {
    const double mag = general_.a * std::pow(std::abs(delta), general_.k);
    return side > 0 ? (general_.b1 + mag) * p_d : (general_.b2 - mag) * p_d;
  }
  return side > 0 ? (linear_.a1 * delta + linear_.b1) * p_d : (linear_.a2 * delta + linear_.b2) * p_d;
}

std::optional<PricingModel::LinearOdd> PricingModel::linear_odd() const {
  if (odd_) {
    if (general_.k != 1.0) return std::nullopt;
    return LinearOdd{general_.a, general_.b1, general_.b2};
  }
  if (linear_.a1 != linear_.a2) return std::nullopt;
  if (std::abs(linear_.b1 + linear_.b2 - 2.0) > 1e-12) return std::nullopt;
  if (linear_.b1 < linear_.b2) return std::nullopt;
  return LinearOdd{linear_.a1, linear_.b1, linear_.b2};
}

std::string PricingModel::to_text() const {
  std::ostringstream os;
  if (odd_) {
    os << "variant=general_odd\n"
       << "a1=" << format_double(general_.a) << "\n"
       << "a2=" << format_double(general_.a) << "\n"
       << "b1=" << format_double(general_.b1) << "\n"
       << "b2=" << format_double(general_.b2) << "\n"
       << "a=" << format_double(general_.a) << "\n"
       << "k=" << format_double(general_.k) << "\n";
  } else {
    os << "variant=piecewise_linear\n"
       << "a1=" << format_double(linear_.a1) << "\n"
       << "a2=" << format_double(linear_.a2) << "\n"
       << "b1=" << format_double(linear_.b1) << "\n"
       << "b2=" << format_double(linear_.b2) << "\n"
       << "a=0\n"
       << "k=1\n";
  }
  return os.str();
}

PricingModel PricingModel::from_text(const std::string& text) {
  static const std::vector<std::string> keys = {"variant", "a1", "a2", "b1", "b2", "a", "k"};
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ParseError("unknown pricing key '" + key + "'", lineno);
    if (!kv.emplace(key, value).second) throw ParseError("duplicate pricing key '" + key + "'", lineno);
  }
  for (const auto& k : keys)
    if (!kv.count(k)) throw ParseError("missing pricing key '" + k + "'", 0);
  auto num = [&](const std::string& k) {
    const std::string& s = kv.at(k);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ParseError("pricing key '" + k + "' is not a number: " + s, 0);
    return v;
  };
  const std::string& variant = kv.at("variant");
  if (variant == "piecewise_linear") return piecewise_linear(num("a1"), num("a2"), num("b1"), num("b2"));
  if (variant == "general_odd") return general_odd(num("a"), num("k"), num("b1"), num("b2"));
  throw ParseError("unknown pricing variant '" + variant + "'", 0);
}

bool PricingModel::operator==(const PricingModel& o) const {
  if (odd_ != o.odd_) return false;
  if (odd_)
    return general_.a == o.general_.a && general_.k == o.general_.k && general_.b1 == o.general_.b1 &&
           general_.b2 == o.general_.b2;
  return linear_.a1 == o.linear_.a1 && linear_.a2 == o.linear_.a2 && linear_.b1 == o.linear_.b1 &&
         linear_.b2 == o.linear_.b2;
}

double spot_price(const PricingModel& model, double delta, double p_d) {
  return model.spot_price(delta, p_d);
}

bool check_symmetric(const PricingModel& model) {
  const auto lo = model.linear_odd();
  return lo.has_value() && lo->b1 > lo->b2;
}

std::set<Condition> classify_conditions(const GeneralOdd& model, std::span<const double> grid) {
  if (grid.size() < 8) throw Error("condition grid needs at least 8 points");
  std::vector<double> xs(grid.begin(), grid.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.size() < 8) throw Error("condition grid needs at least 8 distinct points");
  double h = xs[1] - xs[0];
  for (std::size_t k = 2; k < xs.size(); ++k) h = std::min(h, xs[k] - xs[k - 1]);

  auto p = [&](double x) {
    const double mag = model.a * std::pow(std::abs(x), model.k);
    return x < 0.0 ? -mag : mag;
  };
  auto deriv = [&](double x) { return (p(x + h) - p(x - h)) / (2.0 * h); };

  constexpr double slack = 1e-9;
  bool positive = true, non_negative = true;
  bool non_decreasing = true, non_increasing = true, strictly_decreasing = true;
  // Walk each half-line outward from the origin.
  auto scan = [&](const std::vector<double>& side) {
    for (std::size_t k = 0; k < side.size(); ++k) {
      const double d = deriv(side[k]);
      if (!(d > 0.0)) positive = false;
      if (d < -slack) non_negative = false;
      if (k == 0) continue;
      const double prev = deriv(side[k - 1]);
      if (d < prev - slack) non_decreasing = false;
      if (d > prev + slack) non_increasing = false;
      if (!(d < prev - slack)) strictly_decreasing = false;
    }
  };
  std::vector<double> right, left;
  for (double x : xs) {
    if (x >= 0.0) right.push_back(x);
    if (x <= 0.0) left.push_back(x);
  }
  std::reverse(left.begin(), left.end());
  scan(right);
  scan(left);

  std::set<Condition> out;
  if (positive && non_decreasing) out.insert(Condition::Cond11);
  if (model.b1 > model.b2 && non_negative && non_increasing) out.insert(Condition::Cond12);
  if (non_negative && strictly_decreasing) out.insert(Condition::Cond13);
  return out;
}

}  // namespace twosettle
