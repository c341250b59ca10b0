#include <cmath>
#include <set>

#include "twosettle/cost.hpp"
#include "twosettle/error.hpp"

namespace twosettle {

MarketScenario::MarketScenario(std::vector<Utility> utilities, JointErrorModel joint,
                               PricingModel pricing, double p_d)
    : utilities_(std::move(utilities)), joint_(std::move(joint)), pricing_(std::move(pricing)), p_d_(p_d) {
  if (utilities_.empty()) throw Error("scenario needs at least one utility");
  if (joint_.size() != utilities_.size())
    throw Error("scenario has " + std::to_string(utilities_.size()) + " utilities but " +
                std::to_string(joint_.size()) + " error models");
  if (!(p_d_ > 0.0) || !std::isfinite(p_d_)) throw Error("p_d must be positive");
  std::set<std::string> seen;
  for (const auto& u : utilities_) {
    if (!(u.demand_mwh > 0.0) || !std::isfinite(u.demand_mwh))
      throw Error("demand of utility '" + u.id + "' must be positive");
    if (!seen.insert(u.id).second) throw Error("duplicate utility id '" + u.id + "'");
  }
}

double MarketScenario::total_demand() const {
  double d = 0.0;
  for (const auto& u : utilities_) d += u.demand_mwh;
  return d;
}

std::size_t MarketScenario::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < utilities_.size(); ++i)
    if (utilities_[i].id == id) return i;
  throw Error("unknown utility id '" + id + "'");
}

MarketScenario MarketScenario::with_p_d(double p_d) const {
  return MarketScenario(utilities_, joint_, pricing_, p_d);
}

MarketScenario MarketScenario::with_pricing(PricingModel pricing) const {
  return MarketScenario(utilities_, joint_, std::move(pricing), p_d_);
}

MarketScenario MarketScenario::with_demands(std::span<const double> demands) const {
  if (demands.size() != utilities_.size()) throw Error("demand vector length mismatch");
  auto u = utilities_;
  for (std::size_t i = 0; i < u.size(); ++i) u[i].demand_mwh = demands[i];
  return MarketScenario(std::move(u), joint_, pricing_, p_d_);
}

double StrategyProfile::total() const {
  double s = 0.0;
  for (double v : mu) s += v;
  return s;
}

double StrategyProfile::others(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j)
    if (j != i) s += mu[j];
  return s;
}

StrategyProfile StrategyProfile::with(std::size_t i, double value) const {
  StrategyProfile p = *this;
  p.mu.at(i) = value;
  return p;
}

const char* to_string(Method m) {
  switch (m) {
    case Method::Quadrature: return "quadrature";
    case Method::ClosedFormCorrelated: return "closed_form_correlated";
    case Method::MonteCarlo: return "monte_carlo";
    case Method::TwoDQuadrature: return "two_d_quadrature";
  }
  return "?";
}

const char* to_string(Engine e) {
  switch (e) {
    case Engine::Auto: return "auto";
    case Engine::Quadrature: return "quad";
    case Engine::ClosedForm: return "closed";
    case Engine::TwoD: return "2d";
    case Engine::MonteCarlo: return "mc";
  }
  return "?";
}

Engine parse_engine(const std::string& name) {
  if (name == "auto") return Engine::Auto;
  if (name == "quad") return Engine::Quadrature;
  if (name == "closed") return Engine::ClosedForm;
  if (name == "2d") return Engine::TwoD;
  if (name == "mc") return Engine::MonteCarlo;
  throw Error("unknown engine '" + name + "' (expected auto, quad, closed, 2d or mc)");
}

RealizedCost realized_cost(const MarketScenario& scenario, const StrategyProfile& profile,
                           std::span<const double> eps) {
  const std::size_t n = scenario.size();
  if (profile.size() != n || eps.size() != n) throw Error("profile and error lengths must match N");
  RealizedCost r;
  std::vector<double> delta(n);
  for (std::size_t j = 0; j < n; ++j) {
    delta[j] = profile.mu[j] - eps[j];
    r.mismatch += delta[j];
  }
  const double pd = scenario.p_d();
  r.spot_price = scenario.pricing().spot_price(r.mismatch, pd);
  r.cost_usd.resize(n);
  r.abc.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = scenario.utility(j).demand_mwh;
    r.cost_usd[j] = pd * (d - delta[j]) + r.spot_price * delta[j];
    r.abc[j] = r.cost_usd[j] / d;
    total += r.cost_usd[j];
  }
  r.total_abc = total / scenario.total_demand();
  return r;
}

}  // namespace twosettle
