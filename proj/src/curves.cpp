#include "twosettle/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "twosettle/error.hpp"
#include "twosettle/parallel.hpp"

namespace twosettle {

BiddingCurve::BiddingCurve(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty()) throw Error("curve needs at least one breakpoint");
  if (breakpoints_.size() != values_.size()) throw Error("curve needs one value per breakpoint");
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > 0.0) || !std::isfinite(breakpoints_[k]))
      throw Error("curve breakpoints must be positive");
    if (k > 0 && !(breakpoints_[k] > breakpoints_[k - 1]))
      throw Error("curve breakpoints must be strictly increasing");
    if (!std::isfinite(values_[k])) throw Error("curve values must be finite");
  }
}

BiddingCurve BiddingCurve::constant(double value) {
  return BiddingCurve({std::numeric_limits<double>::min()}, {value});
}

double BiddingCurve::operator()(double price) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), price);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

PriceBelief::PriceBelief(std::vector<double> prices, std::vector<double> masses)
    : prices_(std::move(prices)), masses_(std::move(masses)) {
  if (prices_.empty()) throw Error("belief needs at least one price");
  if (prices_.size() != masses_.size()) throw Error("belief needs one mass per price");
  double total = 0.0;
  for (std::size_t k = 0; k < prices_.size(); ++k) {
    if (!(prices_[k] > 0.0) || !std::isfinite(prices_[k])) throw Error("belief prices must be positive");
    if (k > 0 && !(prices_[k] > prices_[k - 1])) throw Error("belief prices must be strictly increasing");
    if (!(masses_[k] >= 0.0) || !std::isfinite(masses_[k])) throw Error("belief masses must be non-negative");
    total += masses_[k];
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("belief masses must sum to 1");
}

CurveGame::CurveGame(const MarketScenario& base, PriceBelief belief, EngineOptions options,
                     std::optional<std::vector<BiddingCurve>> demand_curves)
    : belief_(std::move(belief)), size_(base.size()) {
  if (demand_curves && demand_curves->size() != size_)
    throw Error("need one demand curve per utility");
  nodes_.resize(belief_.size());
  parallel_for(belief_.size(), [&](std::size_t k) {
    const double price = belief_.prices()[k];
    MarketScenario sc = base.with_p_d(price);
    if (demand_curves) {
      std::vector<double> d(size_);
      for (std::size_t i = 0; i < size_; ++i) d[i] = (*demand_curves)[i](price);
      sc = sc.with_demands(d);
    }
    nodes_[k] = std::make_unique<CostEvaluator>(std::move(sc), options);
  });
}

namespace {

StrategyProfile profile_at(const std::vector<BiddingCurve>& curves, double price) {
  StrategyProfile p;
  p.mu.reserve(curves.size());
  for (const auto& c : curves) p.mu.push_back(c(price));
  return p;
}

template <class F>
CostEstimate weighted(const PriceBelief& belief, F&& at_node) {
  std::vector<CostEstimate> per(belief.size());
  parallel_for(belief.size(), [&](std::size_t k) {
    if (belief.masses()[k] > 0.0) per[k] = at_node(k);
  });
  CostEstimate out;
  double var = 0.0;
  bool stochastic = false;
  for (std::size_t k = 0; k < belief.size(); ++k) {
    const double m = belief.masses()[k];
    if (m == 0.0) continue;
    out.value += m * per[k].value;
    out.method = per[k].method;
    out.count += per[k].count;
    if (per[k].std_error) {
      stochastic = true;
      var += m * m * *per[k].std_error * *per[k].std_error;
    }
    out.diagnostics.converged = out.diagnostics.converged && per[k].diagnostics.converged;
    out.diagnostics.forms_agree = out.diagnostics.forms_agree && per[k].diagnostics.forms_agree;
  }
  if (stochastic) out.std_error = std::sqrt(var);
  return out;
}

}  // namespace

CostEstimate CurveGame::expected_curve_cost(const std::vector<BiddingCurve>& curves, std::size_t i) const {
  if (curves.size() != size_) throw Error("need one bidding curve per utility");
  if (i >= size_) throw Error("utility index out of range");
  return weighted(belief_, [&](std::size_t k) {
    return nodes_[k]->expected_abc(profile_at(curves, belief_.prices()[k]), i);
  });
}

CostEstimate CurveGame::expected_curve_total(const std::vector<BiddingCurve>& curves) const {
  if (curves.size() != size_) throw Error("need one bidding curve per utility");
  return weighted(belief_, [&](std::size_t k) {
    return nodes_[k]->expected_abc_total(profile_at(curves, belief_.prices()[k]));
  });
}

CostEstimate expected_curve_cost(const MarketScenario& base, const std::vector<BiddingCurve>& curves,
                                 const PriceBelief& belief, std::size_t i, const EngineOptions& options) {
  return CurveGame(base, belief, options).expected_curve_cost(curves, i);
}

std::vector<Bump> bump_family(const PriceBelief& belief, std::size_t intervals,
                              const std::vector<double>& amplitudes) {
  if (intervals < 1) throw Error("bump family needs at least one interval");
  const double lo = belief.prices().front();
  const double hi = belief.prices().back();
  const double width = belief.size() > 1 ? (hi - lo) / static_cast<double>(intervals) : 1.0;
  // Left edge of the zero region under the first interval.
  const double floor_price = lo / 2.0;
  std::vector<Bump> out;
  for (std::size_t k = 0; k < intervals; ++k) {
    const double a = lo + width * static_cast<double>(k);
    const bool top = k + 1 == intervals;
    const double b = top ? std::numeric_limits<double>::infinity() : lo + width * static_cast<double>(k + 1);
    for (double amp : amplitudes) {
      std::vector<double> bp, val;
      if (k > 0) {
        bp.push_back(floor_price);
        val.push_back(0.0);
      }
      bp.push_back(a);
      val.push_back(amp);
      if (!top) {
        bp.push_back(b);
        val.push_back(0.0);
      }
      out.push_back({a, b, amp, BiddingCurve(bp, val)});
    }
  }
  return out;
}

EquilibriumReport verify_curve_equilibrium(const CurveGame& game, const std::vector<Bump>& family,
                                           const CurveVerifyOptions& options) {
  const std::size_t n = game.size();
  const std::vector<BiddingCurve> zero(n, BiddingCurve::constant(0.0));
  EquilibriumReport rep;
  rep.utilities.resize(n);
  std::vector<double> pair_se(n, 0.0);
  const auto& sc0 = game.node(0).scenario();

  for (std::size_t i = 0; i < n; ++i) {
    UtilityReport& u = rep.utilities[i];
    u.id = sc0.utility(i).id;
    const CostEstimate base = game.expected_curve_cost(zero, i);
    u.cost_at_profile = base.value;
    u.best.cost_at_star = base.value;
    u.best.engine = base.method;
    u.best.std_error = base.std_error;
    std::vector<CostEstimate> dev(family.size());
    parallel_for(family.size(), [&](std::size_t f) {
      std::vector<BiddingCurve> curves = zero;
      curves[i] = family[f].curve;
      dev[f] = game.expected_curve_cost(curves, i);
    });
    u.best.evaluations = family.size() + 1;
    for (std::size_t f = 0; f < family.size(); ++f) {
      if (dev[f].value < u.best.cost_at_star) {
        u.best.cost_at_star = dev[f].value;
        u.best.mu_star = family[f].amplitude;
        u.best.std_error = dev[f].std_error;
        char buf[128];
        std::snprintf(buf, sizeof buf, "bump %+g MWh on [%g, %g)", family[f].amplitude, family[f].lo,
                      family[f].hi);
        u.detail = buf;
      }
    }
    if (u.detail.empty()) u.detail = "zero curve";
    u.gain = u.cost_at_profile - u.best.cost_at_star;
    const double s1 = base.std_error.value_or(0.0), s2 = u.best.std_error.value_or(0.0);
    pair_se[i] = std::sqrt(s1 * s1 + s2 * s2);
    rep.method = base.method;
  }

  double mean_price = 0.0;
  for (std::size_t k = 0; k < game.belief().size(); ++k)
    mean_price += game.belief().masses()[k] * game.belief().prices()[k];
  if (options.tolerance) {
    rep.tolerance = *options.tolerance;
  } else if (rep.method == Method::MonteCarlo) {
    rep.tolerance = 3.0 * *std::max_element(pair_se.begin(), pair_se.end());
  } else {
    rep.tolerance = 1e-4 * mean_price;
  }
  for (const auto& u : rep.utilities) rep.max_gain = std::max(rep.max_gain, u.gain);

  // Market-level cost of the zero profile against single-utility deviations.
  rep.abc_total_at_profile = game.expected_curve_total(zero).value;
  rep.abc_total_min = rep.abc_total_at_profile;
  std::vector<double> totals(n * family.size());
  parallel_for(totals.size(), [&](std::size_t t) {
    std::vector<BiddingCurve> curves = zero;
    curves[t / family.size()] = family[t % family.size()].curve;
    totals[t] = game.expected_curve_total(curves).value;
  });
  for (std::size_t t = 0; t < totals.size(); ++t) {
    if (totals[t] < rep.abc_total_min) {
      rep.abc_total_min = totals[t];
      rep.mu_total_at_min = family[t % family.size()].amplitude;
    }
  }
  rep.efficiency_gap = rep.abc_total_at_profile - rep.abc_total_min;
  rep.is_equilibrium = rep.max_gain <= rep.tolerance && rep.efficiency_gap <= rep.tolerance;
  return rep;
}

}  // namespace twosettle
