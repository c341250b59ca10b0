#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "twosettle/cost.hpp"
#include "twosettle/game.hpp"

namespace twosettle {

// Piecewise-constant function of the day-ahead price. values[k] holds on
// [breakpoints[k], breakpoints[k+1]); prices below the first breakpoint take
// values[0].
class BiddingCurve {
 public:
  BiddingCurve(std::vector<double> breakpoints, std::vector<double> values);
  static BiddingCurve constant(double value);

  double operator()(double price) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// Discrete belief over the day-ahead price.
class PriceBelief {
 public:
  PriceBelief(std::vector<double> prices, std::vector<double> masses);
  static PriceBelief point(double price) { return PriceBelief({price}, {1.0}); }

  std::size_t size() const { return prices_.size(); }
  const std::vector<double>& prices() const { return prices_; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  std::vector<double> prices_;
  std::vector<double> masses_;
};

// Curve game over a belief. One cost evaluator per price node; the base
// scenario's p_d is replaced by each node price. Optional demand curves give
// D_i(p_d).
class CurveGame {
 public:
  CurveGame(const MarketScenario& base, PriceBelief belief, EngineOptions options = {},
            std::optional<std::vector<BiddingCurve>> demand_curves = std::nullopt);

  const PriceBelief& belief() const { return belief_; }
  std::size_t size() const { return size_; }
  const CostEvaluator& node(std::size_t k) const { return *nodes_.at(k); }

  CostEstimate expected_curve_cost(const std::vector<BiddingCurve>& curves, std::size_t i) const;
  CostEstimate expected_curve_total(const std::vector<BiddingCurve>& curves) const;

 private:
  PriceBelief belief_;
  std::size_t size_;
  std::vector<std::unique_ptr<CostEvaluator>> nodes_;
};

CostEstimate expected_curve_cost(const MarketScenario& base, const std::vector<BiddingCurve>& curves,
                                 const PriceBelief& belief, std::size_t i,
                                 const EngineOptions& options = {});

struct Bump {
  double lo = 0.0;
  double hi = 0.0;  // +inf for the top interval
  double amplitude = 0.0;
  BiddingCurve curve;
};

// Single-interval bumps: the belief's price range split into `intervals`
// equal pieces [lo, hi), the top one open-ended, times each amplitude.
std::vector<Bump> bump_family(const PriceBelief& belief, std::size_t intervals,
                              const std::vector<double>& amplitudes);

struct CurveVerifyOptions {
  std::optional<double> tolerance;  // default 1e-4 * mean price, 3 SE for Monte Carlo
};

// Zero curves against every bump for every utility, plus the market-level
// cost of the zero profile against the same deviations.
EquilibriumReport verify_curve_equilibrium(const CurveGame& game, const std::vector<Bump>& family,
                                           const CurveVerifyOptions& options = {});

}  // namespace twosettle
