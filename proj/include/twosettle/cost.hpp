#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "twosettle/pricing.hpp"
#include "twosettle/uncertainty.hpp"

namespace twosettle {

struct Utility {
  std::string id;
  double demand_mwh = 0.0;
};

class MarketScenario {
 public:
  MarketScenario(std::vector<Utility> utilities, JointErrorModel joint, PricingModel pricing,
                 double p_d);

  std::size_t size() const { return utilities_.size(); }
  const std::vector<Utility>& utilities() const { return utilities_; }
  const Utility& utility(std::size_t i) const { return utilities_.at(i); }
  const JointErrorModel& joint() const { return joint_; }
  const PricingModel& pricing() const { return pricing_; }
  double p_d() const { return p_d_; }
  double total_demand() const;
  std::size_t index_of(const std::string& id) const;

  MarketScenario with_p_d(double p_d) const;
  MarketScenario with_pricing(PricingModel pricing) const;
  MarketScenario with_demands(std::span<const double> demands) const;

 private:
  std::vector<Utility> utilities_;
  JointErrorModel joint_;
  PricingModel pricing_;
  double p_d_;
};

// Bid deviations mu_i (MWh); the bid is Q_i = predicted_i - mu_i.
struct StrategyProfile {
  std::vector<double> mu;

  static StrategyProfile zeros(std::size_t n) { return {std::vector<double>(n, 0.0)}; }
  std::size_t size() const { return mu.size(); }
  double total() const;
  double others(std::size_t i) const;
  StrategyProfile with(std::size_t i, double value) const;
};

enum class Method { Quadrature, ClosedFormCorrelated, MonteCarlo, TwoDQuadrature };

const char* to_string(Method m);

struct CostDiagnostics {
  // Change of the value between the last two grid resolutions ($/MWh).
  double richardson_change = 0.0;
  bool converged = true;
  // Gap between the signed-bound and shifted-bound forms of the Fbar term ($/MWh).
  double form_discrepancy = 0.0;
  bool forms_agree = true;
  // Perfect correlation between own and aggregate other errors.
  bool degenerate_correlation = false;
};

struct CostEstimate {
  double value = 0.0;  // $/MWh
  Method method = Method::Quadrature;
  std::optional<double> std_error;
  std::size_t count = 0;  // samples or nodes
  CostDiagnostics diagnostics;
};

struct RealizedCost {
  double mismatch = 0.0;    // Delta (MWh)
  double spot_price = 0.0;  // $/MWh
  std::vector<double> cost_usd;
  std::vector<double> abc;  // $/MWh
  double total_abc = 0.0;
};

// eps_i = predicted_i - actual_i.
RealizedCost realized_cost(const MarketScenario& scenario, const StrategyProfile& profile,
                           std::span<const double> eps);

enum class Engine { Auto, Quadrature, ClosedForm, TwoD, MonteCarlo };

const char* to_string(Engine e);
Engine parse_engine(const std::string& name);

struct EngineOptions {
  Engine engine = Engine::Auto;
  std::size_t nodes_1d = 4097;
  std::size_t nodes_2d = 513;
  std::size_t max_nodes_1d = 65537;
  bool richardson = true;
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 42;
};

struct CenteredDistribution;

// Expected-cost evaluator bound to one scenario. Grid densities of the other
// utilities' errors depend only on the scenario, so they are built once per
// utility and resolution and reused across profiles. Thread-safe.
class CostEvaluator {
 public:
  CostEvaluator(MarketScenario scenario, EngineOptions options = {});
  ~CostEvaluator();
  CostEvaluator(const CostEvaluator&) = delete;
  CostEvaluator& operator=(const CostEvaluator&) = delete;

  const MarketScenario& scenario() const { return scenario_; }
  const EngineOptions& options() const { return options_; }
  // Engine used for per-utility costs after resolving Auto.
  Engine engine() const { return engine_; }

  CostEstimate expected_abc(const StrategyProfile& profile, std::size_t i) const;
  CostEstimate expected_abc_total(const StrategyProfile& profile) const;

  CostEstimate quadrature(const StrategyProfile& profile, std::size_t i) const;
  CostEstimate closed_form(const StrategyProfile& profile, std::size_t i) const;
  CostEstimate two_d(const StrategyProfile& profile, std::size_t i) const;
  CostEstimate monte_carlo(const StrategyProfile& profile, std::size_t i) const;
  CostEstimate total_quadrature(const StrategyProfile& profile) const;
  CostEstimate total_monte_carlo(const StrategyProfile& profile) const;
  // E[ABC_i(a)] - E[ABC_i(b)] from one set of draws; the error is that of the paired difference.
  CostEstimate monte_carlo_difference(const StrategyProfile& a, const StrategyProfile& b,
                                      std::size_t i) const;

 private:
  enum class Part { Others, Own, All };
  std::shared_ptr<const CenteredDistribution> distribution(Part part, std::size_t i,
                                                           std::size_t nodes) const;
  void check_profile(const StrategyProfile& profile, std::size_t i) const;

  MarketScenario scenario_;
  EngineOptions options_;
  Engine engine_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<int, std::size_t, std::size_t>,
                   std::shared_ptr<const CenteredDistribution>>
      cache_;
};

// Engine picked by Auto: nested quadrature for independent errors with linear
// odd pricing, the closed form for correlated Gaussians with that pricing and
// the tensor grid for everything else.
Engine select_engine(const MarketScenario& scenario);

CostEstimate expected_abc_quadrature(const MarketScenario& scenario, const StrategyProfile& profile,
                                     std::size_t i, const EngineOptions& options = {});
CostEstimate expected_abc_closed_form(const MarketScenario& scenario, const StrategyProfile& profile,
                                      std::size_t i, const EngineOptions& options = {});
CostEstimate expected_abc_2d_quadrature(const MarketScenario& scenario,
                                        const StrategyProfile& profile, std::size_t i,
                                        const EngineOptions& options = {});
CostEstimate expected_abc_mc(const MarketScenario& scenario, const StrategyProfile& profile,
                             std::size_t i, std::size_t n, std::uint64_t seed);
CostEstimate expected_abc_total(const MarketScenario& scenario, const StrategyProfile& profile,
                                const EngineOptions& options = {});

}  // namespace twosettle
