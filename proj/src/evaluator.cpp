#include <cmath>

#include "engines.hpp"
#include "twosettle/cost.hpp"
#include "twosettle/error.hpp"

namespace twosettle {

Engine select_engine(const MarketScenario& scenario) {
  const bool linear_odd = scenario.pricing().linear_odd().has_value();
  if (!linear_odd) return Engine::TwoD;
  return scenario.joint().is_correlated() ? Engine::ClosedForm : Engine::Quadrature;
}

CostEvaluator::CostEvaluator(MarketScenario scenario, EngineOptions options)
    : scenario_(std::move(scenario)), options_(options) {
  engine_ = options_.engine == Engine::Auto ? select_engine(scenario_) : options_.engine;
  if (options_.nodes_1d < 3 || options_.nodes_2d < 3) throw Error("grids need at least 3 nodes");
}

CostEvaluator::~CostEvaluator() = default;

void CostEvaluator::check_profile(const StrategyProfile& profile, std::size_t i) const {
  if (profile.size() != scenario_.size())
    throw Error("profile has " + std::to_string(profile.size()) + " entries, scenario has " +
                std::to_string(scenario_.size()) + " utilities");
  if (i >= scenario_.size()) throw Error("utility index out of range");
  for (double v : profile.mu)
    if (!std::isfinite(v)) throw Error("profile values must be finite");
}

std::shared_ptr<const CenteredDistribution> CostEvaluator::distribution(Part part, std::size_t i,
                                                                        std::size_t nodes) const {
  const auto key = std::make_tuple(static_cast<int>(part), part == Part::All ? 0 : i, nodes);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const auto& joint = scenario_.joint();
  std::shared_ptr<const CenteredDistribution> built;
  if (part == Part::Own) {
    built = negated_sum(std::span<const ErrorModel>(&joint.marginal(i), 1), nodes);
  } else if (part == Part::Others) {
    if (joint.is_correlated()) throw Error("others' distribution needs independent errors");
    std::vector<ErrorModel> rest;
    for (std::size_t j = 0; j < joint.size(); ++j)
      if (j != i) rest.push_back(joint.marginal(j));
    built = negated_sum(rest, nodes);
  } else if (joint.is_correlated()) {
    const ErrorModel total = ErrorModel::gaussian(std::sqrt(joint.total_variance()));
    built = negated_sum(std::span<const ErrorModel>(&total, 1), nodes);
  } else {
    built = negated_sum(joint.marginals(), nodes);
  }
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(key, built).first->second;
}

CostEstimate CostEvaluator::expected_abc(const StrategyProfile& profile, std::size_t i) const {
  switch (engine_) {
    case Engine::Quadrature: return quadrature(profile, i);
    case Engine::ClosedForm: return closed_form(profile, i);
    case Engine::TwoD: return two_d(profile, i);
    case Engine::MonteCarlo: return monte_carlo(profile, i);
    case Engine::Auto: break;
  }
  throw Error("engine not resolved");
}

CostEstimate CostEvaluator::expected_abc_total(const StrategyProfile& profile) const {
  if (engine_ == Engine::MonteCarlo) return total_monte_carlo(profile);
  return total_quadrature(profile);
}

CostEstimate expected_abc_quadrature(const MarketScenario& scenario, const StrategyProfile& profile,
                                     std::size_t i, const EngineOptions& options) {
  return CostEvaluator(scenario, options).quadrature(profile, i);
}

CostEstimate expected_abc_closed_form(const MarketScenario& scenario, const StrategyProfile& profile,
                                      std::size_t i, const EngineOptions& options) {
  return CostEvaluator(scenario, options).closed_form(profile, i);
}

CostEstimate expected_abc_2d_quadrature(const MarketScenario& scenario,
                                        const StrategyProfile& profile, std::size_t i,
                                        const EngineOptions& options) {
  return CostEvaluator(scenario, options).two_d(profile, i);
}

CostEstimate expected_abc_mc(const MarketScenario& scenario, const StrategyProfile& profile,
                             std::size_t i, std::size_t n, std::uint64_t seed) {
  EngineOptions options;
  options.engine = Engine::MonteCarlo;
  options.mc_samples = n;
  options.seed = seed;
  return CostEvaluator(scenario, options).monte_carlo(profile, i);
}

CostEstimate expected_abc_total(const MarketScenario& scenario, const StrategyProfile& profile,
                                const EngineOptions& options) {
  return CostEvaluator(scenario, options).expected_abc_total(profile);
}

}  // namespace twosettle
