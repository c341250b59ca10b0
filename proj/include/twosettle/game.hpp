#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twosettle/cost.hpp"

namespace twosettle {

struct BestResponseOptions {
  // Search interval (MWh); default +-5 (sigma_i + |mu_-i|).
  std::optional<std::pair<double, double>> bracket;
  double tol = 1e-3;  // MWh
  std::size_t grid_points = 64;
};

struct BestResponseResult {
  double mu_star = 0.0;
  double cost_at_star = 0.0;
  std::optional<double> std_error;
  double lo = 0.0;
  double hi = 0.0;
  Method engine = Method::Quadrature;
  bool non_unimodal = false;
  std::size_t evaluations = 0;
};

BestResponseResult best_response(const CostEvaluator& evaluator, const StrategyProfile& profile,
                                 std::size_t i, const BestResponseOptions& options = {});

struct UtilityReport {
  std::string id;
  double mu = 0.0;
  double cost_at_profile = 0.0;
  BestResponseResult best;
  double gain = 0.0;  // cost_at_profile - best.cost_at_star
  std::string detail;
};

struct EquilibriumReport {
  bool is_equilibrium = false;
  double max_gain = 0.0;
  double tolerance = 0.0;
  std::vector<UtilityReport> utilities;
  double abc_total_at_profile = 0.0;
  double abc_total_min = 0.0;
  double mu_total_at_min = 0.0;
  double efficiency_gap = 0.0;
  Method method = Method::Quadrature;
};

struct VerifyOptions {
  // Default 1e-4 * p_d for grid engines, 3 standard errors for Monte Carlo.
  std::optional<double> tolerance;
  BestResponseOptions best_response;
  std::size_t total_grid_points = 81;
  // Half width of the aggregate grid; default max(200, 4 sd of the total error).
  std::optional<double> total_grid_half_width;
};

EquilibriumReport verify_equilibrium(const CostEvaluator& evaluator, const StrategyProfile& profile,
                                     const VerifyOptions& options = {});

struct MatrixRankResult {
  // Matrix with 1 on the diagonal and b_i = -alpha_i across row i.
  double determinant = 0.0;
  // Matrix with -1 on the diagonal and alpha_i across row i.
  double determinant_raw = 0.0;
  int sign = 0;
  bool full_rank = false;
};

MatrixRankResult equilibrium_matrix_rank(const std::vector<double>& alpha);

struct FaultPoint {
  double mu_s = 0.0;
  double abs_mu_s = 0.0;
  CostEstimate cost;
  // Monte Carlo only: cost change from the previous grid point on the same draws.
  std::optional<CostEstimate> step;
};

// Utilities in S share mu_S equally; everyone else bids 0.
std::vector<FaultPoint> fault_immunity_curve(const CostEvaluator& evaluator,
                                             const std::vector<std::size_t>& fault_set,
                                             const std::vector<double>& mu_s_grid,
                                             std::size_t rational);

enum class SplitMode {
  // Sub-errors scaled by 1/k and independent of their siblings.
  Independent,
  // Sub-errors scaled by 1/k and perfectly correlated with their siblings.
  Comonotone,
  // Sub-errors scaled by 1/sqrt(k) and independent.
  IidSqrt,
};

const char* to_string(SplitMode m);
SplitMode parse_split_mode(const std::string& name);

struct SplitResult {
  MarketScenario scenario;
  double total_demand_before = 0.0;
  double total_demand_after = 0.0;
  double error_sd_before = 0.0;  // sd of the market-wide error
  double error_sd_after = 0.0;
};

SplitResult market_split(const MarketScenario& scenario, std::size_t k,
                         SplitMode mode = SplitMode::Independent);

}  // namespace twosettle
