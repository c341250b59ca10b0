#include "twosettle/game.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "twosettle/error.hpp"
#include "twosettle/parallel.hpp"

namespace twosettle {

BestResponseResult best_response(const CostEvaluator& evaluator, const StrategyProfile& profile,
                                 std::size_t i, const BestResponseOptions& options) {
  const auto& sc = evaluator.scenario();
  if (i >= sc.size()) throw Error("utility index out of range");
  if (profile.size() != sc.size()) throw Error("profile length does not match the scenario");
  double lo, hi;
  if (options.bracket) {
    std::tie(lo, hi) = *options.bracket;
  } else {
    const double w = std::max(1.0, 5.0 * (sc.joint().marginal(i).std_dev() + std::abs(profile.others(i))));
    lo = -w;
    hi = w;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw Error("bracket must be finite with lo < hi");
  if (options.grid_points < 3) throw Error("best response grid needs at least 3 points");
  if (!(options.tol > 0.0)) throw Error("best response tolerance must be positive");

  BestResponseResult r;
  r.lo = lo;
  r.hi = hi;
  auto eval = [&](double x) {
    ++r.evaluations;
    return evaluator.expected_abc(profile.with(i, x), i);
  };

  const std::size_t g = options.grid_points;
  std::vector<double> xs(g), cs(g);
  std::vector<CostEstimate> ests(g);
  for (std::size_t k = 0; k < g; ++k) xs[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1);
  parallel_for(g, [&](std::size_t k) { ests[k] = evaluator.expected_abc(profile.with(i, xs[k]), i); });
  r.evaluations += g;
  for (std::size_t k = 0; k < g; ++k) cs[k] = ests[k].value;
  r.engine = ests[0].method;

  std::size_t best = 0;
  for (std::size_t k = 1; k < g; ++k)
    if (cs[k] < cs[best]) best = k;
  std::size_t minima = 0;
  for (std::size_t k = 0; k < g; ++k) {
    const bool left_ok = k == 0 || cs[k] < cs[k - 1];
    const bool right_ok = k + 1 == g || cs[k] <= cs[k + 1];
    if (left_ok && right_ok) ++minima;
  }
  r.non_unimodal = minima > 1;

  double best_x = xs[best];
  CostEstimate best_est = ests[best];
  auto consider = [&](double x, const CostEstimate& e) {
    if (e.value < best_est.value) {
      best_x = x;
      best_est = e;
    }
  };

  // Golden-section search on the grid cell pair around the grid minimum.
  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[best + 1 == g ? g - 1 : best + 1];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  CostEstimate fc = eval(c), fd = eval(d);
  consider(c, fc);
  consider(d, fd);
  while (b - a > options.tol) {
    if (fc.value < fd.value) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
      consider(d, fd);
    }
  }
  r.mu_star = best_x;
  r.cost_at_star = best_est.value;
  r.std_error = best_est.std_error;
  return r;
}

EquilibriumReport verify_equilibrium(const CostEvaluator& evaluator, const StrategyProfile& profile,
                                     const VerifyOptions& options) {
  const auto& sc = evaluator.scenario();
  const std::size_t n = sc.size();
  if (profile.size() != n) throw Error("profile length does not match the scenario");

  EquilibriumReport rep;
  rep.utilities.resize(n);
  std::vector<double> pair_se(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    UtilityReport& u = rep.utilities[i];
    u.id = sc.utility(i).id;
    u.mu = profile.mu[i];
    const CostEstimate at = evaluator.expected_abc(profile, i);
    u.cost_at_profile = at.value;
    u.best = best_response(evaluator, profile, i, options.best_response);
    u.gain = u.cost_at_profile - u.best.cost_at_star;
    const double s1 = at.std_error.value_or(0.0), s2 = u.best.std_error.value_or(0.0);
    pair_se[i] = std::sqrt(s1 * s1 + s2 * s2);
  });
  rep.method = rep.utilities[0].best.engine;

  if (options.tolerance) {
    rep.tolerance = *options.tolerance;
  } else if (evaluator.engine() == Engine::MonteCarlo) {
    rep.tolerance = 3.0 * *std::max_element(pair_se.begin(), pair_se.end());
  } else {
    rep.tolerance = 1e-4 * sc.p_d();
  }
  rep.max_gain = 0.0;
  for (const auto& u : rep.utilities) rep.max_gain = std::max(rep.max_gain, u.gain);
  rep.is_equilibrium = rep.max_gain <= rep.tolerance;

  const double half = options.total_grid_half_width.value_or(
      std::max(200.0, 4.0 * std::sqrt(sc.joint().total_variance())));
  const std::size_t pts = std::max<std::size_t>(options.total_grid_points, 2);
  std::vector<double> grid(pts), totals(pts);
  for (std::size_t k = 0; k < pts; ++k)
    grid[k] = -half + 2.0 * half * static_cast<double>(k) / static_cast<double>(pts - 1);
  parallel_for(pts, [&](std::size_t k) {
    StrategyProfile p = StrategyProfile::zeros(n);
    p.mu[0] = grid[k];
    totals[k] = evaluator.expected_abc_total(p).value;
  });
  rep.abc_total_at_profile = evaluator.expected_abc_total(profile).value;
  rep.abc_total_min = rep.abc_total_at_profile;
  rep.mu_total_at_min = profile.total();
  for (std::size_t k = 0; k < pts; ++k) {
    if (totals[k] < rep.abc_total_min) {
      rep.abc_total_min = totals[k];
      rep.mu_total_at_min = grid[k];
    }
  }
  rep.efficiency_gap = rep.abc_total_at_profile - rep.abc_total_min;
  return rep;
}

MatrixRankResult equilibrium_matrix_rank(const std::vector<double>& alpha) {
  const auto m = static_cast<Eigen::Index>(alpha.size());
  if (m < 1) throw Error("alpha must have at least one entry");
  for (double a : alpha)
    if (!(a > -1.0 && a < 0.0)) throw Error("every alpha must lie in (-1, 0)");
  Eigen::MatrixXd b(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) b(r, c) = r == c ? 1.0 : -alpha[static_cast<std::size_t>(r)];
  const double det = Eigen::PartialPivLU<Eigen::MatrixXd>(b).determinant();
  MatrixRankResult out;
  out.determinant = det;
  out.determinant_raw = (m % 2 == 0) ? det : -det;
  out.sign = det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
  out.full_rank = std::isfinite(det) && det != 0.0;
  return out;
}

std::vector<FaultPoint> fault_immunity_curve(const CostEvaluator& evaluator,
                                             const std::vector<std::size_t>& fault_set,
                                             const std::vector<double>& mu_s_grid,
                                             std::size_t rational) {
  const auto& sc = evaluator.scenario();
  const std::size_t n = sc.size();
  if (fault_set.empty()) throw Error("fault set must not be empty");
  if (rational >= n) throw Error("rational utility index out of range");
  for (std::size_t s : fault_set) {
    if (s >= n) throw Error("fault set index out of range");
    if (s == rational) throw Error("rational utility must not be in the fault set");
  }
  auto profile = [&](double mu_s) {
    StrategyProfile p = StrategyProfile::zeros(n);
    const double share = mu_s / static_cast<double>(fault_set.size());
    for (std::size_t s : fault_set) p.mu[s] = share;
    return p;
  };
  const bool mc = evaluator.engine() == Engine::MonteCarlo;
  std::vector<FaultPoint> out(mu_s_grid.size());
  parallel_for(mu_s_grid.size(), [&](std::size_t k) {
    const auto p = profile(mu_s_grid[k]);
    out[k] = {mu_s_grid[k], std::abs(mu_s_grid[k]), evaluator.expected_abc(p, rational), std::nullopt};
    if (mc && k > 0) out[k].step = evaluator.monte_carlo_difference(p, profile(mu_s_grid[k - 1]), rational);
  });
  return out;
}

const char* to_string(SplitMode m) {
  switch (m) {
    case SplitMode::Independent: return "independent";
    case SplitMode::Comonotone: return "comonotone";
    case SplitMode::IidSqrt: return "iid_sqrt";
  }
  return "?";
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "independent") return SplitMode::Independent;
  if (name == "comonotone") return SplitMode::Comonotone;
  if (name == "iid_sqrt") return SplitMode::IidSqrt;
  throw Error("unknown split mode '" + name + "' (expected independent, comonotone or iid_sqrt)");
}

SplitResult market_split(const MarketScenario& scenario, std::size_t k, SplitMode mode) {
  if (k < 2 || k > 16) throw Error("split factor must be between 2 and 16");
  const auto& joint = scenario.joint();
  const std::size_t n = scenario.size();
  const double kd = static_cast<double>(k);
  const double factor = mode == SplitMode::IidSqrt ? 1.0 / std::sqrt(kd) : 1.0 / kd;

  std::vector<Utility> subs;
  std::vector<ErrorModel> marginals;
  for (std::size_t p = 0; p < n; ++p) {
    const ErrorModel scaled = joint.marginal(p).scaled(factor);
    for (std::size_t s = 0; s < k; ++s) {
      subs.push_back({scenario.utility(p).id + "#" + std::to_string(s + 1), scenario.utility(p).demand_mwh / kd});
      marginals.push_back(scaled);
    }
  }

  const bool need_matrix = mode == SplitMode::Comonotone || joint.is_correlated();
  JointErrorModel split_joint = JointErrorModel::independent(marginals);
  if (need_matrix) {
    if (!joint.all_gaussian()) throw Error("comonotone split needs Gaussian errors");
    const auto size = static_cast<Eigen::Index>(n * k);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(size, size);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) {
            const auto r = static_cast<Eigen::Index>(p * k + a);
            const auto c = static_cast<Eigen::Index>(q * k + b);
            if (r == c) continue;
            if (p == q) {
              rho(r, c) = mode == SplitMode::Comonotone ? 1.0 : 0.0;
            } else {
              // Keeps the correlation between parent aggregates unchanged.
              rho(r, c) = mode == SplitMode::Comonotone ? joint.rho(p, q) : joint.rho(p, q) / kd;
            }
          }
    split_joint = JointErrorModel::correlated(marginals, rho);
  }

  MarketScenario out(std::move(subs), std::move(split_joint), scenario.pricing(), scenario.p_d());
  SplitResult r{out, scenario.total_demand(), out.total_demand(),
                std::sqrt(joint.total_variance()), std::sqrt(out.joint().total_variance())};
  return r;
}

}  // namespace twosettle
