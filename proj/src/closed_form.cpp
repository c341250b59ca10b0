#include <algorithm>
#include <cmath>

#include "twosettle/cost.hpp"
#include "twosettle/error.hpp"
#include "twosettle/numeric.hpp"

namespace twosettle {

namespace {

// E[X erf(alpha X + beta)] for X ~ N(m, s^2) by composite Gauss-Legendre over
// m +- 8s. Panels are split at the erf midpoint and sized to resolve it.
double gaussian_erf_moment(double m, double s, double alpha, double beta, std::size_t* nodes_used) {
  static const GaussRule rule = gauss_legendre(8);
  const double lo = m - 8.0 * s, hi = m + 8.0 * s;
  const double width = 0.25 / std::max(alpha, 1e-300);
  const double panel = std::min(s / 32.0, width);
  auto integrate = [&](double a, double b) {
    if (!(b > a)) return 0.0;
    const auto panels = static_cast<std::size_t>(
        std::min(std::ceil((b - a) / panel), static_cast<double>(std::size_t{1} << 20)));
    const double w = (b - a) / static_cast<double>(panels);
    double acc = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
      const double c = a + w * (static_cast<double>(p) + 0.5);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double x = c + 0.5 * w * rule.nodes[q];
        const double z = (x - m) / s;
        acc += rule.weights[q] * 0.5 * w * x * std::erf(alpha * x + beta) * normal_pdf(z) / s;
      }
    }
    if (nodes_used) *nodes_used += panels * rule.nodes.size();
    return acc;
  };
  const double mid = std::clamp(-beta / alpha, lo, hi);
  return integrate(lo, mid) + integrate(mid, hi);
}

}  // namespace

CostEstimate CostEvaluator::closed_form(const StrategyProfile& profile, std::size_t i) const {
  check_profile(profile, i);
  const auto& sc = scenario_;
  const auto& joint = sc.joint();
  const auto lin = sc.pricing().linear_odd();
  if (!lin) throw Error("closed form needs symmetric linear pricing");
  if (!joint.all_gaussian()) throw Error("closed form needs Gaussian marginals");

  const double pd = sc.p_d();
  const double d_i = sc.utility(i).demand_mwh;
  const double mu_i = profile.mu[i];
  const double s_i = joint.marginal(i).std_dev();
  double mu_o = 0.0, s_o = 0.0, rho = 0.0;
  if (sc.size() > 1) {
    const auto agg = aggregate_others(joint, i, profile.mu);
    mu_o = agg.mu_minus_i;
    s_o = agg.sigma_minus_i;
    rho = agg.rho_i;
  }

  CostEstimate est;
  est.method = Method::ClosedFormCorrelated;
  const double quadratic = lin->a * (s_i * s_i + mu_i * mu_i + mu_i * mu_o + rho * s_i * s_o);
  double signed_moment = 0.0;  // E[Delta_i * sign(Delta)]
  if (s_o == 0.0) {
    signed_moment = gaussian_signed_mean(mu_i, s_i, -mu_o);
    est.count = 1;
  } else if (rho >= 1.0 - 1e-12) {
    // Delta > 0 exactly when Delta_i exceeds t.
    const double t = mu_i - (mu_i + mu_o) * s_i / (s_i + s_o);
    signed_moment = gaussian_signed_mean(mu_i, s_i, t);
    est.diagnostics.degenerate_correlation = true;
    est.count = 1;
  } else {
    const double r = std::sqrt(2.0 * (1.0 - rho * rho));
    const double alpha = (1.0 / s_o + rho / s_i) / r;
    const double beta = (mu_o / s_o - rho * mu_i / s_i) / r;
    signed_moment = gaussian_erf_moment(mu_i, s_i, alpha, beta, &est.count);
  }
  est.value = pd + pd / d_i * (quadratic + 0.5 * (lin->b1 - lin->b2) * signed_moment);
  return est;
}

}  // namespace twosettle
