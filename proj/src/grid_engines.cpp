#include <algorithm>
#include <cmath>
#include <limits>

#include "engines.hpp"
#include "twosettle/cost.hpp"
#include "twosettle/error.hpp"
#include "twosettle/numeric.hpp"

namespace twosettle {

double CenteredDistribution::cdf_at(double x) const {
  if (degenerate) return x < 0.0 ? 0.0 : (x > 0.0 ? 1.0 : 0.5);
  return hermite_cdf(x0, h, cdf, pdf, x);
}

double CenteredDistribution::pdf_at(double x) const {
  if (degenerate) throw Error("density undefined for degenerate model");
  return linear_table(x0, h, pdf, x);
}

std::shared_ptr<const CenteredDistribution> negated_sum(std::span<const ErrorModel> models,
                                                        std::size_t nodes) {
  auto out = std::make_shared<CenteredDistribution>();
  double var = 0.0;
  std::vector<const ErrorModel*> parts;
  for (const auto& m : models) {
    if (m.is_point_mass()) continue;
    parts.push_back(&m);
    var += m.variance();
  }
  if (parts.empty()) return out;
  if (nodes < 3) throw Error("grid needs at least 3 nodes");
  const double h = 16.0 * std::sqrt(var) / static_cast<double>(nodes - 1);
  auto grid = [&](const ErrorModel& m) {
    // Two spare cells so bounded supports end in zero nodes.
    return GridDensity::from_model(m, h, m.support_half_width() + 2.0 * h, true);
  };
  GridDensity acc = grid(*parts[0]);
  for (std::size_t k = 1; k < parts.size(); ++k) acc = convolve(acc, grid(*parts[k]));
  out->degenerate = false;
  out->x0 = acc.origin();
  out->h = acc.step();
  out->pdf = acc.values();
  out->cdf = cumulative_distribution(out->pdf, out->h);
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Richardson driver: evaluates at n, 2n-1, ... nodes until two successive
// values differ by less than tol or max_nodes is reached.
template <class F>
CostEstimate refine(F&& eval, std::size_t nodes, std::size_t max_nodes, bool richardson, double tol) {
  CostEstimate est;
  double v = eval(nodes, est.diagnostics);
  est.value = v;
  est.count = nodes;
  if (!richardson) return est;
  std::size_t n = nodes;
  for (;;) {
    const std::size_t next = 2 * n - 1;
    CostDiagnostics diag;
    const double w = eval(next, diag);
    const double change = std::abs(w - v);
    est.value = w;
    est.count = next;
    est.diagnostics = diag;
    est.diagnostics.richardson_change = change;
    est.diagnostics.converged = change < tol;
    if (change < tol || 2 * next - 1 > max_nodes) break;
    v = w;
    n = next;
  }
  return est;
}

}  // namespace

CostEstimate CostEvaluator::quadrature(const StrategyProfile& profile, std::size_t i) const {
  check_profile(profile, i);
  const auto& sc = scenario_;
  if (sc.joint().is_correlated())
    throw Error("quadrature engine needs independent errors; use closed form or MC");
  const auto lin = sc.pricing().linear_odd();
  if (!lin) throw Error("pricing is not symmetric; use 2-D quadrature");

  const double pd = sc.p_d();
  const double d_i = sc.utility(i).demand_mwh;
  const double mu_i = profile.mu[i];
  const double mu_o = profile.others(i);
  const double var_i = sc.joint().marginal(i).variance();
  const double gap = lin->b1 - lin->b2;
  const double quadratic = lin->a * (mu_i * mu_o + var_i + mu_i * mu_i);
  const double scale = pd / d_i;

  auto eval = [&](std::size_t nodes, CostDiagnostics& diag) {
    const auto others = distribution(Part::Others, i, nodes);
    const auto own = distribution(Part::Own, i, nodes);
    const double g0 = others->cdf_at(0.0);
    // Fbar over signed bounds (-delta, mu_o) and over the shifted range (0, delta + mu_o).
    auto f_signed = [&](double delta, int side) {
      if (others->degenerate) return side > 0 ? 0.5 : -0.5;
      return g0 - others->cdf_at(-delta - mu_o);
    };
    auto f_shifted = [&](double delta, int side) {
      if (others->degenerate) return side > 0 ? 0.5 : -0.5;
      return others->cdf_at(delta + mu_o) - g0;
    };
    double j_signed = 0.0, j_shifted = 0.0;
    if (own->degenerate) {
      const double s = mu_i + mu_o;
      const int side = s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
      if (side != 0 || !others->degenerate) {
        j_signed = mu_i * f_signed(mu_i, side);
        j_shifted = mu_i * f_shifted(mu_i, side);
      }
    } else {
      const double cut = others->degenerate ? -mu_o : -kInf;
      const double x0 = mu_i + own->x0;
      j_signed = trapezoid_cut(x0, own->h, own->pdf, cut,
                               [&](double d, int side) { return d * f_signed(d, side); });
      j_shifted = trapezoid_cut(x0, own->h, own->pdf, cut,
                                [&](double d, int side) { return d * f_shifted(d, side); });
    }
    diag.form_discrepancy = scale * gap * std::abs(j_signed - j_shifted);
    diag.forms_agree = diag.form_discrepancy <= 1e-6 * pd;
    return pd + scale * (quadratic + gap * j_signed);
  };

  const bool exact = sc.joint().all_point_mass();
  CostEstimate est = refine(eval, options_.nodes_1d, options_.max_nodes_1d,
                            options_.richardson && !exact, 1e-6 * pd);
  est.method = Method::Quadrature;
  return est;
}

CostEstimate CostEvaluator::two_d(const StrategyProfile& profile, std::size_t i) const {
  check_profile(profile, i);
  const auto& sc = scenario_;
  const auto& joint = sc.joint();
  const auto& pricing = sc.pricing();
  const double pd = sc.p_d();
  const double d_i = sc.utility(i).demand_mwh;
  const double mu_i = profile.mu[i];
  const std::size_t nodes = options_.nodes_2d;

  // Conditional law of the others' mismatch given own mismatch delta:
  // m0 + m1 * (delta - mu_i) + V with V independent of delta.
  double m0 = profile.others(i), m1 = 0.0;
  std::shared_ptr<const CenteredDistribution> v;
  bool degenerate_corr = false;
  if (joint.is_correlated()) {
    if (!joint.all_gaussian()) throw Error("2-D quadrature needs Gaussian marginals when correlated");
    const auto agg = aggregate_others(joint, i, profile.mu);
    const double s_i = joint.marginal(i).std_dev();
    m1 = agg.rho_i * agg.sigma_minus_i / s_i;
    const double s_c = agg.sigma_minus_i * std::sqrt(std::max(0.0, 1.0 - agg.rho_i * agg.rho_i));
    if (s_c > 1e-12 * agg.sigma_minus_i) {
      const ErrorModel cond = ErrorModel::gaussian(s_c);
      v = negated_sum(std::span<const ErrorModel>(&cond, 1), nodes);
    } else {
      v = std::make_shared<CenteredDistribution>();
      degenerate_corr = true;
    }
  } else {
    v = distribution(Part::Others, i, nodes);
  }
  const auto own = distribution(Part::Own, i, nodes);

  // Expected spot premium p_s - p_d given own mismatch delta.
  auto inner = [&](double delta, int side) {
    const double shift = delta + m0 + m1 * (delta - mu_i);
    if (v->degenerate) {
      if (side == 0) return pricing.spot_price(shift, pd) - pd;
      return pricing.spot_price(shift, pd, side) - pd;
    }
    return trapezoid_cut(v->x0, v->h, v->pdf, -shift,
                         [&](double x, int s) { return pricing.spot_price(shift + x, pd, s) - pd; });
  };

  double expectation = 0.0;
  if (own->degenerate) {
    expectation = mu_i * inner(mu_i, 0);
  } else {
    const double cut = v->degenerate ? (m1 * mu_i - m0) / (1.0 + m1) : -kInf;
    expectation = trapezoid_cut(mu_i + own->x0, own->h, own->pdf, cut,
                                [&](double d, int side) { return d * inner(d, side); });
  }
  CostEstimate est;
  est.value = pd + expectation / d_i;
  est.method = Method::TwoDQuadrature;
  est.count = nodes;
  est.diagnostics.degenerate_correlation = degenerate_corr;
  return est;
}

CostEstimate CostEvaluator::total_quadrature(const StrategyProfile& profile) const {
  check_profile(profile, 0);
  const auto& sc = scenario_;
  const auto& pricing = sc.pricing();
  const double pd = sc.p_d();
  const double d_total = sc.total_demand();
  const double mu = profile.total();

  auto eval = [&](std::size_t nodes, CostDiagnostics&) {
    const auto all = distribution(Part::All, 0, nodes);
    if (all->degenerate) return pd + mu * (pricing.spot_price(mu, pd) - pd) / d_total;
    const double e = trapezoid_cut(mu + all->x0, all->h, all->pdf, 0.0, [&](double x, int side) {
      return x * (pricing.spot_price(x, pd, side) - pd);
    });
    return pd + e / d_total;
  };
  CostEstimate est = refine(eval, options_.nodes_1d, options_.max_nodes_1d,
                            options_.richardson && !sc.joint().all_point_mass(), 1e-6 * pd);
  est.method = Method::Quadrature;
  return est;
}

}  // namespace twosettle
