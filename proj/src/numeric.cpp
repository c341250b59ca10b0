#include "twosettle/numeric.hpp"

#include <algorithm>
#include <numbers>

namespace twosettle {

double gaussian_signed_mean(double m, double s, double t) {
  if (s <= 0.0) return t < m ? m : (t > m ? -m : 0.0);
  const double z = (t - m) / s;
  return m * (1.0 - 2.0 * normal_cdf(z)) + 2.0 * s * normal_pdf(z);
}

std::vector<double> cumulative_distribution(std::span<const double> y, double h) {
  std::vector<double> c(y.size(), 0.0);
  KahanSum acc;
  for (std::size_t k = 1; k < y.size(); ++k) {
    acc.add(0.5 * h * (y[k - 1] + y[k]));
    c[k] = acc.sum;
  }
  const double total = c.empty() ? 0.0 : c.back();
  if (total > 0.0)
    for (double& v : c) v /= total;
  return c;
}

double hermite_cdf(double x0, double h, std::span<const double> cdf,
                   std::span<const double> pdf, double x) {
  const std::size_t n = cdf.size();
  const double u = (x - x0) / h;
  if (!(u > 0.0)) return 0.0;
  if (u >= static_cast<double>(n - 1)) return 1.0;
  const auto k = static_cast<std::size_t>(u);
  const double t = u - static_cast<double>(k);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  const double v = h00 * cdf[k] + h10 * h * pdf[k] + h01 * cdf[k + 1] + h11 * h * pdf[k + 1];
  return std::clamp(v, 0.0, 1.0);
}

double linear_table(double x0, double h, std::span<const double> y, double x) {
  const std::size_t n = y.size();
  const double u = (x - x0) / h;
  if (!(u >= 0.0) || u > static_cast<double>(n - 1)) return 0.0;
  const auto k = std::min(static_cast<std::size_t>(u), n - 2);
  const double t = u - static_cast<double>(k);
  return y[k] + t * (y[k + 1] - y[k]);
}

GaussRule gauss_legendre(std::size_t order) {
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(order) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(order) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

}  // namespace twosettle
