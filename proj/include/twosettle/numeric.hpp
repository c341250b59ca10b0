#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace twosettle {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// E[X sign(X - t)] for X ~ N(m, s^2).
double gaussian_signed_mean(double m, double s, double t);

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Trapezoid integral over nodes x_k = x0 + k*h of w_k * g(x_k, side), where g
// may jump at `cut`. side is -1 for the left limit and +1 for the right one.
// The cell containing the cut is split there and w is interpolated linearly.
template <class G>
double trapezoid_cut(double x0, double h, std::span<const double> w, double cut, G&& g) {
  const std::size_t n = w.size();
  if (n < 2) return 0.0;
  const double last = x0 + h * static_cast<double>(n - 1);
  if (!(cut > x0 && cut < last)) {
    const int side = cut <= x0 ? 1 : -1;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = w[k] == 0.0 ? 0.0 : w[k] * g(x0 + h * static_cast<double>(k), side);
      acc += (k == 0 || k + 1 == n) ? 0.5 * v : v;
    }
    return acc * h;
  }
  double acc = 0.0;
  double prev = w[0] == 0.0 ? 0.0 : w[0] * g(x0, -1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double xa = x0 + h * static_cast<double>(k);
    const double xb = x0 + h * static_cast<double>(k + 1);
    if (xb <= cut) {
      const double vb = w[k + 1] == 0.0 ? 0.0 : w[k + 1] * g(xb, -1);
      acc += 0.5 * h * (prev + vb);
      prev = xb == cut ? (w[k + 1] == 0.0 ? 0.0 : w[k + 1] * g(xb, 1)) : vb;
    } else if (xa >= cut) {
      const double vb = w[k + 1] == 0.0 ? 0.0 : w[k + 1] * g(xb, 1);
      acc += 0.5 * h * (prev + vb);
      prev = vb;
    } else {
      const double t = (cut - xa) / h;
      const double wc = w[k] + t * (w[k + 1] - w[k]);
      const double left = wc == 0.0 ? 0.0 : wc * g(cut, -1);
      const double right = wc == 0.0 ? 0.0 : wc * g(cut, 1);
      const double vb = w[k + 1] == 0.0 ? 0.0 : w[k + 1] * g(xb, 1);
      acc += 0.5 * (cut - xa) * (prev + left) + 0.5 * (xb - cut) * (right + vb);
      prev = vb;
    }
  }
  return acc;
}

// Cumulative trapezoid of y, normalized so the last entry is 1.
std::vector<double> cumulative_distribution(std::span<const double> y, double h);

// Cubic Hermite interpolation of a CDF tabulated at x_k = x0 + k*h with
// derivative pdf. Clamped to [0, 1] outside the table.
double hermite_cdf(double x0, double h, std::span<const double> cdf,
                   std::span<const double> pdf, double x);

// Linear interpolation of y tabulated at x_k = x0 + k*h; 0 outside.
double linear_table(double x0, double h, std::span<const double> y, double x);

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(std::size_t order);

}  // namespace twosettle
