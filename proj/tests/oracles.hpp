#pragma once

// Reference computations used by the tests. They share no code with the
// library's engines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Jointly Gaussian errors with covariance cov (N x N, row-major). Returns
// E[ABC_i] for piecewise-linear pricing with a1 = a2 = a and b1 + b2 = 2.
// Conditioning on the aggregate Delta ~ N(mu, s^2):
//   E[Delta_i sign Delta] = mu_i (1 - 2 Phi(-mu/s)) + 2 c phi(mu/s) / s,
// with c = cov(Delta_i, Delta).
inline double gaussian_symmetric_abc(const std::vector<double>& cov, const std::vector<double>& mu,
                                     std::size_t i, double D_i, double p_d, double a, double b1,
                                     double b2) {
  const std::size_t n = mu.size();
  double m = 0.0, var = 0.0, c = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    m += mu[r];
    c += cov[i * n + r];
    for (std::size_t k = 0; k < n; ++k) var += cov[r * n + k];
  }
  // E[Delta_i Delta] = c + mu_i mu
  const double e_quad = a * (c + mu[i] * m);
  double e_sign;
  if (var <= 0.0) {
    e_sign = mu[i] * (m > 0 ? 1.0 : (m < 0 ? -1.0 : 0.0));
  } else {
    const double s = std::sqrt(var);
    e_sign = mu[i] * (1.0 - 2.0 * Phi(-m / s)) + 2.0 * c * phi(m / s) / s;
  }
  return p_d + (p_d / D_i) * (e_quad + 0.5 * (b1 - b2) * e_sign);
}

inline std::vector<double> diag_cov(const std::vector<double>& sigma) {
  const std::size_t n = sigma.size();
  std::vector<double> cov(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) cov[k * n + k] = sigma[k] * sigma[k];
  return cov;
}

inline std::vector<double> equi_cov(const std::vector<double>& sigma, double rho) {
  const std::size_t n = sigma.size();
  std::vector<double> cov(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k) cov[r * n + k] = (r == k ? 1.0 : rho) * sigma[r] * sigma[k];
  return cov;
}

// Simpson's rule on [lo, hi] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
  if (panels % 2) ++panels;
  const double h = (hi - lo) / panels;
  double acc = f(lo) + f(hi);
  for (int k = 1; k < panels; ++k) acc += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// E[ABC_i] for independent Gaussian errors and any piecewise-linear pricing,
// through E[Delta_i | Delta] and a 1-D Simpson integral split at Delta = 0.
inline double gaussian_pwl_abc(const std::vector<double>& sigma, const std::vector<double>& mu,
                               std::size_t i, double D_i, double p_d, double a1, double a2,
                               double b1, double b2) {
  double m = 0.0, var = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    m += mu[k];
    var += sigma[k] * sigma[k];
  }
  const double s = std::sqrt(var);
  const double c = sigma[i] * sigma[i];
  auto cond = [&](double d) { return mu[i] + c / var * (d - m); };
  auto dens = [&](double d) { return phi((d - m) / s) / s; };
  auto pos = [&](double d) { return cond(d) * (a1 * d + b1 - 1.0) * dens(d); };
  auto neg = [&](double d) { return cond(d) * (a2 * d + b2 - 1.0) * dens(d); };
  const double lo = std::min(0.0, m - 12 * s), hi = std::max(0.0, m + 12 * s);
  const double e = simpson(neg, lo, 0.0, 20000) + simpson(pos, 0.0, hi, 20000);
  return p_d + (p_d / D_i) * e;
}

// Market-level version: E[ABC_total] with Delta ~ N(mu, s^2).
inline double gaussian_symmetric_total(double mu, double s, double D_total, double p_d, double a,
                                       double b1, double b2) {
  const double abs_mean = mu * (1.0 - 2.0 * Phi(-mu / s)) + 2.0 * s * phi(mu / s);
  return p_d + (p_d / D_total) * (a * (s * s + mu * mu) + 0.5 * (b1 - b2) * abs_mean);
}

// Stein-type identity: E[X erf(a X + b)] for X ~ N(m, s^2).
inline double stein_erf(double m, double s, double a, double b) {
  const double c = std::sqrt(1.0 + 2.0 * a * a * s * s);
  const double u = (a * m + b) / c;
  return m * std::erf(u) + s * s * a * (2.0 / std::sqrt(M_PI)) * std::exp(-u * u) / c;
}

// Plain Monte Carlo of a realized-cost functional with its own generator.
struct McResult {
  double mean;
  double se;
};

inline McResult mc(std::size_t n, std::uint64_t seed,
                   const std::function<double(std::mt19937_64&)>& draw) {
  std::mt19937_64 rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = draw(rng);
    const double d = x - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (x - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))};
}

// sup |F_x - F_{-x}| by brute force over every sample point.
inline double ks_brute(const std::vector<double>& x) {
  std::vector<double> pts;
  for (double v : x) {
    pts.push_back(v);
    pts.push_back(-v);
  }
  double best = 0.0;
  const double n = static_cast<double>(x.size());
  for (double t : pts) {
    double f1 = 0.0, f2 = 0.0;
    for (double v : x) {
      f1 += v <= t;
      f2 += -v <= t;
    }
    best = std::max(best, std::abs(f1 - f2) / n);
  }
  return best;
}

// det of the matrix with 1 on the diagonal and b_i across the rest of row i.
inline double rank_one_det(const std::vector<double>& b) {
  double prod = 1.0, sum = 0.0;
  for (double v : b) {
    prod *= 1.0 - v;
    sum += v / (1.0 - v);
  }
  return prod * (1.0 + sum);
}

}  // namespace oracle
