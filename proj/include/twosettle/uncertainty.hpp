#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace twosettle {

using Rng = std::mt19937_64;

// Random source for one stream of draws.
struct Sampler {
  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  Rng rng;
  std::normal_distribution<double> normal{0.0, 1.0};
  // Uniform on the open interval (0, 1).
  double uniform();
};

enum class ErrorKind { Gaussian, Laplace, Empirical, PointMass };

const char* to_string(ErrorKind kind);

// Zero-mean marginal distribution of a prediction error (MWh).
class ErrorModel {
 public:
  static constexpr std::size_t kHistogramBins = 256;
  static constexpr std::size_t kMinEmpiricalSamples = 30;

  static ErrorModel gaussian(double sigma);
  static ErrorModel laplace(double scale);
  // Samples are mean-centered here.
  static ErrorModel empirical(std::vector<double> samples);
  static ErrorModel point_mass(double value = 0.0);

  ErrorKind kind() const { return kind_; }
  bool is_point_mass() const { return kind_ == ErrorKind::PointMass; }
  // sigma for Gaussian, scale for Laplace, 0 otherwise.
  double parameter() const { return param_; }
  double variance() const;
  double std_dev() const;
  // Centered samples; empty unless Empirical.
  std::span<const double> samples() const;
  bool is_symmetric() const { return kind_ != ErrorKind::Empirical; }

  double cdf(double x) const;
  // Half width of the interval a grid must cover: 8 sd for Gaussian, 32 scales
  // for Laplace (tail mass below 1e-14), the sample range for Empirical.
  double support_half_width() const;
  // Same family with every value multiplied by c > 0.
  ErrorModel scaled(double c) const;

  double draw(Sampler& s) const;

 private:
  struct Histogram;
  ErrorModel(ErrorKind kind, double param) : kind_(kind), param_(param) {}

  ErrorKind kind_;
  double param_;
  std::shared_ptr<const Histogram> hist_;

  friend double density(const ErrorModel& model, double x);
};

double density(const ErrorModel& model, double x);

// Marginals plus either independence or a correlation matrix.
class JointErrorModel {
 public:
  static JointErrorModel independent(std::vector<ErrorModel> marginals);
  // Requires Gaussian marginals and a symmetric, unit-diagonal, non-negative,
  // positive semidefinite matrix. An identity matrix yields an independent model.
  static JointErrorModel correlated(std::vector<ErrorModel> marginals, Eigen::MatrixXd rho);

  std::size_t size() const { return marginals_.size(); }
  const ErrorModel& marginal(std::size_t j) const { return marginals_.at(j); }
  const std::vector<ErrorModel>& marginals() const { return marginals_; }
  bool is_correlated() const { return correlated_; }
  double rho(std::size_t a, std::size_t b) const;
  Eigen::MatrixXd correlation() const;
  bool all_gaussian() const;
  bool all_point_mass() const;
  double covariance(std::size_t a, std::size_t b) const;
  // Variance of the sum of all errors.
  double total_variance() const;

  // One joint draw of all errors into out (size N).
  void draw(Sampler& s, std::span<double> out, std::span<double> scratch) const;

 private:
  std::vector<ErrorModel> marginals_;
  bool correlated_ = false;
  Eigen::MatrixXd rho_;
  Eigen::MatrixXd factor_;
};

// Draws are generated in chunks of 2^16 rows; chunk c is seeded from
// derive_seed(seed, c) so the result does not depend on the worker count.
inline constexpr std::size_t kSampleChunk = std::size_t{1} << 16;

std::vector<double> sample(const ErrorModel& model, std::size_t n, std::uint64_t seed);
// n x N matrix of joint draws.
Eigen::MatrixXd sample(const JointErrorModel& joint, std::size_t n, std::uint64_t seed);

// Density tabulated at x_k = origin + k*step.
class GridDensity {
 public:
  GridDensity(double origin, double step, std::vector<double> values);

  // Nodes at k*step for |k*step| <= half_width. Narrow Gaussians, Laplace and
  // Empirical models use cell averages, wide Gaussians point values. With
  // reflect the grid describes -X instead of X.
  static GridDensity from_model(const ErrorModel& model, double step, double half_width,
                                bool reflect = false);

  double origin() const { return origin_; }
  double step() const { return step_; }
  std::size_t size() const { return values_.size(); }
  double x(std::size_t k) const { return origin_ + step_ * static_cast<double>(k); }
  double back() const { return x(size() - 1); }
  const std::vector<double>& values() const { return values_; }

  double integral() const;
  double mean() const;
  double variance() const;
  // values[k] vs values[n-1-k].
  bool is_symmetric(double tol) const;
  // Non-increasing away from the grid center, adjacent bins compared with slack tol.
  bool is_central_dominant(double tol) const;
  double pdf(double x) const;

 private:
  double origin_;
  double step_;
  std::vector<double> values_;
};

// Density of the sum of independent variables. Nodes carrying less than
// 1e-14 tail mass are trimmed, the same count from both ends.
GridDensity convolve(const GridDensity& a, const GridDensity& b);

struct OthersAggregate {
  double mu_minus_i;
  double sigma_minus_i;
  double rho_i;
};

OthersAggregate aggregate_others(const JointErrorModel& joint, std::size_t i,
                                 std::span<const double> mu);

struct KsResult {
  double statistic;
  double critical_value;
  bool reject_at_5pct;
  std::size_t n;
};

// Two-sample Kolmogorov-Smirnov test of {x} against {-x}.
KsResult ks_symmetry_test(std::span<const double> samples);

}  // namespace twosettle
