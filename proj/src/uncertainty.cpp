#include "twosettle/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twosettle/error.hpp"
#include "twosettle/numeric.hpp"
#include "twosettle/parallel.hpp"

namespace twosettle {

double Sampler::uniform() {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    if (u > 0.0) return u;
  }
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Gaussian: return "gaussian";
    case ErrorKind::Laplace: return "laplace";
    case ErrorKind::Empirical: return "empirical";
    case ErrorKind::PointMass: return "point_mass";
  }
  return "?";
}

struct ErrorModel::Histogram {
  std::vector<double> samples;
  double lo = 0.0;
  double width = 0.0;
  std::array<double, kHistogramBins> dens{};
  std::array<double, kHistogramBins + 1> edge_cdf{};
  double variance = 0.0;
};

ErrorModel ErrorModel::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("gaussian sigma must be positive");
  return ErrorModel(ErrorKind::Gaussian, sigma);
}

ErrorModel ErrorModel::laplace(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("laplace scale must be positive");
  return ErrorModel(ErrorKind::Laplace, scale);
}

ErrorModel ErrorModel::point_mass(double value) {
  if (value != 0.0) throw Error("only point_mass(0) is allowed");
  return ErrorModel(ErrorKind::PointMass, 0.0);
}

ErrorModel ErrorModel::empirical(std::vector<double> samples) {
  if (samples.size() < kMinEmpiricalSamples)
    throw Error("empirical model needs at least 30 samples, got " + std::to_string(samples.size()));
  for (double v : samples)
    if (!std::isfinite(v)) throw Error("empirical samples must be finite");
  KahanSum sum;
  for (double v : samples) sum.add(v);
  const double mean = sum.sum / static_cast<double>(samples.size());
  for (double& v : samples) v -= mean;

  auto h = std::make_shared<Histogram>();
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  h->lo = *mn;
  h->width = (*mx - *mn) / static_cast<double>(kHistogramBins);
  if (!(h->width > 0.0)) throw Error("empirical samples have zero variance");

  std::array<std::size_t, kHistogramBins> counts{};
  KahanSum sq;
  for (double v : samples) {
    auto b = static_cast<std::size_t>((v - h->lo) / h->width);
    counts[std::min(b, kHistogramBins - 1)] += 1;
    sq.add(v * v);
  }
  const double n = static_cast<double>(samples.size());
  h->variance = sq.sum / n;
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    h->dens[b] = static_cast<double>(counts[b]) / (n * h->width);
    h->edge_cdf[b + 1] = h->edge_cdf[b] + static_cast<double>(counts[b]) / n;
  }
  h->edge_cdf[kHistogramBins] = 1.0;
  h->samples = std::move(samples);

  ErrorModel m(ErrorKind::Empirical, 0.0);
  m.hist_ = std::move(h);
  return m;
}

double ErrorModel::variance() const {
  switch (kind_) {
    case ErrorKind::Gaussian: return param_ * param_;
    case ErrorKind::Laplace: return 2.0 * param_ * param_;
    case ErrorKind::Empirical: return hist_->variance;
    case ErrorKind::PointMass: return 0.0;
  }
  return 0.0;
}

double ErrorModel::std_dev() const { return std::sqrt(variance()); }

std::span<const double> ErrorModel::samples() const {
  if (!hist_) return {};
  return hist_->samples;
}

double ErrorModel::cdf(double x) const {
  switch (kind_) {
    case ErrorKind::Gaussian: return normal_cdf(x / param_);
    case ErrorKind::Laplace:
      return x < 0.0 ? 0.5 * std::exp(x / param_) : 1.0 - 0.5 * std::exp(-x / param_);
    case ErrorKind::Empirical: {
      const double u = (x - hist_->lo) / hist_->width;
      if (!(u > 0.0)) return 0.0;
      if (u >= static_cast<double>(kHistogramBins)) return 1.0;
      const auto b = static_cast<std::size_t>(u);
      const double t = u - static_cast<double>(b);
      return hist_->edge_cdf[b] + t * (hist_->edge_cdf[b + 1] - hist_->edge_cdf[b]);
    }
    case ErrorKind::PointMass: return x < 0.0 ? 0.0 : 1.0;
  }
  return 0.0;
}

double ErrorModel::support_half_width() const {
  switch (kind_) {
    case ErrorKind::Gaussian: return 8.0 * param_;
    case ErrorKind::Laplace: return 32.0 * param_;
    case ErrorKind::Empirical:
      return std::max(-hist_->lo, hist_->lo + hist_->width * static_cast<double>(kHistogramBins));
    case ErrorKind::PointMass: return 0.0;
  }
  return 0.0;
}

ErrorModel ErrorModel::scaled(double c) const {
  if (!(c > 0.0)) throw Error("scale factor must be positive");
  switch (kind_) {
    case ErrorKind::Gaussian: return gaussian(param_ * c);
    case ErrorKind::Laplace: return laplace(param_ * c);
    case ErrorKind::Empirical: {
      std::vector<double> s(hist_->samples.begin(), hist_->samples.end());
      for (double& v : s) v *= c;
      return empirical(std::move(s));
    }
    case ErrorKind::PointMass: return *this;
  }
  return *this;
}

double ErrorModel::draw(Sampler& s) const {
  switch (kind_) {
    case ErrorKind::Gaussian: return param_ * s.normal(s.rng);
    case ErrorKind::Laplace: {
      const double u = s.uniform();
      return u < 0.5 ? param_ * std::log(2.0 * u) : -param_ * std::log(2.0 * (1.0 - u));
    }
    case ErrorKind::Empirical: {
      std::uniform_int_distribution<std::size_t> pick(0, hist_->samples.size() - 1);
      return hist_->samples[pick(s.rng)];
    }
    case ErrorKind::PointMass: return 0.0;
  }
  return 0.0;
}

double density(const ErrorModel& model, double x) {
  switch (model.kind_) {
    case ErrorKind::Gaussian: return normal_pdf(x / model.param_) / model.param_;
    case ErrorKind::Laplace: return std::exp(-std::abs(x) / model.param_) / (2.0 * model.param_);
    case ErrorKind::Empirical: {
      const auto& h = *model.hist_;
      const double u = (x - h.lo) / h.width;
      if (u < 0.0 || u > static_cast<double>(ErrorModel::kHistogramBins)) return 0.0;
      const auto b = std::min(static_cast<std::size_t>(u), ErrorModel::kHistogramBins - 1);
      return h.dens[b];
    }
    case ErrorKind::PointMass: throw Error("density undefined for degenerate model");
  }
  return 0.0;
}

// ---------------------------------------------------------------- joint model

JointErrorModel JointErrorModel::independent(std::vector<ErrorModel> marginals) {
  if (marginals.empty()) throw Error("joint model needs at least one marginal");
  JointErrorModel j;
  j.marginals_ = std::move(marginals);
  return j;
}

JointErrorModel JointErrorModel::correlated(std::vector<ErrorModel> marginals, Eigen::MatrixXd rho) {
  const auto n = static_cast<Eigen::Index>(marginals.size());
  if (n == 0) throw Error("joint model needs at least one marginal");
  if (rho.rows() != n || rho.cols() != n)
    throw Error("correlation matrix is " + std::to_string(rho.rows()) + "x" +
                std::to_string(rho.cols()) + " but there are " + std::to_string(n) + " utilities");
  bool identity = true;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (std::abs(rho(a, a) - 1.0) > 1e-12) throw Error("correlation diagonal must be 1");
    for (Eigen::Index b = 0; b < n; ++b) {
      const double v = rho(a, b);
      if (!std::isfinite(v)) throw Error("correlation entries must be finite");
      if (std::abs(v - rho(b, a)) > 1e-12) throw Error("correlation matrix is not symmetric");
      if (v < 0.0) throw Error("correlations must be non-negative");
      if (v > 1.0 + 1e-12) throw Error("correlations must not exceed 1");
      if (a != b && v != 0.0) identity = false;
    }
  }
  if (identity) return independent(std::move(marginals));
  for (const auto& m : marginals)
    if (m.kind() != ErrorKind::Gaussian) throw Error("correlated errors require Gaussian marginals");

  Eigen::MatrixXd sym = 0.5 * (rho + rho.transpose());
  sym.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw Error("correlation eigen decomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda(k) < -1e-10) throw Error("correlation matrix is not positive semidefinite");
    lambda(k) = std::sqrt(std::max(lambda(k), 0.0));
  }
  Eigen::MatrixXd root = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd sigma(n);
  for (Eigen::Index k = 0; k < n; ++k) sigma(k) = marginals[static_cast<std::size_t>(k)].std_dev();

  JointErrorModel j;
  j.marginals_ = std::move(marginals);
  j.correlated_ = true;
  j.rho_ = sym;
  j.factor_ = sigma.asDiagonal() * root;
  return j;
}

double JointErrorModel::rho(std::size_t a, std::size_t b) const {
  if (a >= size() || b >= size()) throw Error("utility index out of range");
  if (a == b) return 1.0;
  return correlated_ ? rho_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) : 0.0;
}

Eigen::MatrixXd JointErrorModel::correlation() const {
  if (correlated_) return rho_;
  const auto n = static_cast<Eigen::Index>(size());
  return Eigen::MatrixXd::Identity(n, n);
}

bool JointErrorModel::all_gaussian() const {
  return std::all_of(marginals_.begin(), marginals_.end(),
                     [](const ErrorModel& m) { return m.kind() == ErrorKind::Gaussian; });
}

bool JointErrorModel::all_point_mass() const {
  return std::all_of(marginals_.begin(), marginals_.end(),
                     [](const ErrorModel& m) { return m.is_point_mass(); });
}

double JointErrorModel::covariance(std::size_t a, std::size_t b) const {
  if (a == b) return marginal(a).variance();
  return rho(a, b) * marginal(a).std_dev() * marginal(b).std_dev();
}

double JointErrorModel::total_variance() const {
  double v = 0.0;
  for (std::size_t a = 0; a < size(); ++a) v += marginals_[a].variance();
  if (correlated_)
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = a + 1; b < size(); ++b) v += 2.0 * covariance(a, b);
  return v;
}

void JointErrorModel::draw(Sampler& s, std::span<double> out, std::span<double> scratch) const {
  const std::size_t n = size();
  if (!correlated_) {
    for (std::size_t j = 0; j < n; ++j) out[j] = marginals_[j].draw(s);
    return;
  }
  for (std::size_t j = 0; j < n; ++j) scratch[j] = s.normal(s.rng);
  for (std::size_t a = 0; a < n; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < n; ++b)
      acc += factor_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * scratch[b];
    out[a] = acc;
  }
}

// ------------------------------------------------------------------ sampling

Eigen::MatrixXd sample(const JointErrorModel& joint, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("sample count must be at least 1");
  const std::size_t cols = joint.size();
  // Row-major storage so every chunk writes a contiguous block.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, [&](std::size_t c) {
    Sampler s(derive_seed(seed, c));
    std::vector<double> scratch(cols);
    const std::size_t end = std::min(n, (c + 1) * kSampleChunk);
    for (std::size_t r = c * kSampleChunk; r < end; ++r)
      joint.draw(s, std::span<double>(out.data() + r * cols, cols), scratch);
  });
  return out;
}

std::vector<double> sample(const ErrorModel& model, std::size_t n, std::uint64_t seed) {
  const Eigen::MatrixXd m = sample(JointErrorModel::independent({model}), n, seed);
  return std::vector<double>(m.data(), m.data() + m.size());
}

// -------------------------------------------------------------- grid density

GridDensity::GridDensity(double origin, double step, std::vector<double> values)
    : origin_(origin), step_(step), values_(std::move(values)) {
  if (!(step_ > 0.0) || !std::isfinite(step_)) throw Error("grid step must be positive");
  if (values_.size() < 2) throw Error("grid density needs at least two nodes");
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("grid density values must be non-negative");
  if (std::abs(integral() - 1.0) > 1e-6) throw Error("grid density does not integrate to 1");
}

GridDensity GridDensity::from_model(const ErrorModel& model, double step, double half_width,
                                    bool reflect) {
  if (model.is_point_mass()) throw Error("density undefined for degenerate model");
  if (!(step > 0.0)) throw Error("grid step must be positive");
  const auto m = static_cast<std::size_t>(std::floor(half_width / step + 1e-9));
  if (m < 1) throw Error("grid step is wider than the support");
  const std::size_t n = 2 * m + 1;
  std::vector<double> v(n);
  const bool point = model.kind() == ErrorKind::Gaussian && model.parameter() >= 4.0 * step;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = step * (static_cast<double>(k) - static_cast<double>(m));
    if (point)
      v[k] = density(model, x);
    else
      v[k] = std::max(0.0, model.cdf(x + 0.5 * step) - model.cdf(x - 0.5 * step)) / step;
  }
  if (model.is_symmetric()) {
    // Enforce exact mirror symmetry against rounding in cdf differences.
    for (std::size_t k = 0; k < m; ++k) v[n - 1 - k] = v[k];
  }
  if (reflect) std::reverse(v.begin(), v.end());
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += (k == 0 || k + 1 == n) ? 0.5 * v[k] : v[k];
  total *= step;
  if (!(total > 0.0)) throw Error("grid density has no mass");
  for (double& x : v) x /= total;
  return GridDensity(-step * static_cast<double>(m), step, std::move(v));
}

double GridDensity::integral() const {
  KahanSum s;
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) s.add((k == 0 || k + 1 == n) ? 0.5 * values_[k] : values_[k]);
  return s.sum * step_;
}

double GridDensity::mean() const {
  KahanSum s;
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) {
    const double v = x(k) * values_[k];
    s.add((k == 0 || k + 1 == n) ? 0.5 * v : v);
  }
  return s.sum * step_;
}

double GridDensity::variance() const {
  const double m = mean();
  KahanSum s;
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x(k) - m;
    const double v = d * d * values_[k];
    s.add((k == 0 || k + 1 == n) ? 0.5 * v : v);
  }
  return s.sum * step_;
}

bool GridDensity::is_symmetric(double tol) const {
  const std::size_t n = size();
  for (std::size_t k = 0; k < n / 2; ++k)
    if (std::abs(values_[k] - values_[n - 1 - k]) > tol) return false;
  return true;
}

bool GridDensity::is_central_dominant(double tol) const {
  const std::size_t n = size();
  const std::size_t right = n / 2;
  const std::size_t left = (n % 2 == 1) ? n / 2 : n / 2 - 1;
  for (std::size_t k = right; k + 1 < n; ++k)
    if (values_[k + 1] > values_[k] + tol) return false;
  for (std::size_t k = left; k > 0; --k)
    if (values_[k - 1] > values_[k] + tol) return false;
  return true;
}

double GridDensity::pdf(double at) const { return linear_table(origin_, step_, values_, at); }

GridDensity convolve(const GridDensity& a, const GridDensity& b) {
  const double h = a.step();
  if (std::abs(a.step() - b.step()) > 1e-9 * h) throw Error("convolution needs equal grid steps");
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> c(na + nb - 1, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < na; ++i) {
    const double ai = av[i] * h;
    if (ai == 0.0) continue;
    double* out = c.data() + i;
    for (std::size_t j = 0; j < nb; ++j) out[j] += ai * bv[j];
  }

  // Trim negligible tails symmetrically.
  const std::size_t n = c.size();
  auto trimmable = [&](bool from_left) {
    double mass = 0.0;
    std::size_t k = 0;
    while (k + 3 < n) {
      const double v = c[from_left ? k : n - 1 - k] * h;
      if (mass + v > 1e-14) break;
      mass += v;
      ++k;
    }
    return k;
  };
  const std::size_t cut = std::min(trimmable(true), trimmable(false));
  std::vector<double> kept(c.begin() + static_cast<std::ptrdiff_t>(cut),
                           c.end() - static_cast<std::ptrdiff_t>(cut));
  const double origin = a.origin() + b.origin() + h * static_cast<double>(cut);
  return GridDensity(origin, h, std::move(kept));
}

// ------------------------------------------------------------ aggregation

OthersAggregate aggregate_others(const JointErrorModel& joint, std::size_t i,
                                 std::span<const double> mu) {
  const std::size_t n = joint.size();
  if (n < 2) throw Error("no other utilities");
  if (i >= n) throw Error("utility index out of range");
  if (mu.size() != n) throw Error("profile length does not match the number of utilities");
  OthersAggregate out{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) out.mu_minus_i += mu[j];
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) var += joint.marginal(j).variance();
  if (joint.is_correlated())
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (a != i && b != i) var += 2.0 * joint.covariance(a, b);
  out.sigma_minus_i = std::sqrt(std::max(var, 0.0));
  if (joint.is_correlated() && out.sigma_minus_i > 0.0) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) acc += joint.rho(i, j) * joint.marginal(j).std_dev();
    out.rho_i = std::clamp(acc / out.sigma_minus_i, 0.0, 1.0);
  }
  return out;
}

// ------------------------------------------------------------------ KS test

KsResult ks_symmetry_test(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 30) throw Error("KS symmetry test needs at least 30 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = -x[n - 1 - k];

  const double inv = 1.0 / static_cast<double>(n);
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < n) {
    const double v = std::min(x[i], y[j]);
    while (i < n && x[i] == v) ++i;
    while (j < n && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) - static_cast<double>(j)) * inv);
  }
  // c(0.05) = sqrt(-ln(0.025)/2); both samples have size n.
  const double crit = std::sqrt(-0.5 * std::log(0.025)) * std::sqrt(2.0 * inv);
  return KsResult{d, crit, d > crit, n};
}

}  // namespace twosettle
