#include <algorithm>
#include <cmath>

#include "engines.hpp"
#include "twosettle/cost.hpp"
#include "twosettle/error.hpp"
#include "twosettle/numeric.hpp"
#include "twosettle/parallel.hpp"

namespace twosettle {

namespace {

struct ChunkStats {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
};

}  // namespace

McSummary mc_mean(const JointErrorModel& joint, std::size_t n, std::uint64_t seed,
                  const std::function<double(std::span<const double>)>& f) {
  if (n == 0) throw Error("sample count must be at least 1");
  const std::size_t cols = joint.size();
  const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
  std::vector<ChunkStats> stats(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Sampler s(derive_seed(seed, c));
    std::vector<double> row(cols), scratch(cols);
    const std::size_t begin = c * kSampleChunk;
    const std::size_t end = std::min(n, begin + kSampleChunk);
    std::vector<double> values(end - begin);
    KahanSum sum;
    for (std::size_t r = begin; r < end; ++r) {
      joint.draw(s, row, scratch);
      const double v = f(row);
      values[r - begin] = v;
      sum.add(v);
    }
    const double m = sum.sum / static_cast<double>(values.size());
    KahanSum sq;
    for (double v : values) sq.add((v - m) * (v - m));
    stats[c] = {static_cast<double>(values.size()), m, sq.sum};
  });

  ChunkStats acc = stats[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    const ChunkStats& b = stats[c];
    const double total = acc.n + b.n;
    const double delta = b.mean - acc.mean;
    acc.mean += delta * b.n / total;
    acc.m2 += b.m2 + delta * delta * acc.n * b.n / total;
    acc.n = total;
  }
  McSummary out;
  out.n = n;
  out.mean = acc.mean;
  out.std_error = n > 1 ? std::sqrt(acc.m2 / (acc.n - 1.0) / acc.n) : 0.0;
  return out;
}

CostEstimate CostEvaluator::monte_carlo(const StrategyProfile& profile, std::size_t i) const {
  check_profile(profile, i);
  const std::size_t n = options_.mc_samples;
  if (n < 1000) throw Error("Monte Carlo needs at least 1000 samples");
  const auto& sc = scenario_;
  const std::size_t count = sc.size();
  CostEstimate est;
  est.method = Method::MonteCarlo;
  est.count = n;
  if (sc.joint().all_point_mass()) {
    const std::vector<double> zero(count, 0.0);
    est.value = realized_cost(sc, profile, zero).abc[i];
    est.std_error = 0.0;
    return est;
  }
  const double pd = sc.p_d();
  const double d_i = sc.utility(i).demand_mwh;
  const auto& pricing = sc.pricing();
  const auto& mu = profile.mu;
  const McSummary m = mc_mean(sc.joint(), n, options_.seed, [&](std::span<const double> eps) {
    double delta = 0.0;
    for (std::size_t j = 0; j < count; ++j) delta += mu[j] - eps[j];
    const double own = mu[i] - eps[i];
    return own * (pricing.spot_price(delta, pd) - pd) / d_i;
  });
  est.value = pd + m.mean;
  est.std_error = m.std_error;
  return est;
}

CostEstimate CostEvaluator::monte_carlo_difference(const StrategyProfile& a, const StrategyProfile& b,
                                                   std::size_t i) const {
  check_profile(a, i);
  check_profile(b, i);
  const std::size_t n = options_.mc_samples;
  if (n < 1000) throw Error("Monte Carlo needs at least 1000 samples");
  const auto& sc = scenario_;
  const std::size_t count = sc.size();
  CostEstimate est;
  est.method = Method::MonteCarlo;
  est.count = n;
  if (sc.joint().all_point_mass()) {
    const std::vector<double> zero(count, 0.0);
    est.value = realized_cost(sc, a, zero).abc[i] - realized_cost(sc, b, zero).abc[i];
    est.std_error = 0.0;
    return est;
  }
  const double pd = sc.p_d();
  const double d_i = sc.utility(i).demand_mwh;
  const auto& pricing = sc.pricing();
  auto abc = [&](const std::vector<double>& mu, std::span<const double> eps) {
    double delta = 0.0;
    for (std::size_t j = 0; j < count; ++j) delta += mu[j] - eps[j];
    return (mu[i] - eps[i]) * (pricing.spot_price(delta, pd) - pd) / d_i;
  };
  // Same draws for both profiles.
  const McSummary m = mc_mean(sc.joint(), n, options_.seed,
                              [&](std::span<const double> eps) { return abc(a.mu, eps) - abc(b.mu, eps); });
  est.value = m.mean;
  est.std_error = m.std_error;
  return est;
}

CostEstimate CostEvaluator::total_monte_carlo(const StrategyProfile& profile) const {
  check_profile(profile, 0);
  const std::size_t n = options_.mc_samples;
  if (n < 1000) throw Error("Monte Carlo needs at least 1000 samples");
  const auto& sc = scenario_;
  const std::size_t count = sc.size();
  CostEstimate est;
  est.method = Method::MonteCarlo;
  est.count = n;
  if (sc.joint().all_point_mass()) {
    const std::vector<double> zero(count, 0.0);
    est.value = realized_cost(sc, profile, zero).total_abc;
    est.std_error = 0.0;
    return est;
  }
  const double pd = sc.p_d();
  const double d_total = sc.total_demand();
  const auto& pricing = sc.pricing();
  const auto& mu = profile.mu;
  const McSummary m = mc_mean(sc.joint(), n, options_.seed, [&](std::span<const double> eps) {
    double delta = 0.0;
    for (std::size_t j = 0; j < count; ++j) delta += mu[j] - eps[j];
    return delta * (pricing.spot_price(delta, pd) - pd) / d_total;
  });
  est.value = pd + m.mean;
  est.std_error = m.std_error;
  return est;
}

}  // namespace twosettle
