#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "twosettle/uncertainty.hpp"

namespace twosettle {

// Distribution of a zero-centered quantity on a grid, or a unit mass at 0.
struct CenteredDistribution {
  bool degenerate = true;
  double x0 = 0.0;
  double h = 0.0;
  std::vector<double> pdf;
  std::vector<double> cdf;

  // At 0 the degenerate cdf is 1/2.
  double cdf_at(double x) const;
  double pdf_at(double x) const;
};

// Distribution of -(sum of the given independent errors) with the step chosen
// so that +-8 combined standard deviations span `nodes` nodes.
std::shared_ptr<const CenteredDistribution> negated_sum(std::span<const ErrorModel> models,
                                                        std::size_t nodes);

struct McSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Mean of f over n joint error draws. Chunked and seeded per chunk, combined
// in chunk order, so the result is independent of the worker count.
McSummary mc_mean(const JointErrorModel& joint, std::size_t n, std::uint64_t seed,
                  const std::function<double(std::span<const double>)>& f);

}  // namespace twosettle
