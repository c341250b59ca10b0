#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twosettle/cost.hpp"
#include "twosettle/curves.hpp"

namespace twosettle {

struct TraceRow {
  std::string timestamp;
  std::int64_t epoch_seconds = 0;
  double actual_mwh = 0.0;
  double predicted_mwh = 0.0;
  std::size_t line = 0;
};

struct TraceGroup {
  std::string utility_id;
  std::vector<TraceRow> rows;  // sorted by time
};

struct IngestOptions {
  std::size_t min_rows_per_utility = 30;
};

// CSV with header timestamp,utility_id,actual_mwh,predicted_mwh. Groups are
// returned in lexicographic utility order.
std::vector<TraceGroup> ingest_traces(const std::string& path, const IngestOptions& options = {});
std::vector<TraceGroup> ingest_traces(std::istream& in, const IngestOptions& options = {});
void emit_traces(const std::vector<TraceGroup>& groups, std::ostream& out);

// ISO-8601 date-time to seconds since the epoch (UTC). Accepts a date alone,
// fractional seconds are ignored, Z or +hh:mm offsets are applied.
std::optional<std::int64_t> parse_iso8601(const std::string& text);

struct ErrorSummary {
  double raw_mean = 0.0;
  double raw_std = 0.0;
  std::size_t count = 0;
};

struct ExtractedErrors {
  ErrorModel model;
  ErrorSummary summary;
};

// eps = predicted - actual, centered into an Empirical model.
ExtractedErrors extract_errors(const TraceGroup& group);

// Single-column CSV of MWh values, optional header line.
std::vector<double> read_samples_csv(const std::string& path);

// Two-column `price,value` CSV, optional header line.
std::vector<std::pair<double, double>> read_price_table(const std::string& path);
BiddingCurve read_curve_csv(const std::string& path);
PriceBelief read_belief_csv(const std::string& path);

struct ScenarioConfig {
  MarketScenario scenario;
  std::optional<StrategyProfile> profile;
  nlohmann::json echo;  // canonical config with defaults filled in
};

// Relative file paths inside the config resolve against base_dir.
ScenarioConfig build_scenario(const nlohmann::json& config, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

nlohmann::json pricing_to_json(const PricingModel& pricing);

}  // namespace twosettle
