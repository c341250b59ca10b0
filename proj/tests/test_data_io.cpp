#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "twosettle/data_io.hpp"
#include "twosettle/error.hpp"

using namespace twosettle;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto d = fs::temp_directory_path() / ("twosettle_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

IngestOptions loose() {
  IngestOptions o;
  o.min_rows_per_utility = 1;
  return o;
}

std::string synthetic_trace(const std::vector<std::pair<std::string, double>>& utilities, int hours,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::ostringstream s;
  s << "timestamp,utility_id,actual_mwh,predicted_mwh\n";
  for (int h = 0; h < hours; ++h) {
    char ts[32];
    std::snprintf(ts, sizeof ts, "2011-%02d-%02dT%02d:00:00Z", 1 + h / 24 / 28, 1 + h / 24 % 28, h % 24);
    for (const auto& [id, sd] : utilities) {
      std::normal_distribution<double> nd(0.0, sd);
      const double actual = 1000.0 + 200.0 * std::sin(h / 24.0 * 6.283);
      s << ts << ',' << id << ',' << actual << ',' << actual + nd(rng) << '\n';
    }
  }
  return s.str();
}

}  // namespace

TEST(Iso8601, Parsing) {
  EXPECT_EQ(*parse_iso8601("1970-01-01"), 0);
  EXPECT_EQ(*parse_iso8601("1970-01-02T00:00:00Z"), 86400);
  EXPECT_EQ(*parse_iso8601("2011-01-01T05:00:00Z"), 1293858000);
  EXPECT_EQ(*parse_iso8601("2011-01-01T00:00:00-05:00"), 1293858000);
  EXPECT_EQ(*parse_iso8601("2011-01-01 05:00"), 1293858000);
  EXPECT_EQ(*parse_iso8601("2016-02-29T00:00:00.250Z"), 1456704000);
  EXPECT_FALSE(parse_iso8601("2015-02-29"));
  EXPECT_FALSE(parse_iso8601("2011-13-01"));
  EXPECT_FALSE(parse_iso8601("yesterday"));
  EXPECT_FALSE(parse_iso8601("2011-01-01T25:00"));
}

TEST(Ingest, ThreeRowFile) {
  std::istringstream in(
      "timestamp,utility_id,actual_mwh,predicted_mwh\n"
      "2011-01-01T02:00:00Z,ME,1000,1010\n"
      "2011-01-01T00:00:00Z,ME,990,985\n"
      "2011-01-01T01:00:00Z,ME,995,1001.5\n");
  const auto g = ingest_traces(in, loose());
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].utility_id, "ME");
  ASSERT_EQ(g[0].rows.size(), 3u);
  EXPECT_EQ(g[0].rows[0].timestamp, "2011-01-01T00:00:00Z");
  EXPECT_EQ(g[0].rows[2].predicted_mwh, 1010.0);
}

TEST(Ingest, DuplicateTimestampNamesLine) {
  std::istringstream in(
      "timestamp,utility_id,actual_mwh,predicted_mwh\n"
      "2011-01-01T00:00:00Z,ME,1000,1010\n"
      "2011-01-01T01:00:00Z,ME,1000,1010\n"
      "2011-01-01T00:00:00Z,ME,990,985\n");
  try {
    ingest_traces(in, loose());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(Ingest, StructuredErrors) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      ingest_traces(in, loose());
    } catch (const ParseError& e) {
      return e.line();
    }
    return 999;
  };
  EXPECT_EQ(line_of("timestamp,utility_id,actual_mwh\n"), 1u);
  EXPECT_EQ(line_of("timestamp,utility_id,actual_mwh,predicted_mwh\n2011-01-01,ME,abc,1\n"), 2u);
  EXPECT_EQ(line_of("timestamp,utility_id,actual_mwh,predicted_mwh\n2011-01-01,ME,1,1\nnot-a-date,ME,1,1\n"), 3u);
  EXPECT_EQ(line_of("timestamp,utility_id,actual_mwh,predicted_mwh\n2011-01-01,ME,1\n"), 2u);
}

TEST(Ingest, MinimumRowsEnforced) {
  std::istringstream in("timestamp,utility_id,actual_mwh,predicted_mwh\n2011-01-01,ME,1,1\n");
  EXPECT_THROW(ingest_traces(in), ParseError);
}

TEST(Ingest, ManyUtilitiesCountsPreserved) {
  std::vector<std::pair<std::string, double>> u;
  for (const char* id : {"CT", "ME", "NEMA", "NH", "RI", "SEMA", "VT", "WCMA"}) u.emplace_back(id, 30.0);
  std::istringstream in(synthetic_trace(u, 24 * 28, 1));
  const auto g = ingest_traces(in);
  ASSERT_EQ(g.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(g[k].utility_id, u[k].first);
    EXPECT_EQ(g[k].rows.size(), 24u * 28u);
  }
}

TEST(Ingest, RoundTripIsLossless) {
  std::istringstream in(synthetic_trace({{"ME", 38.7}, {"NH", 20}}, 100, 4));
  const auto a = ingest_traces(in);
  std::ostringstream out;
  emit_traces(a, out);
  std::istringstream again(out.str());
  const auto b = ingest_traces(again);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t g = 0; g < a.size(); ++g) {
    EXPECT_EQ(a[g].utility_id, b[g].utility_id);
    ASSERT_EQ(a[g].rows.size(), b[g].rows.size());
    for (std::size_t r = 0; r < a[g].rows.size(); ++r) {
      EXPECT_EQ(a[g].rows[r].timestamp, b[g].rows[r].timestamp);
      EXPECT_EQ(a[g].rows[r].epoch_seconds, b[g].rows[r].epoch_seconds);
      EXPECT_EQ(a[g].rows[r].actual_mwh, b[g].rows[r].actual_mwh);
      EXPECT_EQ(a[g].rows[r].predicted_mwh, b[g].rows[r].predicted_mwh);
    }
  }
  std::ostringstream out2;
  emit_traces(b, out2);
  EXPECT_EQ(out.str(), out2.str());
}

TEST(ExtractErrors, SignConvention) {
  TraceGroup g{"ME", {}};
  for (int k = 0; k < 40; ++k) g.rows.push_back({"t", k, 1000.0 + k * k, 1005.0 + k * k + (k % 2 ? 1.0 : -1.0), 0});
  const auto e = extract_errors(g);
  EXPECT_NEAR(e.summary.raw_mean, 5.0, 1e-12);
  EXPECT_EQ(e.summary.count, 40u);
  double m = 0.0;
  for (double v : e.model.samples()) m += v;
  EXPECT_NEAR(m / 40.0, 0.0, 1e-12);
  EXPECT_NEAR(e.model.samples()[0], -1.0, 1e-12);
}

TEST(ExtractErrors, ConstantErrorsRejected) {
  TraceGroup g{"ME", {}};
  for (int k = 0; k < 40; ++k) g.rows.push_back({"t", k, 1000.0 + k, 1000.0 + k, 0});
  EXPECT_THROW(extract_errors(g), Error);
}

TEST(ExtractErrors, GaussianTracesRarelyRejectedBySymmetryTest) {
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::istringstream in(synthetic_trace({{"ME", 38.7}}, 2000, seed));
    const auto e = extract_errors(ingest_traces(in)[0]);
    accepted += !ks_symmetry_test(e.model.samples()).reject_at_5pct;
  }
  EXPECT_GE(accepted, 36);
}

TEST(Readers, SamplesWithAndWithoutHeader) {
  EXPECT_EQ(read_samples_csv(write_file("s1.csv", "error_mwh\n1.5\n-2\n\n3\n")), (std::vector<double>{1.5, -2, 3}));
  EXPECT_EQ(read_samples_csv(write_file("s2.csv", "1.5\n-2\n")), (std::vector<double>{1.5, -2}));
  EXPECT_THROW(read_samples_csv(write_file("s3.csv", "1.5\nfoo\n")), ParseError);
  EXPECT_THROW(read_samples_csv(write_file("s4.csv", "1.5,2\n")), ParseError);
}

TEST(Readers, CurveAndBelief) {
  const auto c = read_curve_csv(write_file("c.csv", "price,value\n25,0\n35,-20\n"));
  EXPECT_EQ(c(30), 0.0);
  EXPECT_EQ(c(40), -20.0);
  const auto b = read_belief_csv(write_file("b.csv", "price,mass\n30,0.25\n40,0.75\n"));
  EXPECT_EQ(b.size(), 2u);
  EXPECT_THROW(read_belief_csv(write_file("b2.csv", "30,0.25\n40,0.5\n")), Error);
}

TEST(Config, MinimalGaussian) {
  const auto cfg = build_scenario(nlohmann::json::parse(
      R"({"utilities": [{"id": "ME", "demand_mwh": 1300, "error": {"kind": "gaussian", "sigma_mwh": 38.7}}]})"));
  EXPECT_EQ(cfg.scenario.size(), 1u);
  EXPECT_EQ(cfg.scenario.p_d(), 35.0);
  EXPECT_TRUE(check_symmetric(cfg.scenario.pricing()));
  EXPECT_EQ(cfg.echo["p_d"], 35.0);
  EXPECT_EQ(cfg.echo["pricing"]["b1"], 1.2378);
  // The echo is itself a valid config describing the same scenario.
  const auto again = build_scenario(cfg.echo);
  EXPECT_EQ(again.echo, cfg.echo);
}

TEST(Config, PresetsAndExplicitPricing) {
  const auto asym = build_scenario(nlohmann::json::parse(
      R"({"pricing": {"preset": "asymmetric"},
          "utilities": [{"id": "A", "demand_mwh": 10, "error": {"kind": "point_mass"}}]})"));
  EXPECT_EQ(asym.scenario.pricing(), PricingModel::table1_asymmetric());
  const auto odd = build_scenario(nlohmann::json::parse(
      R"({"pricing": {"variant": "general_odd", "a": 0.0034, "k": 1.15, "b1": 1.2378, "b2": 0.7622},
          "utilities": [{"id": "A", "demand_mwh": 10, "error": {"kind": "laplace", "scale_mwh": 3}}]})"));
  EXPECT_TRUE(odd.scenario.pricing().is_general_odd());
}

TEST(Config, NegativeCorrelationRejected) {
  const auto j = nlohmann::json::parse(R"({
    "utilities": [{"id": "A", "demand_mwh": 10, "error": {"kind": "gaussian", "sigma_mwh": 3}},
                  {"id": "B", "demand_mwh": 10, "error": {"kind": "gaussian", "sigma_mwh": 4}}],
    "correlation": [[1, -0.1], [-0.1, 1]]})");
  EXPECT_THROW(build_scenario(j), Error);
}

TEST(Config, CorrelationDimensionMismatch) {
  const auto j = nlohmann::json::parse(R"({
    "utilities": [{"id": "A", "demand_mwh": 10, "error": {"kind": "gaussian", "sigma_mwh": 3}},
                  {"id": "B", "demand_mwh": 10, "error": {"kind": "gaussian", "sigma_mwh": 4}}],
    "correlation": [[1, 0.1, 0], [0.1, 1, 0], [0, 0, 1]]})");
  try {
    build_scenario(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("number of utilities"), std::string::npos);
  }
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(build_scenario(nlohmann::json::parse(
                   R"({"pd": 35, "utilities": [{"id": "A", "demand_mwh": 1, "error": {"kind": "point_mass"}}]})")),
               Error);
  EXPECT_THROW(build_scenario(nlohmann::json::parse(
                   R"({"utilities": [{"id": "A", "demand_mwh": 1, "error": {"kind": "gaussian", "sigma": 1}}]})")),
               Error);
  EXPECT_THROW(build_scenario(nlohmann::json::parse(
                   R"({"utilities": [{"id": "A", "demand": 1, "error": {"kind": "point_mass"}}]})")),
               Error);
}

TEST(Config, TraceAndSampleReferences) {
  const auto trace = write_file("trace.csv", synthetic_trace({{"ME", 38.7}, {"NH", 25}}, 200, 9));
  std::ostringstream samples;
  for (int k = 0; k < 50; ++k) samples << (k % 7) - 3.0 << '\n';
  write_file("samples.csv", samples.str());
  const auto cfg_path = write_file("cfg.json", R"({
    "utilities": [
      {"id": "ME", "error": {"kind": "trace", "path": "trace.csv"}},
      {"id": "X", "demand_mwh": 500, "error": {"kind": "trace", "path": "trace.csv", "utility_id": "NH"}},
      {"id": "S", "demand_mwh": 100, "error": {"kind": "samples", "path": "samples.csv"}}],
    "profile_mwh": [0, 5, -5]})");
  const auto cfg = load_scenario(cfg_path);
  EXPECT_EQ(cfg.scenario.size(), 3u);
  EXPECT_EQ(cfg.scenario.joint().marginal(0).kind(), ErrorKind::Empirical);
  // Demand defaults to the mean actual load.
  double actual = 0.0;
  const auto groups = ingest_traces(trace);
  for (const auto& r : groups[0].rows) actual += r.actual_mwh;
  EXPECT_NEAR(cfg.scenario.utility(0).demand_mwh, actual / groups[0].rows.size(), 1e-9);
  EXPECT_EQ(cfg.profile->mu[1], 5.0);
  EXPECT_EQ(cfg.echo["utilities"][1]["error"]["utility_id"], "NH");
}
