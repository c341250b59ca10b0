#include "twosettle/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "twosettle/error.hpp"

namespace twosettle {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  double v = 0.0;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

// days since 1970-01-01 for a proleptic Gregorian date
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(const std::string& text) {
  const std::string s = trim(text);
  auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t k = pos; k < pos + n; ++k) {
      if (s[k] < '0' || s[k] > '9') return std::nullopt;
      v = v * 10 + (s[k] - '0');
    }
    return v;
  };
  const auto y = digits(0, 4);
  if (!y || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto mo = digits(5, 2), d = digits(8, 2);
  if (!mo || !d || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) return std::nullopt;
  static const int mdays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (*d > mdays[*mo - 1]) return std::nullopt;
  const bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
  if (*mo == 2 && *d == 29 && !leap) return std::nullopt;
  std::int64_t secs = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d)) * 86400;
  std::size_t pos = 10;
  if (pos == s.size()) return secs;
  if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
  ++pos;
  const auto hh = digits(pos, 2);
  if (!hh || pos + 5 > s.size() || s[pos + 2] != ':') return std::nullopt;
  const auto mm = digits(pos + 3, 2);
  if (!mm || *hh > 24 || *mm > 59) return std::nullopt;
  int ss = 0;
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    const auto sv = digits(pos + 1, 2);
    if (!sv || *sv > 60) return std::nullopt;
    ss = *sv;
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  if (*hh == 24 && (*mm != 0 || ss != 0)) return std::nullopt;
  secs += *hh * 3600 + *mm * 60 + ss;
  if (pos == s.size()) return secs;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
  if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
    const auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
    if (!oh || !om || *oh > 23 || *om > 59) return std::nullopt;
    const int off = *oh * 3600 + *om * 60;
    return s[pos] == '+' ? secs - off : secs + off;
  }
  return std::nullopt;
}

std::vector<TraceGroup> ingest_traces(std::istream& in, const IngestOptions& options) {
  static const char* required[] = {"timestamp", "utility_id", "actual_mwh", "predicted_mwh"};
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty trace file", 0);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const char* name : required)
    if (!col.count(name)) throw ParseError(std::string("missing column '") + name + "'", lineno);
  const std::size_t c_ts = col["timestamp"], c_id = col["utility_id"];
  const std::size_t c_act = col["actual_mwh"], c_pred = col["predicted_mwh"];

  std::map<std::string, TraceGroup> groups;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                       lineno);
    TraceRow row;
    row.line = lineno;
    row.timestamp = f[c_ts];
    const auto epoch = parse_iso8601(row.timestamp);
    if (!epoch) throw ParseError("invalid ISO-8601 timestamp '" + row.timestamp + "'", lineno);
    row.epoch_seconds = *epoch;
    const std::string& id = f[c_id];
    if (id.empty()) throw ParseError("empty utility_id", lineno);
    const auto act = parse_number(f[c_act]);
    if (!act) throw ParseError("non-numeric actual_mwh '" + f[c_act] + "'", lineno);
    const auto pred = parse_number(f[c_pred]);
    if (!pred) throw ParseError("non-numeric predicted_mwh '" + f[c_pred] + "'", lineno);
    row.actual_mwh = *act;
    row.predicted_mwh = *pred;
    const auto key = std::make_pair(id, row.epoch_seconds);
    const auto [it, fresh] = seen.emplace(key, lineno);
    if (!fresh)
      throw ParseError("duplicate timestamp " + row.timestamp + " for utility '" + id +
                           "' (first seen on line " + std::to_string(it->second) + ")",
                       lineno);
    auto& g = groups[id];
    g.utility_id = id;
    g.rows.push_back(std::move(row));
  }

  std::vector<TraceGroup> out;
  for (auto& [id, g] : groups) {
    if (g.rows.size() < options.min_rows_per_utility)
      throw ParseError("utility '" + id + "' has " + std::to_string(g.rows.size()) + " rows, need at least " +
                           std::to_string(options.min_rows_per_utility),
                       0);
    std::stable_sort(g.rows.begin(), g.rows.end(),
                     [](const TraceRow& a, const TraceRow& b) { return a.epoch_seconds < b.epoch_seconds; });
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<TraceGroup> ingest_traces(const std::string& path, const IngestOptions& options) {
  auto in = open_input(path);
  return ingest_traces(in, options);
}

void emit_traces(const std::vector<TraceGroup>& groups, std::ostream& out) {
  out << "timestamp,utility_id,actual_mwh,predicted_mwh\n";
  for (const auto& g : groups)
    for (const auto& r : g.rows)
      out << r.timestamp << ',' << g.utility_id << ',' << format_double(r.actual_mwh) << ','
          << format_double(r.predicted_mwh) << '\n';
}

ExtractedErrors extract_errors(const TraceGroup& group) {
  const std::size_t n = group.rows.size();
  std::vector<double> eps(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    eps[k] = group.rows[k].predicted_mwh - group.rows[k].actual_mwh;
    sum += eps[k];
  }
  ErrorSummary s;
  s.count = n;
  s.raw_mean = n ? sum / static_cast<double>(n) : 0.0;
  double sq = 0.0;
  for (double e : eps) sq += (e - s.raw_mean) * (e - s.raw_mean);
  s.raw_std = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
  if (n > 0 && sq == 0.0) throw Error("errors of utility '" + group.utility_id + "' have zero variance");
  return {ErrorModel::empirical(std::move(eps)), s};
}

std::vector<double> read_samples_csv(const std::string& path) {
  auto in = open_input(path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto f = split_csv(t);
    if (f.size() != 1) throw ParseError("expected a single column", lineno);
    const auto v = parse_number(f[0]);
    if (!v) {
      if (first) {
        first = false;
        continue;
      }
      throw ParseError("non-numeric sample '" + f[0] + "'", lineno);
    }
    first = false;
    out.push_back(*v);
  }
  return out;
}

std::vector<std::pair<double, double>> read_price_table(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::pair<double, double>> out;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto f = split_csv(t);
    if (f.size() != 2) throw ParseError("expected two columns price,value", lineno);
    const auto p = parse_number(f[0]), v = parse_number(f[1]);
    if (!p || !v) {
      if (first) {
        first = false;
        continue;
      }
      throw ParseError("non-numeric price or value", lineno);
    }
    first = false;
    out.emplace_back(*p, *v);
  }
  if (out.empty()) throw ParseError("no rows in '" + path + "'", 0);
  return out;
}

BiddingCurve read_curve_csv(const std::string& path) {
  std::vector<double> p, v;
  for (const auto& [price, value] : read_price_table(path)) {
    p.push_back(price);
    v.push_back(value);
  }
  return BiddingCurve(std::move(p), std::move(v));
}

PriceBelief read_belief_csv(const std::string& path) {
  std::vector<double> p, m;
  for (const auto& [price, mass] : read_price_table(path)) {
    p.push_back(price);
    m.push_back(mass);
  }
  return PriceBelief(std::move(p), std::move(m));
}

// ------------------------------------------------------------------ config

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw Error("missing '" + std::string(key) + "' in " + where);
  const auto& v = obj.at(key);
  if (!v.is_number()) throw Error("'" + std::string(key) + "' in " + where + " must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw Error("missing '" + std::string(key) + "' in " + where);
  const auto& v = obj.at(key);
  if (!v.is_string()) throw Error("'" + std::string(key) + "' in " + where + " must be a string");
  return v.get<std::string>();
}

PricingModel parse_pricing(const json& j) {
  const std::string where = "pricing";
  if (j.contains("preset")) {
    check_keys(j, where, {"preset"});
    const std::string p = get_string(j, "preset", where);
    if (p == "symmetric") return PricingModel::table1_symmetric();
    if (p == "asymmetric") return PricingModel::table1_asymmetric();
    throw Error("unknown pricing preset '" + p + "' (expected symmetric or asymmetric)");
  }
  const std::string variant = get_string(j, "variant", where);
  if (variant == "piecewise_linear") {
    check_keys(j, where, {"variant", "a1", "a2", "b1", "b2"});
    return PricingModel::piecewise_linear(get_number(j, "a1", where), get_number(j, "a2", where),
                                          get_number(j, "b1", where), get_number(j, "b2", where));
  }
  if (variant == "general_odd") {
    check_keys(j, where, {"variant", "a", "k", "b1", "b2"});
    return PricingModel::general_odd(get_number(j, "a", where), get_number(j, "k", where),
                                     get_number(j, "b1", where), get_number(j, "b2", where));
  }
  throw Error("unknown pricing variant '" + variant + "'");
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

json pricing_to_json(const PricingModel& pricing) {
  if (pricing.is_general_odd()) {
    const auto& g = pricing.odd();
    return json{{"variant", "general_odd"}, {"a", g.a}, {"k", g.k}, {"b1", g.b1}, {"b2", g.b2}};
  }
  const auto& l = pricing.linear();
  return json{{"variant", "piecewise_linear"}, {"a1", l.a1}, {"a2", l.a2}, {"b1", l.b1}, {"b2", l.b2}};
}

ScenarioConfig build_scenario(const json& config, const std::string& base_dir) {
  check_keys(config, "config", {"p_d", "pricing", "utilities", "correlation", "profile_mwh"});
  json echo;
  const double p_d = config.contains("p_d") ? get_number(config, "p_d", "config") : 35.0;
  echo["p_d"] = p_d;
  const PricingModel pricing =
      config.contains("pricing") ? parse_pricing(config.at("pricing")) : PricingModel::table1_symmetric();
  echo["pricing"] = pricing_to_json(pricing);

  if (!config.contains("utilities") || !config.at("utilities").is_array() || config.at("utilities").empty())
    throw Error("config needs a non-empty 'utilities' array");
  std::vector<Utility> utilities;
  std::vector<ErrorModel> marginals;
  std::map<std::string, std::vector<TraceGroup>> trace_cache;
  json echo_utils = json::array();
  std::size_t idx = 0;
  for (const auto& u : config.at("utilities")) {
    const std::string where = "utilities[" + std::to_string(idx++) + "]";
    check_keys(u, where, {"id", "demand_mwh", "error"});
    Utility util;
    util.id = get_string(u, "id", where);
    if (!u.contains("error")) throw Error("missing 'error' in " + where);
    const json& e = u.at("error");
    const std::string ew = where + ".error";
    const std::string kind = get_string(e, "kind", ew);
    json echo_err;
    std::optional<double> default_demand;
    if (kind == "gaussian") {
      check_keys(e, ew, {"kind", "sigma_mwh"});
      const double s = get_number(e, "sigma_mwh", ew);
      marginals.push_back(ErrorModel::gaussian(s));
      echo_err = {{"kind", kind}, {"sigma_mwh", s}};
    } else if (kind == "laplace") {
      check_keys(e, ew, {"kind", "scale_mwh"});
      const double s = get_number(e, "scale_mwh", ew);
      marginals.push_back(ErrorModel::laplace(s));
      echo_err = {{"kind", kind}, {"scale_mwh", s}};
    } else if (kind == "point_mass") {
      check_keys(e, ew, {"kind"});
      marginals.push_back(ErrorModel::point_mass());
      echo_err = {{"kind", kind}};
    } else if (kind == "samples") {
      check_keys(e, ew, {"kind", "path"});
      const std::string path = get_string(e, "path", ew);
      marginals.push_back(ErrorModel::empirical(read_samples_csv(resolve(base_dir, path))));
      echo_err = {{"kind", kind}, {"path", path}};
    } else if (kind == "trace") {
      check_keys(e, ew, {"kind", "path", "utility_id"});
      const std::string path = get_string(e, "path", ew);
      const std::string trace_id = e.contains("utility_id") ? get_string(e, "utility_id", ew) : util.id;
      auto it = trace_cache.find(path);
      if (it == trace_cache.end()) it = trace_cache.emplace(path, ingest_traces(resolve(base_dir, path))).first;
      const auto g = std::find_if(it->second.begin(), it->second.end(),
                                  [&](const TraceGroup& t) { return t.utility_id == trace_id; });
      if (g == it->second.end()) throw Error("trace '" + path + "' has no utility '" + trace_id + "'");
      marginals.push_back(extract_errors(*g).model);
      double act = 0.0;
      for (const auto& r : g->rows) act += r.actual_mwh;
      default_demand = act / static_cast<double>(g->rows.size());
      echo_err = {{"kind", kind}, {"path", path}, {"utility_id", trace_id}};
    } else {
      throw Error("unknown error kind '" + kind + "' in " + ew +
                  " (expected gaussian, laplace, point_mass, samples or trace)");
    }
    if (u.contains("demand_mwh"))
      util.demand_mwh = get_number(u, "demand_mwh", where);
    else if (default_demand)
      util.demand_mwh = *default_demand;
    else
      throw Error("missing 'demand_mwh' in " + where);
    echo_utils.push_back({{"id", util.id}, {"demand_mwh", util.demand_mwh}, {"error", echo_err}});
    utilities.push_back(std::move(util));
  }
  echo["utilities"] = echo_utils;

  const std::size_t n = utilities.size();
  JointErrorModel joint = JointErrorModel::independent(marginals);
  if (config.contains("correlation")) {
    const json& c = config.at("correlation");
    if (!c.is_array() || c.size() != n)
      throw Error("correlation must be an " + std::to_string(n) + "x" + std::to_string(n) +
                  " matrix to match the number of utilities");
    Eigen::MatrixXd rho(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      if (!c[r].is_array() || c[r].size() != n)
        throw Error("correlation must be an " + std::to_string(n) + "x" + std::to_string(n) +
                    " matrix to match the number of utilities");
      for (std::size_t k = 0; k < n; ++k) {
        if (!c[r][k].is_number()) throw Error("correlation entries must be numbers");
        rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = c[r][k].get<double>();
      }
    }
    joint = JointErrorModel::correlated(marginals, rho);
    echo["correlation"] = c;
  }

  std::optional<StrategyProfile> profile;
  if (config.contains("profile_mwh")) {
    const json& p = config.at("profile_mwh");
    if (!p.is_array() || p.size() != n) throw Error("profile_mwh must list one value per utility");
    StrategyProfile sp;
    for (const auto& v : p) {
      if (!v.is_number()) throw Error("profile_mwh entries must be numbers");
      sp.mu.push_back(v.get<double>());
    }
    profile = sp;
    echo["profile_mwh"] = p;
  }

  return ScenarioConfig{MarketScenario(std::move(utilities), std::move(joint), pricing, p_d), profile, echo};
}

ScenarioConfig load_scenario(const std::string& path) {
  auto in = open_input(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config '" + path + "' is not valid JSON: " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return build_scenario(j, dir.empty() ? "." : dir.string());
}

}  // namespace twosettle
