#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "twosettle/cost.hpp"
#include "twosettle/curves.hpp"
#include "twosettle/data_io.hpp"
#include "twosettle/error.hpp"
#include "twosettle/game.hpp"
#include "twosettle/parallel.hpp"

namespace twosettle::cli {

using nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt_se(const std::optional<double>& se) { return se ? fmt(*se) : std::string(); }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error("cannot parse number '" + item + "' in '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty value list");
  return out;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// lo:hi:steps, steps being the number of points.
std::vector<double> parse_grid(const std::string& text) {
  std::stringstream ss(text);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw Error("grid must look like lo:hi:steps, got '" + text + "'");
  const double lo = parse_list(parts[0]).at(0);
  const double hi = parse_list(parts[1]).at(0);
  const double steps = parse_list(parts[2]).at(0);
  if (steps < 1 || steps != std::floor(steps)) throw Error("grid steps must be a positive integer");
  const auto n = static_cast<std::size_t>(steps);
  if (n > 1 && !(hi > lo)) throw Error("grid needs lo < hi");
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k)
    g[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

struct EngineFlags {
  std::string engine = "auto";
  std::size_t n = 1000000;
};

void add_engine_flags(CLI::App* cmd, EngineFlags& f) {
  cmd->add_option("--engine", f.engine, "Cost engine: auto, quad, closed, 2d or mc")
      ->check(CLI::IsMember({"auto", "quad", "closed", "2d", "mc"}));
  cmd->add_option("--n", f.n, "Monte Carlo samples per estimate");
}

EngineOptions engine_options(const EngineFlags& f, std::uint64_t seed) {
  EngineOptions o;
  o.engine = parse_engine(f.engine);
  o.mc_samples = f.n;
  o.seed = seed;
  return o;
}

StrategyProfile resolve_profile(const ScenarioConfig& cfg, const std::string& text) {
  const std::size_t n = cfg.scenario.size();
  if (!text.empty()) {
    StrategyProfile p{parse_list(text)};
    if (p.size() != n) throw Error("--profile needs " + std::to_string(n) + " values");
    return p;
  }
  return cfg.profile.value_or(StrategyProfile::zeros(n));
}

std::size_t find_utility(const MarketScenario& sc, const std::string& id) {
  try {
    return sc.index_of(id);
  } catch (const std::exception&) {
    throw Error("unknown utility '" + id + "'");
  }
}

ordered_json report_json(const EquilibriumReport& rep, const ScenarioConfig& cfg) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["is_equilibrium"] = rep.is_equilibrium;
  j["method"] = to_string(rep.method);
  j["max_gain_usd_per_mwh"] = rep.max_gain;
  j["tolerance_usd_per_mwh"] = rep.tolerance;
  ordered_json us = ordered_json::array();
  for (const auto& u : rep.utilities) {
    ordered_json e;
    e["utility_id"] = u.id;
    e["mu_mwh"] = u.mu;
    e["cost_at_profile_usd_per_mwh"] = u.cost_at_profile;
    e["best_response_mwh"] = u.best.mu_star;
    e["best_cost_usd_per_mwh"] = u.best.cost_at_star;
    e["gain_usd_per_mwh"] = u.gain;
    e["std_error_usd_per_mwh"] = u.best.std_error ? ordered_json(*u.best.std_error) : ordered_json(nullptr);
    e["bracket_mwh"] = {u.best.lo, u.best.hi};
    e["non_unimodal"] = u.best.non_unimodal;
    if (!u.detail.empty()) e["detail"] = u.detail;
    us.push_back(e);
  }
  j["utilities"] = us;
  j["efficiency"] = {{"abc_total_at_profile_usd_per_mwh", rep.abc_total_at_profile},
                     {"abc_total_min_usd_per_mwh", rep.abc_total_min},
                     {"mu_total_at_min_mwh", rep.mu_total_at_min},
                     {"efficiency_gap_usd_per_mwh", rep.efficiency_gap}};
  j["scenario"] = ordered_json::parse(cfg.echo.dump());
  return j;
}

PricingModel with_slope(const PricingModel& base, double a) {
  if (base.is_general_odd()) {
    const auto& g = base.odd();
    return PricingModel::general_odd(a, g.k, g.b1, g.b2);
  }
  const auto& l = base.linear();
  return PricingModel::piecewise_linear(a, a, l.b1, l.b2);
}

PricingModel with_gap(const PricingModel& base, double b1, double b2) {
  if (base.is_general_odd()) {
    const auto& g = base.odd();
    return PricingModel::general_odd(g.a, g.k, b1, b2);
  }
  const auto& l = base.linear();
  return PricingModel::piecewise_linear(l.a1, l.a2, b1, b2);
}

const char* kCostHeader = "utility_id,mu_i_mwh,mu_minus_i_mwh,method,value_usd_per_mwh,std_error_usd_per_mwh,n\n";

struct CostRow {
  std::string id;
  StrategyProfile profile;
  std::size_t i = 0;
  bool total = false;
  CostEstimate est;
};

void write_cost_rows(std::vector<CostRow>& rows, const CostEvaluator& ev, std::ostream& out) {
  parallel_for(rows.size(), [&](std::size_t r) {
    auto& row = rows[r];
    row.est = row.total ? ev.expected_abc_total(row.profile) : ev.expected_abc(row.profile, row.i);
  });
  out << kCostHeader;
  for (const auto& row : rows) {
    const double mu_i = row.total ? row.profile.total() : row.profile.mu[row.i];
    const double mu_rest = row.total ? 0.0 : row.profile.others(row.i);
    out << row.id << ',' << fmt(mu_i) << ',' << fmt(mu_rest) << ',' << to_string(row.est.method) << ','
        << fmt(row.est.value) << ',' << fmt_se(row.est.std_error) << ',' << row.est.count << '\n';
  }
}

BiddingCurve read_keyed_curve(const std::string& arg, std::string& id) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) throw Error("curve must be given as ID=path, got '" + arg + "'");
  id = arg.substr(0, eq);
  return read_curve_csv(arg.substr(eq + 1));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-settlement electricity market bidding game toolkit", "twosettle"};
  app.set_version_flag("--version", "twosettle 1.0");
  std::string config_path, out_path;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  app.add_option("--config", config_path, "Scenario config (JSON)");
  app.add_option("--out", out_path, "Write data to this file instead of stdout");
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads, 0 = all cores");
  app.require_subcommand(1);
  app.fallthrough();

  // cost
  auto* cost = app.add_subcommand("cost", "Expected ABC per utility and for the market");
  EngineFlags cost_eng;
  std::string cost_grid, cost_profile;
  add_engine_flags(cost, cost_eng);
  cost->add_option("--grid", cost_grid, "Sweep each mu_i (others at the profile) and mu over lo:hi:steps");
  cost->add_option("--profile", cost_profile, "Comma-separated mu_i (MWh)");

  // verify-ne
  auto* verify = app.add_subcommand("verify-ne", "Check a profile for profitable unilateral deviations");
  EngineFlags ver_eng;
  std::string ver_profile;
  std::optional<double> ver_tol;
  double ver_br_tol = 1e-3;
  add_engine_flags(verify, ver_eng);
  verify->add_option("--profile", ver_profile, "Comma-separated mu_i (MWh)");
  verify->add_option("--tol", ver_tol, "Equilibrium tolerance ($/MWh)");
  verify->add_option("--br-tol", ver_br_tol, "Best-response search tolerance (MWh)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Cost curves along one parameter axis");
  EngineFlags sw_eng;
  std::string sw_axis, sw_values, sw_grid = "-100:100:21", sw_utility, sw_split_mode = "independent",
                                  sw_fault_set;
  add_engine_flags(sweep, sw_eng);
  sweep->add_option("--axis", sw_axis, "slope, gap, pd, split or fault")
      ->required()
      ->check(CLI::IsMember({"slope", "gap", "pd", "split", "fault"}));
  sweep->add_option("--values", sw_values, "Comma-separated axis values; gap values as b1:b2")->required();
  sweep->add_option("--grid", sw_grid, "mu_i grid lo:hi:steps")->capture_default_str();
  sweep->add_option("--utility", sw_utility, "Restrict to one utility (the rational one for fault)");
  sweep->add_option("--split-mode", sw_split_mode, "independent, comonotone or iid_sqrt")->capture_default_str();
  sweep->add_option("--fault-set", sw_fault_set, "Comma-separated faulty utility ids");

  // fault
  auto* fault = app.add_subcommand("fault", "Rational utility's cost against a faulty set's deviation");
  EngineFlags f_eng;
  std::string f_rational, f_set, f_grid = "-200:200:17";
  add_engine_flags(fault, f_eng);
  fault->add_option("--rational", f_rational, "Rational utility id (default: first)");
  fault->add_option("--fault-set", f_set, "Comma-separated faulty utility ids (default: all others)");
  fault->add_option("--grid", f_grid, "mu_S grid lo:hi:steps")->capture_default_str();

  // curves
  auto* curves = app.add_subcommand("curves", "Bidding-curve game under a price belief");
  EngineFlags c_eng;
  std::string c_belief, c_amplitudes = "-50,-20,20,50";
  std::size_t c_intervals = 4;
  std::vector<std::string> c_curves, c_demand;
  std::optional<double> c_tol;
  add_engine_flags(curves, c_eng);
  curves->add_option("--belief", c_belief, "price,mass CSV (default: five equal masses on p_d-10..p_d+10)");
  curves->add_option("--intervals", c_intervals, "Bump intervals over the belief range")->capture_default_str();
  curves->add_option("--amplitudes", c_amplitudes, "Bump amplitudes (MWh)")->capture_default_str();
  curves->add_option("--curve", c_curves, "ID=path price,value CSV; evaluated against zero curves elsewhere");
  curves->add_option("--demand-curve", c_demand, "ID=path price,demand_mwh CSV");
  curves->add_option("--tol", c_tol, "Equilibrium tolerance ($/MWh)");

  // ks
  auto* ks = app.add_subcommand("ks", "Two-sample KS test of X against -X");
  std::string ks_samples, ks_trace, ks_utility;
  ks->add_option("--samples", ks_samples, "Single-column CSV of errors (MWh)");
  ks->add_option("--trace", ks_trace, "Trace CSV; errors are predicted - actual");
  ks->add_option("--utility", ks_utility, "Utility id inside the trace");

  // errors
  auto* errors = app.add_subcommand("errors", "Per-utility error summary of a trace file");
  std::string er_trace;
  errors->add_option("--trace", er_trace, "Trace CSV")->required();

  // echo
  auto* echo = app.add_subcommand("echo", "Print the canonical scenario config");

  std::vector<const char*> argv{"twosettle"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  std::ostringstream data;
  int status = 0;
  try {
    set_thread_count(threads);
    auto load = [&]() {
      if (config_path.empty()) throw Error("--config is required for this command");
      return load_scenario(config_path);
    };

    if (*cost) {
      const ScenarioConfig cfg = load();
      const auto& sc = cfg.scenario;
      CostEvaluator ev(sc, engine_options(cost_eng, seed));
      const StrategyProfile base = resolve_profile(cfg, cost_profile);
      std::vector<CostRow> rows;
      if (cost_grid.empty()) {
        for (std::size_t i = 0; i < sc.size(); ++i) rows.push_back({sc.utility(i).id, base, i, false, {}});
        rows.push_back({"total", base, 0, true, {}});
      } else {
        const auto grid = parse_grid(cost_grid);
        for (std::size_t i = 0; i < sc.size(); ++i)
          for (double g : grid) rows.push_back({sc.utility(i).id, base.with(i, g), i, false, {}});
        for (double g : grid) rows.push_back({"total", base.with(0, g - base.others(0)), 0, true, {}});
      }
      write_cost_rows(rows, ev, data);
    } else if (*verify) {
      const ScenarioConfig cfg = load();
      CostEvaluator ev(cfg.scenario, engine_options(ver_eng, seed));
      VerifyOptions vo;
      vo.tolerance = ver_tol;
      vo.best_response.tol = ver_br_tol;
      const auto rep = verify_equilibrium(ev, resolve_profile(cfg, ver_profile), vo);
      data << report_json(rep, cfg).dump(2) << '\n';
      status = rep.is_equilibrium ? 0 : 1;
    } else if (*sweep) {
      const ScenarioConfig cfg = load();
      const auto& base = cfg.scenario;
      const EngineOptions eo = engine_options(sw_eng, seed);
      const auto grid = parse_grid(sw_grid);
      data << "axis,axis_value,utility_id,mu_i_mwh,method,abc_usd_per_mwh,abc_over_pd,std_error_usd_per_mwh\n";

      struct Item {
        std::string value_label;
        std::shared_ptr<CostEvaluator> ev;
        std::string id;
        StrategyProfile profile;
        std::size_t i;
        bool total;
        CostEstimate est;
      };
      std::vector<Item> items;
      std::vector<std::string> labels;
      std::vector<MarketScenario> scenarios;
      std::stringstream vs(sw_values);
      std::string token;
      while (std::getline(vs, token, ',')) {
        if (sw_axis == "gap") {
          const auto colon = token.find(':');
          if (colon == std::string::npos) throw Error("gap values must look like b1:b2, got '" + token + "'");
          const double b1 = parse_list(token.substr(0, colon)).at(0);
          const double b2 = parse_list(token.substr(colon + 1)).at(0);
          scenarios.push_back(base.with_pricing(with_gap(base.pricing(), b1, b2)));
        } else {
          const double v = parse_list(token).at(0);
          if (sw_axis == "slope") {
            scenarios.push_back(base.with_pricing(with_slope(base.pricing(), v)));
          } else if (sw_axis == "pd") {
            scenarios.push_back(base.with_p_d(v));
          } else if (sw_axis == "split") {
            if (v != std::floor(v) || v < 1) throw Error("split values must be positive integers");
            scenarios.push_back(v == 1 ? base
                                       : market_split(base, static_cast<std::size_t>(v),
                                                      parse_split_mode(sw_split_mode))
                                             .scenario);
          } else {
            scenarios.push_back(base);
          }
        }
        labels.push_back(token);
      }

      const std::size_t n0 = base.size();
      for (std::size_t v = 0; v < scenarios.size(); ++v) {
        auto ev = std::make_shared<CostEvaluator>(scenarios[v], eo);
        const auto& sc = scenarios[v];
        const std::size_t n = sc.size();
        if (sw_axis == "fault") {
          const std::size_t j = sw_utility.empty() ? 0 : find_utility(sc, sw_utility);
          std::vector<std::size_t> set;
          if (sw_fault_set.empty()) {
            for (std::size_t s = 0; s < n; ++s)
              if (s != j) set.push_back(s);
          } else {
            for (const auto& id : split_ids(sw_fault_set)) set.push_back(find_utility(sc, id));
          }
          if (set.empty()) throw Error("fault set must not be empty");
          StrategyProfile p = StrategyProfile::zeros(n);
          const double mu_s = parse_list(labels[v]).at(0);
          for (std::size_t s : set) {
            if (s == j) throw Error("rational utility must not be in the fault set");
            p.mu[s] = mu_s / static_cast<double>(set.size());
          }
          items.push_back({labels[v], ev, sc.utility(j).id, p, j, false, {}});
          continue;
        }
        std::vector<std::size_t> targets;
        if (sw_axis == "split") {
          // First sub-utility of each parent.
          const std::size_t k = n / n0;
          for (std::size_t p = 0; p < n0; ++p) {
            const std::string parent = base.utility(p).id;
            if (!sw_utility.empty() && parent != sw_utility) continue;
            targets.push_back(p * k);
          }
        } else if (!sw_utility.empty()) {
          targets.push_back(find_utility(sc, sw_utility));
        } else {
          for (std::size_t i = 0; i < n; ++i) targets.push_back(i);
        }
        if (targets.empty()) throw Error("unknown utility '" + sw_utility + "'");
        for (std::size_t i : targets)
          for (double g : grid)
            items.push_back({labels[v], ev, sc.utility(i).id, StrategyProfile::zeros(n).with(i, g), i, false, {}});
        items.push_back({labels[v], ev, "total", StrategyProfile::zeros(n), 0, true, {}});
      }
      parallel_for(items.size(), [&](std::size_t k) {
        auto& it = items[k];
        it.est = it.total ? it.ev->expected_abc_total(it.profile) : it.ev->expected_abc(it.profile, it.i);
      });
      for (const auto& it : items) {
        const double pd = it.ev->scenario().p_d();
        const double mu = it.total ? it.profile.total() : it.profile.mu[it.i];
        data << sw_axis << ',' << it.value_label << ',' << it.id << ',' << fmt(sw_axis == "fault" ? 0.0 : mu)
             << ',' << to_string(it.est.method) << ',' << fmt(it.est.value) << ',' << fmt(it.est.value / pd) << ','
             << fmt_se(it.est.std_error) << '\n';
      }
    } else if (*fault) {
      const ScenarioConfig cfg = load();
      const auto& sc = cfg.scenario;
      CostEvaluator ev(sc, engine_options(f_eng, seed));
      const std::size_t j = f_rational.empty() ? 0 : find_utility(sc, f_rational);
      std::vector<std::size_t> set;
      if (f_set.empty()) {
        for (std::size_t s = 0; s < sc.size(); ++s)
          if (s != j) set.push_back(s);
      } else {
        for (const auto& id : split_ids(f_set)) set.push_back(find_utility(sc, id));
      }
      const auto pts = fault_immunity_curve(ev, set, parse_grid(f_grid), j);
      data << "mu_s_mwh,abs_mu_s_mwh,utility_id,method,abc_usd_per_mwh,std_error_usd_per_mwh\n";
      for (const auto& p : pts)
        data << fmt(p.mu_s) << ',' << fmt(p.abs_mu_s) << ',' << sc.utility(j).id << ','
             << to_string(p.cost.method) << ',' << fmt(p.cost.value) << ',' << fmt_se(p.cost.std_error) << '\n';
    } else if (*curves) {
      const ScenarioConfig cfg = load();
      const auto& sc = cfg.scenario;
      const double pd = sc.p_d();
      const PriceBelief belief = c_belief.empty()
                                     ? PriceBelief({pd - 10, pd - 5, pd, pd + 5, pd + 10}, {0.2, 0.2, 0.2, 0.2, 0.2})
                                     : read_belief_csv(c_belief);
      std::optional<std::vector<BiddingCurve>> demand;
      if (!c_demand.empty()) {
        std::vector<std::optional<BiddingCurve>> d(sc.size());
        for (const auto& arg : c_demand) {
          std::string id;
          auto c = read_keyed_curve(arg, id);
          d[find_utility(sc, id)] = std::move(c);
        }
        demand.emplace();
        for (std::size_t i = 0; i < sc.size(); ++i)
          demand->push_back(d[i] ? *d[i] : BiddingCurve::constant(sc.utility(i).demand_mwh));
      }
      CurveGame game(sc, belief, engine_options(c_eng, seed), demand);
      const auto family = bump_family(belief, c_intervals, parse_list(c_amplitudes));
      CurveVerifyOptions co;
      co.tolerance = c_tol;
      const auto rep = verify_curve_equilibrium(game, family, co);
      ordered_json j = report_json(rep, cfg);
      j["belief"] = {{"prices_usd_per_mwh", belief.prices()}, {"masses", belief.masses()}};
      j["family_size"] = family.size();
      if (!c_curves.empty()) {
        std::vector<BiddingCurve> cs(sc.size(), BiddingCurve::constant(0.0));
        for (const auto& arg : c_curves) {
          std::string id;
          auto c = read_keyed_curve(arg, id);
          cs[find_utility(sc, id)] = std::move(c);
        }
        ordered_json costs = ordered_json::array();
        for (std::size_t i = 0; i < sc.size(); ++i) {
          const auto e = game.expected_curve_cost(cs, i);
          costs.push_back({{"utility_id", sc.utility(i).id},
                           {"expected_abc_usd_per_mwh", e.value},
                           {"std_error_usd_per_mwh", e.std_error ? ordered_json(*e.std_error) : ordered_json(nullptr)}});
        }
        j["curve_costs"] = costs;
      }
      data << j.dump(2) << '\n';
      status = rep.is_equilibrium ? 0 : 1;
    } else if (*ks) {
      std::vector<double> xs;
      if (!ks_samples.empty()) {
        xs = read_samples_csv(ks_samples);
      } else if (!ks_trace.empty()) {
        const auto groups = ingest_traces(ks_trace);
        const TraceGroup* g = nullptr;
        for (const auto& t : groups)
          if (ks_utility.empty() ? &t == &groups.front() : t.utility_id == ks_utility) g = &t;
        if (!g) throw Error("trace has no utility '" + ks_utility + "'");
        for (const auto& r : g->rows) xs.push_back(r.predicted_mwh - r.actual_mwh);
      } else {
        throw Error("ks needs --samples or --trace");
      }
      // The test is of symmetry about the mean.
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      for (double& x : xs) x -= mean;
      const auto r = ks_symmetry_test(xs);
      ordered_json j;
      j["schema_version"] = kSchemaVersion;
      j["n"] = r.n;
      j["statistic"] = r.statistic;
      j["critical_value_5pct"] = r.critical_value;
      j["reject_at_5pct"] = r.reject_at_5pct;
      data << j.dump(2) << '\n';
    } else if (*errors) {
      data << "utility_id,rows,raw_mean_mwh,raw_std_mwh,ks_statistic,ks_reject_at_5pct\n";
      for (const auto& g : ingest_traces(er_trace)) {
        const auto e = extract_errors(g);
        const auto r = ks_symmetry_test(e.model.samples());
        data << g.utility_id << ',' << e.summary.count << ',' << fmt(e.summary.raw_mean) << ','
             << fmt(e.summary.raw_std) << ',' << fmt(r.statistic) << ',' << (r.reject_at_5pct ? 1 : 0) << '\n';
      }
    } else if (*echo) {
      data << load().echo.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  if (out_path.empty()) {
    out << data.str();
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << out_path << "'\n";
      return 2;
    }
    f << data.str();
  }
  return status;
}

}  // namespace twosettle::cli
