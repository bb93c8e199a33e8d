#include "hetnet/harness.h"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "hetnet/oracle.h"
#include "json.hpp"

namespace hetnet {
namespace {

using nlohmann::json;

// One binding between a JSON key and a config field.
struct Field {
  const char* key;
  std::function<void(const json&, HarnessConfig&)> read;
  std::function<json(const HarnessConfig&)> write;
};

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

std::size_t as_count(const std::string& key, const json& v) {
  if (!v.is_number_unsigned()) bad(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

int as_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < -2147483647 || x > 2147483647) bad(key, "out of range");
  return static_cast<int>(x);
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

#define HN_DOUBLE(name, path)                                              \
  Field{name, [](const json& v, HarnessConfig& c) { c.path = as_double(name, v); }, \
        [](const HarnessConfig& c) { return json(c.path); }}
#define HN_COUNT(name, path)                                               \
  Field{name, [](const json& v, HarnessConfig& c) { c.path = as_count(name, v); }, \
        [](const HarnessConfig& c) { return json(c.path); }}
#define HN_INT(name, path)                                                 \
  Field{name, [](const json& v, HarnessConfig& c) { c.path = as_int(name, v); }, \
        [](const HarnessConfig& c) { return json(c.path); }}
#define HN_BOOL(name, path)                                                \
  Field{name, [](const json& v, HarnessConfig& c) { c.path = as_bool(name, v); }, \
        [](const HarnessConfig& c) { return json(c.path); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      HN_DOUBLE("macro_radius", scenario.macro_radius),
      HN_DOUBLE("smallcell_radius", scenario.smallcell_radius),
      HN_DOUBLE("min_distance", scenario.min_distance),
      HN_COUNT("num_smallcells", scenario.num_smallcells),
      HN_COUNT("users_total", scenario.users_total),
      HN_COUNT("num_subchannels", scenario.num_subchannels),
      HN_COUNT("num_antennas", scenario.num_antennas),
      HN_DOUBLE("pl0_macro", scenario.pl0_macro),
      HN_DOUBLE("theta_macro", scenario.theta_macro),
      HN_DOUBLE("pl0_small", scenario.pl0_small),
      HN_DOUBLE("theta_small", scenario.theta_small),
      HN_DOUBLE("noise_dbm", scenario.noise_dbm),
      HN_DOUBLE("carrier_ghz", scenario.carrier_ghz),
      HN_DOUBLE("subchannel_khz", scenario.subchannel_khz),

      HN_DOUBLE("p_max_dbm", p_max_dbm),
      HN_DOUBLE("i_th_dbm", i_th_dbm),
      HN_DOUBLE("r_min", solver.r_min),
      HN_DOUBLE("mu1", solver.mu1),
      HN_DOUBLE("mu2", solver.mu2),
      HN_BOOL("mu_relative", solver.mu_relative),
      HN_DOUBLE("mu_start", solver.mu_start),
      HN_DOUBLE("mu_growth", solver.mu_growth),
      HN_DOUBLE("psi0", solver.psi0),
      HN_DOUBLE("psi_cap", solver.psi_cap),
      HN_DOUBLE("eps_outer", solver.eps_outer),
      HN_DOUBLE("eps_power", solver.eps_power),
      HN_DOUBLE("mm_tol", solver.mm_tol),
      HN_INT("t_j_max", solver.t_j_max),
      HN_INT("alm_max_iter", solver.alm_max_iter),
      HN_INT("inner_max_iter", solver.inner_max_iter),
      HN_INT("outer_max_iter", solver.outer_max_iter),
      HN_INT("fw_max_iter", solver.fw_max_iter),
      HN_DOUBLE("fw_gap_tol", solver.fw_gap_tol),
      HN_INT("sched_alm_rounds", solver.sched_alm_rounds),
      HN_DOUBLE("warm_start_mix", solver.warm_start_mix),
      Field{"antenna_mode",
            [](const json& v, HarnessConfig& c) {
              if (v == "per_subchannel") {
                c.solver.antenna_mode = AntennaMode::kPerSubchannel;
              } else if (v == "bulk") {
                c.solver.antenna_mode = AntennaMode::kBulk;
              } else {
                bad("antenna_mode", "expected \"per_subchannel\" or \"bulk\"");
              }
            },
            [](const HarnessConfig& c) {
              return json(c.solver.antenna_mode == AntennaMode::kBulk
                              ? "bulk"
                              : "per_subchannel");
            }},

      HN_COUNT("drops", drops),
      Field{"seed",
            [](const json& v, HarnessConfig& c) {
              if (!v.is_number_unsigned()) bad("seed", "expected a non-negative integer");
              c.seed = v.get<std::uint64_t>();
            },
            [](const HarnessConfig& c) { return json(c.seed); }},
      HN_DOUBLE("ith_start_dbm", ith_start_dbm),
      HN_DOUBLE("ith_stop_dbm", ith_stop_dbm),
      HN_DOUBLE("ith_step_db", ith_step_db),
      Field{"mu_grid",
            [](const json& v, HarnessConfig& c) {
              if (!v.is_array()) bad("mu_grid", "expected an array");
              c.mu_grid.clear();
              for (const json& e : v) c.mu_grid.push_back(as_double("mu_grid", e));
            },
            [](const HarnessConfig& c) { return json(c.mu_grid); }},
      Field{"init_policies",
            [](const json& v, HarnessConfig& c) {
              if (!v.is_array()) bad("init_policies", "expected an array");
              c.init_policies.clear();
              for (const json& e : v) {
                if (!e.is_string()) bad("init_policies", "expected strings");
                try {
                  c.init_policies.push_back(parse_init_policy(e.get<std::string>()));
                } catch (const std::exception& ex) {
                  bad("init_policies", ex.what());
                }
              }
            },
            [](const HarnessConfig& c) {
              json out = json::array();
              for (InitPolicy p : c.init_policies) out.push_back(to_string(p));
              return out;
            }},
      HN_COUNT("oracle_fixtures", oracle_fixtures),
      HN_COUNT("oracle_users", oracle_users),
      HN_COUNT("oracle_smallcells", oracle_smallcells),
      HN_COUNT("oracle_subchannels", oracle_subchannels),
      HN_COUNT("oracle_antennas", oracle_antennas),
      HN_INT("oracle_levels", oracle_levels),
      HN_DOUBLE("max_unconverged_fraction", max_unconverged_fraction),
  };
  return table;
}

#undef HN_DOUBLE
#undef HN_COUNT
#undef HN_INT
#undef HN_BOOL

struct MeanCi {
  double mean = 0.0;
  double ci95 = 0.0;
};

MeanCi mean_ci(const std::vector<double>& v) {
  MeanCi out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

NetworkInstance make_drop(const HarnessConfig& cfg, std::size_t d,
                          std::size_t antennas) {
  Scenario sc = cfg.scenario;
  sc.num_antennas = antennas;
  sc.seed = drop_seed(cfg.seed, d);
  return generate_instance(sc);
}

void tally(RunStats* stats, const std::vector<AllocationReport>& reports) {
  if (stats == nullptr) return;
  for (const AllocationReport& r : reports) {
    ++stats->runs;
    if (!r.converged) ++stats->unconverged;
    if (!report_acceptable(r)) ++stats->infeasible;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

SolverConfig HarnessConfig::solver_config() const {
  SolverConfig out = solver;
  out.p_max = dbm_to_watts(p_max_dbm);
  out.i_th = dbm_to_watts(i_th_dbm);
  return out;
}

void HarnessConfig::validate() const {
  try {
    scenario.validate();
    solver_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (drops == 0) throw ConfigError("drops must be positive");
  if (!(ith_step_db > 0.0) || !(ith_stop_dbm >= ith_start_dbm)) {
    throw ConfigError("I_th sweep needs ith_step_db > 0 and stop >= start");
  }
  if (mu_grid.empty()) throw ConfigError("mu_grid is empty");
  for (double mu : mu_grid) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu_grid entries must be >= 0");
  }
  if (init_policies.empty()) throw ConfigError("init_policies is empty");
  if (oracle_levels < 1) throw ConfigError("oracle_levels must be >= 1");
  if (oracle_smallcells == 0 || oracle_subchannels == 0 || oracle_antennas == 0) {
    throw ConfigError("oracle fixtures need at least one cell, sub-channel and antenna");
  }
  if (!(max_unconverged_fraction >= 0.0 && max_unconverged_fraction <= 1.0)) {
    throw ConfigError("max_unconverged_fraction must be in [0, 1]");
  }
}

HarnessConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  HarnessConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->read(value, cfg);
  }
  cfg.validate();
  return cfg;
}

HarnessConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const HarnessConfig& cfg) {
  json doc = json::object();
  for (const Field& f : fields()) doc[f.key] = f.write(cfg);
  return doc.dump(2) + "\n";
}

std::uint64_t drop_seed(std::uint64_t seed, std::size_t drop) {
  return seed * 1000003ULL + drop;
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kJpcsA2: return "jpcs_A2";
    case Scheme::kJpcsA3: return "jpcs_A3";
    case Scheme::kBulkA2: return "bulk_A2";
    case Scheme::kEpa: return "epa";
    case Scheme::kJpcsA1: return "jpcs_A1";
  }
  return "?";
}

AllocationReport run_scheme(Scheme s, const NetworkInstance& inst3,
                            const SolverConfig& cfg, const RunOptions& opts) {
  const std::size_t a2 = std::min<std::size_t>(2, inst3.num_antennas());
  switch (s) {
    case Scheme::kJpcsA2: return run_jpcs(inst3.restrict_antennas(a2), cfg, opts);
    case Scheme::kJpcsA3: return run_jpcs(inst3, cfg, opts);
    case Scheme::kBulkA2: return run_bulk_as(inst3.restrict_antennas(a2), cfg, opts);
    case Scheme::kEpa: return run_epa(inst3.restrict_antennas(a2), cfg, opts);
    case Scheme::kJpcsA1: return run_single_antenna(inst3, cfg, opts);
  }
  throw std::invalid_argument("unknown scheme");
}

bool report_acceptable(const AllocationReport& r) {
  for (const Violation& v : r.violations) {
    if (v.constraint != Constraint::kC3MinRate) return false;
    if (!std::binary_search(r.dropped_users.begin(), r.dropped_users.end(), v.index)) {
      return false;
    }
  }
  return true;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HETNET_WORKERS")) {
    const long w = std::strtol(env, nullptr, 10);
    if (w > 0) workers = static_cast<std::size_t>(w);
  }
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        task(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::vector<IthRow> sweep_ith(const HarnessConfig& cfg, RunStats* stats) {
  std::vector<double> levels;
  for (double v = cfg.ith_start_dbm; v <= cfg.ith_stop_dbm + 1e-9; v += cfg.ith_step_db) {
    levels.push_back(v);
  }
  constexpr std::size_t kSchemes = std::size(kAllSchemes);
  const std::size_t per_level = cfg.drops * kSchemes;
  std::vector<AllocationReport> reports(levels.size() * per_level);
  parallel_for(reports.size(), [&](std::size_t k) {
    const std::size_t level = k / per_level;
    const std::size_t d = (k % per_level) / kSchemes;
    const Scheme s = kAllSchemes[k % kSchemes];
    HarnessConfig c = cfg;
    c.i_th_dbm = levels[level];
    reports[k] = run_scheme(s, make_drop(cfg, d, 3), c.solver_config());
  });
  tally(stats, reports);

  std::vector<IthRow> rows;
  for (std::size_t level = 0; level < levels.size(); ++level) {
    for (std::size_t si = 0; si < kSchemes; ++si) {
      std::vector<double> rates;
      IthRow row{levels[level], to_string(kAllSchemes[si]), 0, 0, cfg.drops, 0, 0};
      for (std::size_t d = 0; d < cfg.drops; ++d) {
        const AllocationReport& r = reports[level * per_level + d * kSchemes + si];
        rates.push_back(r.sum_rate);
        if (!r.converged) ++row.unconverged;
        if (!report_acceptable(r)) ++row.infeasible;
      }
      const MeanCi mc = mean_ci(rates);
      row.mean_sumrate = mc.mean;
      row.ci95 = mc.ci95;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<PenaltyRow> sweep_penalty(const HarnessConfig& cfg, RunStats* stats) {
  const std::size_t n = cfg.mu_grid.size() * cfg.drops;
  std::vector<AllocationReport> reports(n);
  parallel_for(n, [&](std::size_t k) {
    SolverConfig sc = cfg.solver_config();
    sc.mu1 = sc.mu2 = cfg.mu_grid[k / cfg.drops];
    reports[k] = run_jpcs(make_drop(cfg, k % cfg.drops, cfg.scenario.num_antennas), sc);
  });
  tally(stats, reports);

  std::vector<PenaltyRow> rows;
  for (std::size_t g = 0; g < cfg.mu_grid.size(); ++g) {
    std::vector<double> rates;
    double gap = 0.0;
    for (std::size_t d = 0; d < cfg.drops; ++d) {
      const AllocationReport& r = reports[g * cfg.drops + d];
      rates.push_back(r.sum_rate);
      gap = std::max(gap, r.binariness_gap);
    }
    rows.push_back({cfg.mu_grid[g], mean_ci(rates).mean, gap, cfg.drops});
  }
  return rows;
}

std::vector<ConvergenceRow> convergence(const HarnessConfig& cfg, RunStats* stats) {
  const std::size_t P = cfg.init_policies.size();
  std::vector<AllocationReport> reports(cfg.drops * P);
  parallel_for(reports.size(), [&](std::size_t k) {
    const std::size_t d = k / P;
    RunOptions opts{cfg.init_policies[k % P], drop_seed(cfg.seed, d)};
    reports[k] = run_jpcs(make_drop(cfg, d, cfg.scenario.num_antennas),
                          cfg.solver_config(), opts);
  });
  tally(stats, reports);

  std::vector<ConvergenceRow> rows;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& trace = reports[k].trace;
    for (std::size_t t = 0; t < trace.size(); ++t) {
      rows.push_back({k / P, to_string(cfg.init_policies[k % P]),
                      static_cast<int>(t), trace[t]});
    }
  }
  return rows;
}

NetworkInstance oracle_fixture(const HarnessConfig& cfg, std::size_t k) {
  Scenario sc = cfg.scenario;
  sc.num_smallcells = cfg.oracle_smallcells;
  sc.users_total = cfg.oracle_users;
  sc.num_subchannels = cfg.oracle_subchannels;
  sc.num_antennas = cfg.oracle_antennas;
  sc.seed = drop_seed(cfg.seed, k);
  return generate_instance(sc);
}

std::vector<OracleGapRow> oracle_gap(const HarnessConfig& cfg, RunStats* stats) {
  const SolverConfig sc = cfg.solver_config();
  std::vector<OracleGapRow> rows(cfg.oracle_fixtures);
  std::vector<AllocationReport> reports(cfg.oracle_fixtures);
  parallel_for(rows.size(), [&](std::size_t k) {
    const NetworkInstance inst = oracle_fixture(cfg, k);
    const OracleResult best = oracle_optimum(inst, sc, cfg.oracle_levels);
    reports[k] = run_jpcs(inst, sc);
    const AllocationReport& r = reports[k];
    OracleGapRow& row = rows[k];
    row.fixture = k;
    row.jpcs = r.sum_rate;
    row.oracle = best.sum_rate;
    row.slack = grid_slack(inst, r.assignment, r.power, sc, cfg.oracle_levels);
    row.gap = best.sum_rate > 0.0 ? (best.sum_rate - r.sum_rate) / best.sum_rate : 0.0;
    row.jpcs_feasible = report_acceptable(r);
    row.assignments = best.assignments;
  });
  tally(stats, reports);
  return rows;
}

void write_csv(std::ostream& out, const std::vector<IthRow>& rows) {
  out << "ith_dbm,scheme,mean_sumrate,ci95,drops,unconverged,infeasible\n";
  for (const IthRow& r : rows) {
    out << fmt(r.ith_dbm) << ',' << r.scheme << ',' << fmt(r.mean_sumrate) << ','
        << fmt(r.ci95) << ',' << r.drops << ',' << r.unconverged << ','
        << r.infeasible << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<PenaltyRow>& rows) {
  out << "mu,mean_sumrate,max_binariness_gap,drops\n";
  for (const PenaltyRow& r : rows) {
    out << fmt(r.mu) << ',' << fmt(r.mean_sumrate) << ','
        << fmt(r.max_binariness_gap) << ',' << r.drops << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "drop,init,iteration,sum_rate\n";
  for (const ConvergenceRow& r : rows) {
    out << r.drop << ',' << r.init << ',' << r.iteration << ',' << fmt(r.sum_rate)
        << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<OracleGapRow>& rows) {
  out << "fixture,jpcs,oracle,slack,gap,jpcs_feasible,assignments\n";
  for (const OracleGapRow& r : rows) {
    out << r.fixture << ',' << fmt(r.jpcs) << ',' << fmt(r.oracle) << ','
        << fmt(r.slack) << ',' << fmt(r.gap) << ',' << (r.jpcs_feasible ? 1 : 0)
        << ',' << r.assignments << '\n';
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

int run_command(const CommandArgs& args, std::ostream& err) {
  HarnessConfig cfg;
  try {
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.drops) cfg.drops = *args.drops;
    if (args.drops && args.command == "oracle-gap") cfg.oracle_fixtures = *args.drops;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) {
    err << "error: cannot write " << args.out_path << '\n';
    return kExitIo;
  }

  RunStats stats;
  try {
    if (args.command == "sweep-ith") {
      write_csv(out, sweep_ith(cfg, &stats));
    } else if (args.command == "sweep-penalty") {
      write_csv(out, sweep_penalty(cfg, &stats));
    } else if (args.command == "convergence") {
      write_csv(out, convergence(cfg, &stats));
    } else if (args.command == "oracle-gap") {
      const auto rows = oracle_gap(cfg, &stats);
      write_csv(out, rows);
      std::vector<double> gaps;
      for (const auto& r : rows) gaps.push_back(r.gap);
      err << "median gap " << fmt(median(gaps)) << '\n';
    } else {
      err << "error: unknown command " << args.command << '\n';
      return kExitBadConfig;
    }
  } catch (const GuardError& e) {
    err << "error: " << e.what() << '\n';
    return kExitGuard;
  }
  out.flush();
  if (!out) {
    err << "error: write to " << args.out_path << " failed\n";
    return kExitIo;
  }
  if (stats.infeasible > 0) {
    err << "warning: " << stats.infeasible << " of " << stats.runs
        << " runs returned infeasible reports\n";
  }
  if (stats.runs > 0 &&
      static_cast<double>(stats.unconverged) >
          cfg.max_unconverged_fraction * static_cast<double>(stats.runs)) {
    err << "error: " << stats.unconverged << " of " << stats.runs
        << " runs did not converge\n";
    return kExitUnconverged;
  }
  return kExitOk;
}

}  // namespace hetnet
