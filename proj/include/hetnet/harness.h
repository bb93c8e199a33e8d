#ifndef HETNET_HARNESS_H_
#define HETNET_HARNESS_H_

// Experiment runner: I_th sweeps, penalty sweeps, convergence traces and
// oracle gaps over seeded Monte-Carlo drops, written as CSV.
//
// Config files are flat JSON objects whose keys mirror the Scenario and
// SolverConfig fields. Powers are given in dBm (p_max_dbm, i_th_dbm,
// noise_dbm); missing keys keep their defaults, unknown keys are errors.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetnet/chansim.h"
#include "hetnet/jpcs.h"
#include "hetnet/model.h"

namespace hetnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HarnessConfig {
  Scenario scenario;
  SolverConfig solver;  // p_max and i_th are taken from the dBm fields
  double p_max_dbm = 23.0;
  double i_th_dbm = -90.0;

  std::size_t drops = 50;
  std::uint64_t seed = 1;

  double ith_start_dbm = -110.0;
  double ith_stop_dbm = -70.0;
  double ith_step_db = 5.0;

  std::vector<double> mu_grid = {0.0,  1e-3, 1e-2,  1e-1,
                                 1.0,  10.0, 100.0, 1000.0};
  std::vector<InitPolicy> init_policies = {InitPolicy::kUniform,
                                           InitPolicy::kFull,
                                           InitPolicy::kRandom};

  // Tiny fixtures for the oracle gap.
  std::size_t oracle_fixtures = 20;
  std::size_t oracle_users = 2;
  std::size_t oracle_smallcells = 2;
  std::size_t oracle_subchannels = 2;
  std::size_t oracle_antennas = 2;
  int oracle_levels = 200;

  // Fraction of unconverged runs above which a command exits with code 5.
  double max_unconverged_fraction = 0.1;

  // Solver settings with the dBm fields converted to watts.
  SolverConfig solver_config() const;
  void validate() const;  // throws ConfigError
};

HarnessConfig parse_config(const std::string& text);
HarnessConfig load_config(const std::string& path);
std::string dump_config(const HarnessConfig& cfg);

// Scenario seed of drop d under run seed s.
std::uint64_t drop_seed(std::uint64_t seed, std::size_t drop);

enum class Scheme { kJpcsA2, kJpcsA3, kBulkA2, kEpa, kJpcsA1 };
inline constexpr Scheme kAllSchemes[] = {Scheme::kJpcsA2, Scheme::kJpcsA3,
                                         Scheme::kBulkA2, Scheme::kEpa,
                                         Scheme::kJpcsA1};
std::string to_string(Scheme s);

// `inst3` is a three-antenna drop; two- and one-antenna schemes use its
// first antennas so every scheme sees the same channels.
AllocationReport run_scheme(Scheme s, const NetworkInstance& inst3,
                            const SolverConfig& cfg,
                            const RunOptions& opts = {});

// Feasible up to C3 shortfalls of users the run itself flagged as dropped.
bool report_acceptable(const AllocationReport& r);

// Runs task(k) for k in [0, n) on a pool of HETNET_WORKERS threads (default:
// hardware concurrency). The first exception is rethrown after all finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

struct RunStats {
  std::size_t runs = 0;
  std::size_t unconverged = 0;
  std::size_t infeasible = 0;
};

struct IthRow {
  double ith_dbm;
  std::string scheme;
  double mean_sumrate;
  double ci95;
  std::size_t drops;
  std::size_t unconverged;
  std::size_t infeasible;
};

struct PenaltyRow {
  double mu;
  double mean_sumrate;
  double max_binariness_gap;
  std::size_t drops;
};

struct ConvergenceRow {
  std::size_t drop;
  std::string init;
  int iteration;
  double sum_rate;
};

struct OracleGapRow {
  std::size_t fixture;
  double jpcs;
  double oracle;
  double slack;
  double gap;  // (oracle - jpcs) / oracle, 0 when oracle is 0
  bool jpcs_feasible;
  std::size_t assignments;
};

std::vector<IthRow> sweep_ith(const HarnessConfig& cfg, RunStats* stats = nullptr);
std::vector<PenaltyRow> sweep_penalty(const HarnessConfig& cfg,
                                      RunStats* stats = nullptr);
std::vector<ConvergenceRow> convergence(const HarnessConfig& cfg,
                                        RunStats* stats = nullptr);
std::vector<OracleGapRow> oracle_gap(const HarnessConfig& cfg,
                                     RunStats* stats = nullptr);

// Tiny fixture k of the oracle comparison.
NetworkInstance oracle_fixture(const HarnessConfig& cfg, std::size_t k);

void write_csv(std::ostream& out, const std::vector<IthRow>& rows);
void write_csv(std::ostream& out, const std::vector<PenaltyRow>& rows);
void write_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_csv(std::ostream& out, const std::vector<OracleGapRow>& rows);

double median(std::vector<double> v);

// Exit codes of run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitGuard = 4;
inline constexpr int kExitUnconverged = 5;

struct CommandArgs {
  std::string command;  // sweep-ith, sweep-penalty, convergence, oracle-gap
  std::string config_path;  // empty: defaults
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> drops;
};

// Loads the config, runs the command and writes the CSV. Errors are
// reported on `err`.
int run_command(const CommandArgs& args, std::ostream& err);

}  // namespace hetnet

#endif  // HETNET_HARNESS_H_
