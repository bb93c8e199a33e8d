// hetnet_sim: runs the experiment sweeps and writes CSV.
//
//   hetnet_sim sweep-ith --config cfg.json --out ith.csv --seed 1 --drops 50
//   hetnet_sim dump-config --out defaults.json
//
// HETNET_WORKERS sets the number of worker threads.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hetnet/harness.h"

int main(int argc, char** argv) {
  CLI::App app{"Uplink HetNet joint power control and scheduling experiments"};
  app.require_subcommand(1);

  hetnet::CommandArgs args;
  std::uint64_t seed = 0;
  std::size_t drops = 0;
  for (const char* name : {"sweep-ith", "sweep-penalty", "convergence", "oracle-gap"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "JSON config (defaults if omitted)");
    sub->add_option("--out", args.out_path, "CSV output path")->required();
    sub->add_option("--seed", seed, "run seed");
    sub->add_option("--drops", drops, "number of drops (fixtures for oracle-gap)");
  }
  std::string dump_path;
  CLI::App* dump = app.add_subcommand("dump-config", "write the default config");
  dump->add_option("--out", dump_path, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hetnet::kExitBadConfig;
  }

  if (dump->parsed()) {
    std::ofstream out(dump_path);
    out << hetnet::dump_config(hetnet::HarnessConfig{});
    return out ? hetnet::kExitOk : hetnet::kExitIo;
  }

  CLI::App* sub = app.get_subcommands().front();
  args.command = sub->get_name();
  if (sub->count("--seed") > 0) args.seed = seed;
  if (sub->count("--drops") > 0) args.drops = drops;
  return hetnet::run_command(args, std::cerr);
}
