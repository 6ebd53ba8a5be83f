// qcert: run certification experiments from JSON configs, or run named check suites.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "qcert/cli.hpp"
#include "qcert/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qcert: certification and benchmarking of quantum states, processes and devices"};
  app.require_subcommand(1);

  qcert::cli::RunOptions run;
  std::uint64_t run_seed = 0;
  std::string records, save_records;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
  run_cmd->add_option("config", run.config_path, "config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "override the config seed");
  auto* rec_opt = run_cmd->add_option("--records", records, "replay recorded shots instead of simulating");
  auto* save_opt = run_cmd->add_option("--save-records", save_records, "write every measured batch (JSON lines)");
  run_cmd->add_option("--out", run.out_dir, "output directory")->capture_default_str();
  run_cmd->add_option("--threads", run.threads, "worker threads (0 = default)")->check(CLI::NonNegativeNumber);

  std::string suite;
  std::uint64_t verify_seed = 1;
  std::string verify_out = ".";
  int verify_threads = 0;
  auto* verify_cmd = app.add_subcommand("verify", "run a named check suite");
  std::string suites_help = "suite id:";
  for (const auto& s : qcert::suites::suite_ids()) suites_help += " " + s;
  verify_cmd->add_option("suite", suite, suites_help)->required();
  verify_cmd->add_option("--seed", verify_seed, "seed")->capture_default_str();
  verify_cmd->add_option("--out", verify_out, "output directory")->capture_default_str();
  verify_cmd->add_option("--threads", verify_threads, "worker threads (0 = default)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qcert::cli::kExitInvalid;
  }

  if (*run_cmd) {
    if (*seed_opt) run.seed = run_seed;
    if (*rec_opt) run.records_path = records;
    if (*save_opt) run.save_records_path = save_records;
    return qcert::cli::run(run);
  }
  return qcert::cli::verify(suite, verify_seed, verify_out, verify_threads);
}
