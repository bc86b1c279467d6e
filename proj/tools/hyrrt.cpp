// hyrrt: plan, validate, sweep-delta, benchmark.

#include <hyrrt/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
  std::string config;
  std::string out = ".";
  std::vector<std::string> set;
  std::optional<long long> seed;
  std::optional<double> delta;
  std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out = true) {
  cmd->add_option("-c,--config", o.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("--set", o.set, "Override a config entry: key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "planner.seed override");
  cmd->add_option("--delta", o.delta, "planner.delta override");
  cmd->add_option("--mode", o.mode, "planner.mode override: hyrrt_connect | bi_hyrrt | hyrrt");
}

std::vector<std::string> overrides(const CommonOptions& o) {
  std::vector<std::string> out = o.set;
  if (o.seed) out.push_back("planner.seed=" + std::to_string(*o.seed));
  if (o.delta) out.push_back("planner.delta=" + hyrrt::format_number(*o.delta));
  if (o.mode) out.push_back("planner.mode=" + *o.mode);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional RRT motion planning for hybrid systems"};
  app.require_subcommand(1);

  CommonOptions plan_opts;
  CLI::App* plan_cmd = app.add_subcommand("plan", "Run the planner; writes plan.json and plan.csv");
  add_common(plan_cmd, plan_opts);

  CommonOptions validate_opts;
  std::string plan_path;
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a plan.json against the configured system");
  add_common(validate_cmd, validate_opts, false);
  validate_cmd->add_option("-p,--plan", plan_path, "plan.json to check")->required();

  CommonOptions sweep_opts;
  std::vector<double> deltas;
  std::optional<int> sweep_trials;
  CLI::App* sweep_cmd = app.add_subcommand("sweep-delta", "Reconstruction deviation versus delta; writes sweep.csv");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--deltas", deltas, "Delta values (default: sweep.deltas)")->delimiter(',');
  sweep_cmd->add_option("--trials", sweep_trials, "Seeds per delta (default: sweep.trials)");

  CommonOptions bench_opts;
  std::optional<int> bench_trials;
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "Compare the three planner modes; writes bench.csv");
  add_common(bench_cmd, bench_opts);
  bench_cmd->add_option("--trials", bench_trials, "Seeds per mode (default: benchmark.trials)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hyrrt::kExitConfig;
  }

  if (*plan_cmd)
    return hyrrt::cmd_plan(plan_opts.config, overrides(plan_opts), plan_opts.out, std::cout, std::cerr);
  if (*validate_cmd)
    return hyrrt::cmd_validate(plan_path, validate_opts.config, overrides(validate_opts), std::cout, std::cerr);
  if (*sweep_cmd) {
    std::optional<std::vector<double>> ds;
    if (!deltas.empty()) ds = deltas;
    return hyrrt::cmd_sweep_delta(sweep_opts.config, overrides(sweep_opts), ds, sweep_trials, sweep_opts.out,
                                  std::cout, std::cerr);
  }
  return hyrrt::cmd_benchmark(bench_opts.config, overrides(bench_opts), bench_trials, bench_opts.out, std::cout,
                              std::cerr);
}
