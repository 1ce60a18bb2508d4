// Command-line front end: build, unlearn, noise-recovery, bench-compare,
// verify-exactness.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "gunl/bench/bench.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "config file of `section.key = value` lines")->required();
  cmd->add_option("--seed", opts.seed, "global seed, overrides run.seed");
  cmd->add_option("--out", opts.out, "output directory, overrides run.out");
  cmd->add_option("--jobs", opts.jobs, "worker threads, overrides run.jobs")->check(CLI::PositiveNumber);
}

gunl::bench::ExperimentConfig resolve(const CommonOptions& opts) {
  auto config = gunl::bench::load_config(opts.config);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.out) config.out = *opts.out;
  if (opts.jobs) config.jobs = *opts.jobs;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharded graph unlearning pipeline"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string request_path;
  auto* build = app.add_subcommand("build", "partition, train sub-models and aggregator, evaluate, persist");
  auto* unlearn = app.add_subcommand("unlearn", "delete nodes from a persisted pipeline");
  auto* noise = app.add_subcommand("noise-recovery", "clean, poisoned and unlearned utility");
  auto* compare = app.add_subcommand("bench-compare", "single shard vs random vs trained partition");
  auto* verify = app.add_subcommand("verify-exactness", "replay every shard of a persisted pipeline");
  for (auto* cmd : {build, unlearn, noise, compare, verify}) add_common(cmd, opts);
  unlearn->add_option("--request", request_path, "file with one node id per line; default: delete.* keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto config = resolve(opts);
    if (build->parsed()) {
      gunl::bench::cmd_build(config, std::cout);
    } else if (unlearn->parsed()) {
      std::optional<gunl::DeleteSet> request;
      if (!request_path.empty()) request = gunl::load_request(request_path);
      gunl::bench::cmd_unlearn(config, request, std::cout);
    } else if (noise->parsed()) {
      gunl::bench::cmd_noise_recovery(config, std::cout);
    } else if (compare->parsed()) {
      std::cout << gunl::bench::format_table(gunl::bench::cmd_bench_compare(config, std::cerr).rows);
    } else if (verify->parsed()) {
      if (!gunl::bench::cmd_verify_exactness(config, std::cout).exact()) return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gunl::bench::exit_code_for(e);
  }
  return 0;
}
