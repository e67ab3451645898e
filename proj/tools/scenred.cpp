// Command-line front end: generate, solve-ef, train, evaluate, order-cdf,
// baselines. Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "scenred/cli/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dataset;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<std::size_t> threads;
  std::optional<std::int64_t> node_limit;
  std::optional<double> node_weight;
  std::string checkpoint;
  std::string instance;
  std::string dump_problem;
  bool monolithic = false;
};

scenred::cli::RunConfig resolve(const Flags& f) {
  auto cfg = scenred::cli::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.dataset) cfg.paths.dataset = *f.dataset;
  if (f.out) {
    cfg.paths.reports = *f.out;
    cfg.paths.checkpoints = *f.out + "/checkpoints";
  }
  if (f.k) cfg.k = *f.k;
  if (f.threads) cfg.threads = *f.threads;
  if (f.node_limit) cfg.solver.node_limit = *f.node_limit;
  if (f.node_weight) cfg.reward.node_weight = *f.node_weight;
  scenred::cli::validate(cfg);
  return cfg;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--seed", f.seed, "base seed");
  sub->add_option("--dataset", f.dataset, "dataset directory");
  sub->add_option("--out", f.out, "output directory for reports (checkpoints go to OUT/checkpoints)");
  sub->add_option("--k", f.k, "number of selected scenarios");
  sub->add_option("--threads", f.threads, "worker threads");
  sub->add_option("--node-limit", f.node_limit, "branch-and-bound node limit");
  sub->add_option("--node-weight", f.node_weight, "weight of a node in the work metric");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario reduction for two-stage stochastic programs"};
  app.require_subcommand(1);
  Flags f;
  auto* gen = app.add_subcommand("generate", "generate a dataset with cached optima");
  auto* solve = app.add_subcommand("solve-ef", "solve one instance exactly");
  auto* train = app.add_subcommand("train", "train the selection policy");
  auto* eval = app.add_subcommand("evaluate", "evaluate the policy and baselines on the test split");
  auto* cdf = app.add_subcommand("order-cdf", "compare the policy's scenario order with random orders");
  auto* base = app.add_subcommand("baselines", "evaluate the baselines on the test split");
  for (auto* s : {gen, solve, train, eval, cdf, base}) add_common(s, f);
  solve->add_option("--instance", f.instance, "instance file")->required();
  solve->add_flag("--monolithic", f.monolithic, "solve the full extensive form instead of enumerating x");
  solve->add_option("--dump-problem", f.dump_problem, "write the extensive form to this file");
  for (auto* s : {eval, cdf}) s->add_option("--checkpoint", f.checkpoint, "policy checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto cfg = resolve(f);
    if (gen->parsed()) {
      scenred::cli::cmd_generate(cfg, std::cerr);
    } else if (solve->parsed()) {
      scenred::cli::cmd_solve_ef(cfg, f.instance, {f.monolithic, f.dump_problem}, std::cout);
    } else if (train->parsed()) {
      scenred::cli::cmd_train(cfg, std::cout);
    } else if (eval->parsed()) {
      scenred::cli::cmd_evaluate(cfg, f.checkpoint, std::cout);
    } else if (cdf->parsed()) {
      scenred::cli::cmd_order_cdf(cfg, f.checkpoint, std::cout);
    } else if (base->parsed()) {
      scenred::cli::cmd_baselines(cfg, std::cout);
    }
  } catch (const scenred::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
