#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/bench/baselines.hpp"
#include "scenred/bench/evaluate.hpp"
#include "scenred/bench/order_cdf.hpp"
#include "scenred/bench/report.hpp"
#include "scenred/cli/config.hpp"
#include "scenred/core/evaluate.hpp"
#include "scenred/core/extensive_form.hpp"
#include "scenred/core/generators.hpp"
#include "scenred/core/io.hpp"
#include "scenred/nn/params.hpp"
#include "scenred/nn/policy.hpp"
#include "scenred/parallel.hpp"
#include "scenred/rl/train.hpp"

namespace scenred::cli {

namespace fs = std::filesystem;

inline constexpr int kManifestVersion = 1;

struct ManifestEntry {
  std::size_t id = 0;
  std::string split;
  std::uint64_t seed = 0;
  std::string file;  // empty when skipped
  std::string status = "ok";
  double v_star = 0.0;
};

inline std::string split_of(const DatasetConfig& d, std::size_t id) {
  if (id < d.train) return "train";
  if (id < d.train + d.validation) return "validation";
  return "test";
}

inline std::string instance_file_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "instance_%04zu.json", id);
  return buf;
}

inline SpInstance generate_instance(const ProblemConfig& p, std::uint64_t seed) {
  if (p.family == "cflp") return gen_cflp(p.facilities, p.customers, p.scenarios, seed);
  if (p.family == "ndp") return gen_ndp(p.sources, p.sinks, p.intermediates, p.scenarios, seed);
  throw UsageError("unknown problem family '" + p.family + "'");
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

// Generates train + validation + test instances with cached optima. Instance
// id draws from derive_seed(seed, id). Instances whose optimum is not proven
// are skipped and recorded as such in the manifest.
inline std::vector<ManifestEntry> cmd_generate(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  const std::size_t total = cfg.dataset.train + cfg.dataset.validation + cfg.dataset.test;
  const fs::path dir(cfg.paths.dataset);
  fs::create_directories(dir);
  std::vector<std::optional<SpInstance>> made(total);
  std::vector<ManifestEntry> entries(total);
  const auto solver = cfg.solver.options();
  parallel_for(total, cfg.threads, [&](std::size_t id) {
    ManifestEntry& e = entries[id];
    e.id = id;
    e.split = split_of(cfg.dataset, id);
    e.seed = derive_seed(cfg.seed, id);
    SpInstance inst = generate_instance(cfg.problem, e.seed);
    const auto r = solve_instance_exact(inst, solver);
    if (r.status != mip::Status::kOptimal) {
      e.status = std::string("skipped: ") + mip::to_string(r.status);
      return;
    }
    inst.cached_optimum = r.optimum;
    e.v_star = r.optimum.value;
    e.file = instance_file_name(id);
    made[id] = std::move(inst);
  });
  Json manifest;
  manifest["version"] = kManifestVersion;
  manifest["config"] = to_json(cfg);
  Json list = Json::array();
  std::size_t skipped = 0;
  for (std::size_t id = 0; id < total; ++id) {
    const auto& e = entries[id];
    Json je = {{"id", e.id}, {"split", e.split}, {"seed", e.seed}, {"status", e.status}};
    if (made[id]) {
      write_text(dir / e.file, instance_to_string(*made[id]));
      je["file"] = e.file;
      je["vStar"] = e.v_star;
    } else {
      ++skipped;
      log << "skipped instance " << id << " (" << e.status << ")\n";
    }
    list.push_back(std::move(je));
  }
  manifest["instances"] = std::move(list);
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
  log << "generated " << total - skipped << " instances (" << skipped << " skipped) in " << dir.string() << "\n";
  return entries;
}

struct LoadedInstance {
  std::size_t id = 0;
  SpInstance inst;
};

inline std::vector<ManifestEntry> read_manifest(const std::string& dataset_dir) {
  const fs::path path = fs::path(dataset_dir) / "manifest.json";
  if (!fs::exists(path)) throw UsageError("dataset '" + dataset_dir + "' has no manifest.json; run generate first");
  const Json j = read_json_file(path.string());
  if (j.at("version").get<int>() != kManifestVersion) throw std::runtime_error("manifest: unsupported version");
  std::vector<ManifestEntry> out;
  for (const auto& je : j.at("instances")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::size_t>();
    e.split = je.at("split").get<std::string>();
    e.seed = je.at("seed").get<std::uint64_t>();
    e.status = je.at("status").get<std::string>();
    if (je.contains("file")) e.file = je.at("file").get<std::string>();
    if (je.contains("vStar")) e.v_star = je.at("vStar").get<double>();
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<LoadedInstance> load_split(const std::string& dataset_dir, const std::string& split) {
  std::vector<LoadedInstance> out;
  for (const auto& e : read_manifest(dataset_dir)) {
    if (e.split != split || e.file.empty()) continue;
    LoadedInstance li{e.id, read_instance((fs::path(dataset_dir) / e.file).string())};
    if (!li.inst.cached_optimum) throw std::runtime_error("instance " + std::to_string(e.id) + " has no cached optimum");
    out.push_back(std::move(li));
  }
  return out;
}

inline std::vector<SpInstance> instances_of(const std::vector<LoadedInstance>& v) {
  std::vector<SpInstance> out;
  out.reserve(v.size());
  for (const auto& li : v) out.push_back(li.inst);
  return out;
}

struct SolveEfOptions {
  bool monolithic = false;    // skip first-stage enumeration
  std::string dump_problem;   // write the extensive form here
};

inline Json cmd_solve_ef(const RunConfig& cfg, const std::string& instance_path, const SolveEfOptions& opt,
                         std::ostream& out) {
  if (instance_path.empty()) throw UsageError("solve-ef needs --instance PATH");
  const SpInstance inst = read_instance(instance_path);
  if (!opt.dump_problem.empty()) write_text(opt.dump_problem, problem_to_json(build_extensive_form(inst)).dump(1) + "\n");
  ExactSolveOptions eo;
  if (opt.monolithic) eo.max_enumerated_vars = 0;
  const auto r = solve_instance_exact(inst, cfg.solver.options(), eo);
  Json j = {{"status", mip::to_string(r.status)},
            {"pivots", r.work.simplex_pivots},
            {"nodes", r.work.bnb_nodes}};
  if (r.status == mip::Status::kOptimal) {
    j["vStar"] = r.optimum.value;
    j["x"] = r.optimum.x;
  }
  out << j.dump() << "\n";
  if (r.status != mip::Status::kOptimal) throw std::runtime_error(std::string("solve-ef: ") + mip::to_string(r.status));
  return j;
}

inline fs::path report_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.paths.reports);
  return fs::path(cfg.paths.reports) / name;
}

// Trains on the train split, validating on the validation split. Writes
// checkpoints under paths.checkpoints and metrics.csv under paths.reports.
inline rl::TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  const auto train = instances_of(load_split(cfg.paths.dataset, "train"));
  const auto val = instances_of(load_split(cfg.paths.dataset, "validation"));
  if (train.empty()) throw UsageError("dataset '" + cfg.paths.dataset + "' has no training instances");
  std::ostringstream metrics;
  rl::TrainResult res;
  try {
    res = rl::train(train, val, train_config(cfg), &metrics, to_json(cfg));
  } catch (const rl::TrainingAborted&) {
    write_text(report_path(cfg, "metrics.csv"), metrics.str());
    throw;
  }
  write_text(report_path(cfg, "metrics.csv"), metrics.str());
  log << "trained " << res.updates << " updates";
  if (res.best_validation_error)
    log << "; best validation error " << bench::num(*res.best_validation_error) << "%";
  log << "\n";
  return res;
}

inline nn::PolicyParams load_policy(const RunConfig& cfg, const std::string& checkpoint) {
  if (checkpoint.empty()) throw UsageError("this command needs --checkpoint PATH");
  if (!fs::exists(checkpoint)) throw UsageError("checkpoint '" + checkpoint + "' does not exist");
  return nn::load_checkpoint(checkpoint, &cfg.net);
}

// One report row per (instance, method, seed) over the test split.
inline std::vector<bench::EvalReport> evaluate_methods(const RunConfig& cfg, const std::vector<LoadedInstance>& set,
                                                       const std::vector<std::string>& methods,
                                                       const nn::PolicyParams* policy) {
  const auto solver = cfg.solver.options();
  const bench::EvalOptions eo{solver, cfg.eval.record_wall_time};
  struct Job {
    std::size_t inst;
    std::string method;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (const auto& m : methods)
      for (std::size_t s = 0; s < cfg.eval.seeds; ++s) jobs.push_back({i, m, s});
  // Selections that do not depend on the seed are computed once per instance.
  std::vector<std::optional<ReducedSelection>> policy_sel(set.size()), km_sel(set.size()), vs_sel(set.size());
  std::vector<std::string> vs_err(set.size());
  const auto has = [&](const char* m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  parallel_for(set.size(), cfg.threads, [&](std::size_t i) {
    const SpInstance& inst = set[i].inst;
    const std::size_t k = std::min(cfg.k, inst.num_scenarios());
    if (has("policy")) policy_sel[i] = rl::policy_selection(nn::prepare_instance(inst, policy->cfg), k, *policy);
    if (has("kmedoids")) km_sel[i] = bench::baseline_kmedoids(inst, k);
    if (has("valueSpace")) {
      try {
        vs_sel[i] = bench::baseline_value_space(inst, k, solver);
      } catch (const std::exception& e) {
        vs_err[i] = e.what();
      }
    }
  });
  std::vector<bench::EvalReport> rows(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const SpInstance& inst = set[job.inst].inst;
    const std::uint64_t seed = derive_seed(cfg.seed, job.seed_index);
    const std::size_t k = std::min(cfg.k, inst.num_scenarios());
    bench::EvalReport r;
    std::optional<ReducedSelection> sel;
    if (job.method == "policy")
      sel = policy_sel[job.inst];
    else if (job.method == "random")
      sel = bench::baseline_random(inst.num_scenarios(), k, derive_seed(seed, set[job.inst].id));
    else if (job.method == "kmedoids")
      sel = km_sel[job.inst];
    else
      sel = vs_sel[job.inst];
    if (sel) {
      r = bench::evaluate_selection(inst, *sel, eo);
    } else {
      r.k = k;
      r.v_star = inst.cached_optimum->value;
      r.error = "selection failed: " + vs_err[job.inst];
    }
    r.instance_id = set[job.inst].id;
    r.method = job.method;
    r.seed = seed;
    rows[j] = std::move(r);
  });
  return rows;
}

inline void print_summary(std::ostream& log, const std::vector<bench::EvalReport>& rows) {
  for (const auto& s : bench::summarize(rows)) {
    log << s.method << ": errorPct " << bench::num(s.mean) << " +- " << bench::num(s.stddev) << " over " << s.count
        << " rows";
    if (s.failures) log << " (" << s.failures << " failed)";
    log << "\n";
  }
}

inline std::vector<bench::EvalReport> cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint,
                                                   std::ostream& log) {
  validate(cfg);
  std::optional<nn::PolicyParams> policy;
  const bool needs_policy =
      std::find(cfg.eval.methods.begin(), cfg.eval.methods.end(), "policy") != cfg.eval.methods.end();
  if (needs_policy) policy = load_policy(cfg, checkpoint);
  const auto set = load_split(cfg.paths.dataset, "test");
  if (set.empty()) throw UsageError("dataset '" + cfg.paths.dataset + "' has no test instances");
  const auto rows = evaluate_methods(cfg, set, cfg.eval.methods, policy ? &*policy : nullptr);
  auto os = bench::open_output(report_path(cfg, "evaluation.csv").string());
  bench::write_report_csv(os, rows, config_echo(cfg));
  print_summary(log, rows);
  return rows;
}

inline std::vector<bench::EvalReport> cmd_baselines(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  std::vector<std::string> methods;
  for (const auto& m : cfg.eval.methods)
    if (m != "policy") methods.push_back(m);
  if (methods.empty()) methods = {"random", "kmedoids", "valueSpace"};
  const auto set = load_split(cfg.paths.dataset, "test");
  if (set.empty()) throw UsageError("dataset '" + cfg.paths.dataset + "' has no test instances");
  const auto rows = evaluate_methods(cfg, set, methods, nullptr);
  auto os = bench::open_output(report_path(cfg, "baselines.csv").string());
  bench::write_report_csv(os, rows, config_echo(cfg));
  print_summary(log, rows);
  return rows;
}

struct OrderCdfSummary {
  std::vector<std::size_t> instance_ids;
  std::vector<double> percentiles;
  double mean_percentile = 0.0;
};

// Greedy policy ordering against eval.shuffles seeded permutations per test
// instance. Writes order_cdf.csv (instances x (shuffles + 1) rows) and
// order_percentiles.csv.
inline OrderCdfSummary cmd_order_cdf(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
  validate(cfg);
  const auto policy = load_policy(cfg, checkpoint);
  const auto set = load_split(cfg.paths.dataset, "test");
  if (set.empty()) throw UsageError("dataset '" + cfg.paths.dataset + "' has no test instances");
  const auto solver = cfg.solver.options();
  std::vector<bench::OrderCdfResult> res(set.size());
  // Instances run one after another; each experiment parallelizes over its
  // shuffles.
  for (std::size_t i = 0; i < set.size(); ++i) {
    const SpInstance& inst = set[i].inst;
    const auto sel = rl::policy_selection(nn::prepare_instance(inst, policy.cfg),
                                          std::min(cfg.k, inst.num_scenarios()), policy);
    res[i] = bench::order_cdf_experiment(inst, sel, cfg.eval.shuffles, derive_seed(cfg.seed, set[i].id), solver,
                                         cfg.reward.node_weight, cfg.threads);
  }
  OrderCdfSummary out;
  std::vector<double> model;
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.instance_ids.push_back(set[i].id);
    out.percentiles.push_back(res[i].percentile);
    out.mean_percentile += res[i].percentile;
    model.push_back(res[i].model_time);
    samples.push_back(res[i].samples);
  }
  out.mean_percentile /= static_cast<double>(set.size());
  {
    auto os = bench::open_output(report_path(cfg, "order_cdf.csv").string());
    bench::write_cdf_csv(os, out.instance_ids, model, samples, config_echo(cfg));
  }
  {
    auto os = bench::open_output(report_path(cfg, "order_percentiles.csv").string());
    bench::write_config_line(os, config_echo(cfg));
    os << "instanceId,percentile,modelTime\n";
    for (std::size_t i = 0; i < set.size(); ++i)
      os << out.instance_ids[i] << ',' << bench::num(out.percentiles[i]) << ',' << bench::num(model[i]) << "\n";
  }
  log << "mean percentile " << bench::num(out.mean_percentile) << " over " << set.size() << " instances\n";
  return out;
}

}  // namespace scenred::cli
