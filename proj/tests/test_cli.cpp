#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "scenred/cli/commands.hpp"
#include "scenred/cli/config.hpp"

using namespace scenred;
using namespace scenred::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test {
 protected:
  fs::path root;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root = fs::temp_directory_path() / (std::string("scenred_cli_") + info->name());
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  RunConfig tiny(const std::string& sub = "run") const {
    RunConfig c;
    c.problem.facilities = 2;
    c.problem.customers = 3;
    c.problem.scenarios = 4;
    c.dataset = {4, 2, 2};
    c.k = 2;
    c.seed = 5;
    c.reward.alpha = 0.5;
    c.net.low_hidden = c.net.low_out = 6;
    c.net.high_hidden = c.net.embed = 8;
    c.net.heads = 2;
    c.net.critic_hidden = 5;
    c.ppo.env_count = 2;
    c.ppo.minibatch = 2;
    c.ppo.update_epochs = 1;
    c.ppo.epochs = 1;
    c.eval.seeds = 2;
    c.eval.shuffles = 3;
    c.paths.dataset = (root / sub / "data").string();
    c.paths.checkpoints = (root / sub / "ckpt").string();
    c.paths.reports = (root / sub / "reports").string();
    return c;
  }

  fs::path write_config(const RunConfig& c, const std::string& name = "config.json") const {
    const fs::path p = root / name;
    std::ofstream(p) << to_json(c).dump(1);
    return p;
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(SCENRED_CLI_PATH) + " " + args + " > " + (root / "stdout.txt").string() +
                            " 2> " + (root / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
};

}  // namespace

TEST_F(CliTest, ConfigRoundTripsThroughJson) {
  RunConfig c = tiny();
  c.eval.methods = {"random", "policy"};
  c.ppo.clip = 0.3;
  EXPECT_EQ(config_from_json(Json::parse(config_echo(c))), c);
  EXPECT_EQ(load_config(write_config(c).string(), [](const char*) -> const char* { return nullptr; }), c);
}

TEST_F(CliTest, MissingFieldsTakeDefaults) {
  const RunConfig c = config_from_json(Json::parse(R"({"k": 4, "reward": {"alpha": 0.2}})"));
  EXPECT_EQ(c.k, 4u);
  EXPECT_EQ(c.reward.alpha, 0.2);
  EXPECT_EQ(c.ppo.clip, 0.2);
  EXPECT_EQ(c.ppo.lr_actor, 2.5e-4);
}

TEST_F(CliTest, EnvironmentOverridesFileAndFlagsOverrideEnvironment) {
  RunConfig c = tiny();
  c.reward.alpha = 0.3;
  const auto path = write_config(c);
  const std::map<std::string, std::string> env = {
      {"SCENRED_REWARD_ALPHA", "0.25"}, {"SCENRED_PPO_EPOCHS", "7"}, {"SCENRED_PPO_SHUFFLE", "false"}};
  const auto getenv_fn = [&](const char* n) -> const char* {
    const auto it = env.find(n);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const RunConfig loaded = load_config(path.string(), getenv_fn);
  EXPECT_EQ(loaded.reward.alpha, 0.25);
  EXPECT_EQ(loaded.ppo.epochs, 7u);
  EXPECT_FALSE(loaded.ppo.shuffle);
  EXPECT_EQ(loaded.k, 2u);
  EXPECT_EQ(env_name("ppo.lr_actor"), "SCENRED_PPO_LR_ACTOR");

  const std::map<std::string, std::string> bad = {{"SCENRED_K", "three"}};
  EXPECT_THROW(load_config(path.string(),
                           [&](const char* n) -> const char* {
                             const auto it = bad.find(n);
                             return it == bad.end() ? nullptr : it->second.c_str();
                           }),
               UsageError);

  // flag > env through the binary
  const std::string cmd = "SCENRED_K=3 " + std::string(SCENRED_CLI_PATH) + " generate --config " + path.string() +
                          " --k 9 > /dev/null 2> " + (root / "err.txt").string();
  const int rc = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 1);
  EXPECT_NE(slurp(root / "err.txt").find("k=9"), std::string::npos);
}

TEST_F(CliTest, InvalidConfigsRejected) {
  RunConfig c = tiny();
  c.k = 10;
  EXPECT_THROW(validate(c), UsageError);
  c = tiny();
  c.problem.family = "knapsack";
  EXPECT_THROW(validate(c), UsageError);
  c = tiny();
  c.eval.methods = {"oracle"};
  EXPECT_THROW(validate(c), UsageError);
  EXPECT_THROW(config_from_json(Json::array()), UsageError);
}

TEST_F(CliTest, GenerateWritesInstancesAndManifest) {
  const RunConfig c = tiny();
  std::ostringstream log;
  const auto entries = cmd_generate(c, log);
  ASSERT_EQ(entries.size(), 8u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(c.paths.dataset))
    if (e.path().filename().string().rfind("instance_", 0) == 0) ++files;
  EXPECT_EQ(files, 8u);
  const auto manifest = read_manifest(c.paths.dataset);
  ASSERT_EQ(manifest.size(), 8u);
  EXPECT_EQ(manifest[0].split, "train");
  EXPECT_EQ(manifest[4].split, "validation");
  EXPECT_EQ(manifest[7].split, "test");
  for (const auto& e : manifest) EXPECT_EQ(e.status, "ok");
}

TEST_F(CliTest, RegenerationIsByteIdentical) {
  const RunConfig a = tiny("a");
  RunConfig b = tiny("b");
  b.threads = 3;
  b.paths.dataset = (root / "b" / "data").string();
  std::ostringstream log;
  cmd_generate(a, log);
  cmd_generate(a, log);
  cmd_generate(b, log);
  for (const auto& e : fs::directory_iterator(a.paths.dataset)) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(fs::path(b.paths.dataset) / name)) << name;
  }
}

TEST_F(CliTest, ManifestOptimaReproduceThroughSolveEf) {
  const RunConfig c = tiny();
  std::ostringstream log;
  cmd_generate(c, log);
  const auto cfg_path = write_config(c);
  for (const auto& e : read_manifest(c.paths.dataset)) {
    const auto inst = (fs::path(c.paths.dataset) / e.file).string();
    for (const char* extra : {"", " --monolithic"}) {
      ASSERT_EQ(run("solve-ef --config " + cfg_path.string() + " --instance " + inst + extra), 0);
      const Json j = Json::parse(slurp(root / "stdout.txt"));
      EXPECT_EQ(j.at("status").get<std::string>(), "Optimal");
      const double v = j.at("vStar").get<double>();
      EXPECT_NEAR(v, e.v_star, 1e-6 * std::max(1.0, std::abs(e.v_star))) << e.file << extra;
    }
  }
}

TEST_F(CliTest, ZeroEpochsWritesInitialCheckpointOnly) {
  RunConfig c = tiny();
  c.ppo.epochs = 0;
  std::ostringstream log;
  cmd_generate(c, log);
  const auto res = cmd_train(c, log);
  EXPECT_EQ(res.updates, 0u);
  std::vector<std::string> ckpts;
  for (const auto& e : fs::directory_iterator(c.paths.checkpoints)) ckpts.push_back(e.path().filename().string());
  EXPECT_EQ(ckpts, std::vector<std::string>{"initial.json"});
  const std::string metrics = slurp(fs::path(c.paths.reports) / "metrics.csv");
  EXPECT_EQ(count_lines(metrics), 2u);
  EXPECT_EQ(metrics.rfind("# config=", 0), 0u);
  EXPECT_NE(metrics.find(rl::kMetricsHeader), std::string::npos);
}

TEST_F(CliTest, ArtifactConfigLineReparsesToRunConfig) {
  RunConfig c = tiny();
  c.ppo.epochs = 0;
  std::ostringstream log;
  cmd_generate(c, log);
  cmd_train(c, log);
  std::istringstream is(slurp(fs::path(c.paths.reports) / "metrics.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(config_from_json(Json::parse(line.substr(std::string("# config=").size()))), c);
}

TEST_F(CliTest, TrainEvaluateAndOrderCdfRowCounts) {
  RunConfig c = tiny();
  std::ostringstream log;
  cmd_generate(c, log);
  const auto res = cmd_train(c, log);
  EXPECT_EQ(res.updates, 2u);
  const auto final_ckpt = (fs::path(c.paths.checkpoints) / "final.json").string();
  ASSERT_TRUE(fs::exists(final_ckpt));
  EXPECT_TRUE(fs::exists(fs::path(c.paths.checkpoints) / "best.json"));

  const auto rows = cmd_evaluate(c, final_ckpt, log);
  // 2 test instances x 4 methods x 2 seeds
  EXPECT_EQ(rows.size(), 16u);
  const std::string report = slurp(fs::path(c.paths.reports) / "evaluation.csv");
  EXPECT_EQ(count_lines(report), 2u + 16u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.ok()) << r.error;
    EXPECT_GE(r.error_pct, -1e-4);
  }

  const auto cdf = cmd_order_cdf(c, final_ckpt, log);
  EXPECT_EQ(cdf.percentiles.size(), 2u);
  const std::string samples = slurp(fs::path(c.paths.reports) / "order_cdf.csv");
  // config line + header + instances x (shuffles + 1)
  EXPECT_EQ(count_lines(samples), 2u + 2u * (3u + 1u));
}

TEST_F(CliTest, FullSelectionGivesZeroErrorForAllMethods) {
  RunConfig c = tiny();
  c.k = 4;
  c.ppo.epochs = 0;
  std::ostringstream log;
  cmd_generate(c, log);
  cmd_train(c, log);
  const auto rows = cmd_evaluate(c, (fs::path(c.paths.checkpoints) / "initial.json").string(), log);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.ok()) << r.method << ": " << r.error;
    EXPECT_NEAR(r.error_pct, 0.0, 1e-4) << r.method;
  }
}

TEST_F(CliTest, SingletonOrderCdfHasZeroPercentile) {
  RunConfig c = tiny();
  c.k = 1;
  c.eval.shuffles = 1;
  c.ppo.epochs = 0;
  std::ostringstream log;
  cmd_generate(c, log);
  cmd_train(c, log);
  const auto cdf = cmd_order_cdf(c, (fs::path(c.paths.checkpoints) / "initial.json").string(), log);
  for (double p : cdf.percentiles) EXPECT_EQ(p, 0.0);
}

TEST_F(CliTest, CheckpointShapeMismatchNamesParameter) {
  RunConfig c = tiny();
  c.ppo.epochs = 0;
  std::ostringstream log;
  cmd_generate(c, log);
  cmd_train(c, log);
  RunConfig wider = c;
  wider.net.embed = 12;
  try {
    cmd_evaluate(wider, (fs::path(c.paths.checkpoints) / "initial.json").string(), log);
    FAIL() << "expected a shape error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("gcn.W"), std::string::npos) << e.what();
  }
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("generate --config " + (root / "missing.json").string()), 1);
  EXPECT_EQ(run("generate --k 0"), 1);
  EXPECT_EQ(run("evaluate --dataset " + (root / "nowhere").string()), 1);
  // A corrupt instance is a runtime failure.
  std::ofstream(root / "bad.json") << "{\"format\": 1}";
  EXPECT_EQ(run("solve-ef --instance " + (root / "bad.json").string()), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliTest, BinaryGeneratesSameFilesAsLibrary) {
  const RunConfig c = tiny("lib");
  std::ostringstream log;
  cmd_generate(c, log);
  RunConfig d = c;
  d.paths.dataset = (root / "bin" / "data").string();
  ASSERT_EQ(run("generate --config " + write_config(d).string()), 0);
  EXPECT_EQ(slurp(fs::path(c.paths.dataset) / "instance_0003.json"),
            slurp(fs::path(d.paths.dataset) / "instance_0003.json"));
}
