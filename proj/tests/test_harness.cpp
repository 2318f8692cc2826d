#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedlab/config.hpp"
#include "fedlab/errors.hpp"
#include "fedlab/harness.hpp"
#include "fedlab/json_io.hpp"

using namespace fedlab;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_config() {
  return {{"seed", 3},         {"clients", 3},      {"classes", 3},     {"input_dim", 6},
          {"n_train", 30},     {"n_test", 20},      {"hidden", {8}},    {"feature_dim", 4},
          {"rounds", 2},       {"epochs", 1},       {"batch_size", 10}, {"lambda1", 0.5}};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fedlab_test_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" FEDLAB_CLI_PATH "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAndLambdaRatio) {
  const auto cfg = ExperimentConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(cfg.lr, 0.01);
  EXPECT_EQ(cfg.momentum, 0.9);
  EXPECT_EQ(cfg.weight_decay, 1e-5);
  EXPECT_EQ(cfg.loss.alpha, 0.5);
  EXPECT_EQ(cfg.loss.tau, 0.07);
  EXPECT_EQ(cfg.loss.phi, 0.5);
  EXPECT_DOUBLE_EQ(cfg.loss.lambda2, 10.0 * cfg.loss.lambda1);
  EXPECT_EQ(cfg.rounds, 30u);
  EXPECT_EQ(cfg.epochs, 5u);

  const auto scaled = ExperimentConfig::from_json({{"lambda1", 0.3}});
  EXPECT_DOUBLE_EQ(scaled.loss.lambda2, 3.0);
  const auto explicit_l2 = ExperimentConfig::from_json({{"lambda1", 0.3}, {"lambda2", 1.0}});
  EXPECT_DOUBLE_EQ(explicit_l2.loss.lambda2, 1.0);
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    ExperimentConfig::from_json({{"seed", 1}, {"lamda1", 2.0}});
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("lamda1"), std::string::npos) << e.what();
  }
}

TEST(Config, FieldErrorsNameTheField) {
  const std::pair<const char*, nlohmann::json> bad[] = {
      {"phi", 1.5}, {"tau", 0.0}, {"rounds", -1}, {"hidden", "wide"}, {"metric", "manhattan"}, {"seed", 1.5}};
  for (const auto& [key, value] : bad) {
    try {
      ExperimentConfig::from_json({{key, value}});
      ADD_FAILURE() << "accepted " << key << " = " << value.dump();
    } catch (const std::exception& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  }
}

TEST(Config, EchoRoundTrips) {
  const auto cfg = ExperimentConfig::from_json(tiny_config());
  const auto again = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(cfg.to_json(), again.to_json());
}

TEST(Config, AblationFlagSemantics) {
  auto base = ExperimentConfig::from_json({{"lambda1", 2.0}, {"phi", 0.4}});
  auto c = base;
  c.flags.disable_contra = true;
  EXPECT_EQ(c.effective_loss().lambda1, 0.0);
  EXPECT_EQ(c.effective_loss().lambda2, 20.0);
  c = base;
  c.flags.disable_corr = true;
  EXPECT_EQ(c.effective_loss().lambda1, 2.0);
  EXPECT_EQ(c.effective_loss().lambda2, 0.0);
  c = base;
  c.flags.phi_override = 1.0;
  EXPECT_EQ(c.effective_loss().phi, 1.0);
  c = base;
  c.flags.unit_weights = true;
  c.flags.unweighted_centroids = true;
  c.flags.metric = Metric::Euclidean;
  const auto data = c.load_data();
  const auto tc = c.training_config(data, 1);
  EXPECT_TRUE(tc.protocol.unit_weights);
  EXPECT_EQ(tc.protocol.centroids, CentroidMode::Unweighted);
  EXPECT_EQ(tc.protocol.metric, Metric::Euclidean);
}

TEST(Config, KeyListCoversEcho) {
  const auto echo = ExperimentConfig{}.to_json();
  const auto& keys = config_keys();
  for (const auto& [k, v] : echo.items()) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
}

TEST(AblationVariants, SevenRowsBaselineFirstFullLast) {
  const auto& v = ablation_variants();
  ASSERT_EQ(v.size(), 7u);
  EXPECT_EQ(v.front().name, "fedavg");
  EXPECT_EQ(v.back().name, "full");
  ExperimentConfig base = ExperimentConfig::from_json({{"lambda1", 1.0}});
  for (const auto& variant : v) {
    ExperimentConfig c = base;
    variant.apply(c);
    const LossConfig l = c.effective_loss();
    EXPECT_EQ(l.lambda1 > 0.0, variant.contra != "w/o") << variant.name;
    EXPECT_EQ(l.lambda2 > 0.0, variant.corr != "w/o") << variant.name;
    if (variant.corr == "phi=1") EXPECT_EQ(l.phi, 1.0) << variant.name;
    EXPECT_EQ(c.flags.unit_weights, variant.corr == "w=1") << variant.name;
  }
}

TEST(RunExperiment, WritesMetricsAndSummary) {
  const auto dir = fresh_dir("run");
  const auto cfg = ExperimentConfig::from_json(tiny_config());
  run_experiment(cfg, dir);
  const auto rows = lines(dir / "metrics.csv");
  ASSERT_EQ(rows.size(), 1u + cfg.rounds + 1u);
  EXPECT_EQ(rows[0], "round,acc_client_0,acc_client_1,acc_client_2,acc_avg,delta,seconds");
  EXPECT_EQ(rows[1].substr(0, 2), "0,");

  const auto summary = read_json_file(dir / "summary.json");
  EXPECT_EQ(summary["final_round"], 2);
  const auto acc = summary["client_accuracy"].get<std::vector<double>>();
  ASSERT_EQ(acc.size(), 3u);
  EXPECT_NEAR(summary["average_accuracy"].get<double>(), (acc[0] + acc[1] + acc[2]) / 3.0, 1e-12);
  EXPECT_EQ(summary["config"], cfg.to_json());
  EXPECT_TRUE(summary.contains("build"));
  EXPECT_FALSE(fs::exists(dir / "checkpoint.json"));
}

TEST(RunExperiment, CheckpointReloadsAsInitialModel) {
  auto j = tiny_config();
  j["save_checkpoint"] = true;
  const auto a = fresh_dir("ckpt_a");
  run_experiment(ExperimentConfig::from_json(j), a);
  ASSERT_TRUE(fs::exists(a / "checkpoint.json"));
  j.erase("save_checkpoint");
  j["rounds"] = 0;
  j["init_checkpoint"] = (a / "checkpoint.json").string();
  const auto b = fresh_dir("ckpt_b");
  const auto out = run_experiment(ExperimentConfig::from_json(j), b);
  EXPECT_EQ(out.run.server.global.flatten(),
            model_from_json(read_json_file(a / "checkpoint.json")).flatten());
}

TEST(RunExperiment, BaselineFillsDelta) {
  const auto base_dir = fresh_dir("delta_base");
  run_experiment(ExperimentConfig::from_json(tiny_config()), base_dir);
  auto j = tiny_config();
  j["baseline_metrics"] = (base_dir / "metrics.csv").string();
  const auto dir = fresh_dir("delta_self");
  const auto out = run_experiment(ExperimentConfig::from_json(j), dir);
  for (const auto& row : out.run.metrics) {
    ASSERT_TRUE(row.delta.has_value());
    EXPECT_EQ(*row.delta, 0.0);
  }
}

TEST(RunExperiment, CsvDataMatchesSyntheticRun) {
  const auto data_dir = fresh_dir("csv_data");
  const auto cfg = ExperimentConfig::from_json(tiny_config());
  gen_data(cfg, data_dir);
  auto j = tiny_config();
  j["train_csv"] = nlohmann::json::array();
  j["test_csv"] = nlohmann::json::array();
  for (int k = 0; k < 3; ++k) {
    j["train_csv"].push_back((data_dir / ("client_" + std::to_string(k) + "_train.csv")).string());
    j["test_csv"].push_back((data_dir / ("client_" + std::to_string(k) + "_test.csv")).string());
  }
  const auto a = fresh_dir("csv_synth");
  const auto b = fresh_dir("csv_file");
  run_experiment(cfg, a);
  run_experiment(ExperimentConfig::from_json(j), b);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(AblationSuite, SevenRowsAndZeroBaselineDelta) {
  const auto dir = fresh_dir("ablate");
  auto j = tiny_config();
  j["rounds"] = 1;
  const auto rows = ablation_suite(ExperimentConfig::from_json(j), 2, dir);
  ASSERT_EQ(rows.size(), 7u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.cells.size(), 2u);
    for (const auto& c : r.cells) EXPECT_TRUE(c.error.empty()) << c.error;
  }
  ASSERT_TRUE(rows[0].delta.has_value());
  EXPECT_EQ(*rows[0].delta, 0.0);
  const auto csv = lines(dir / "ablation.csv");
  ASSERT_EQ(csv.size(), 8u);
  EXPECT_EQ(csv[0], "variant,contra,corr,acc_seed_3,acc_seed_4,acc_avg_mean,delta,errors");
  EXPECT_EQ(csv[1].substr(0, 15), "fedavg,w/o,w/o,");
  EXPECT_TRUE(fs::exists(dir / "full_seed4" / "metrics.csv"));
}

TEST(Sweep, OneRowPerValue) {
  const auto dir = fresh_dir("sweep");
  auto j = tiny_config();
  j["rounds"] = 1;
  const std::vector<std::string> values{"0.07", "0.55"};
  const auto points = sweep(j, "tau", values, dir);
  ASSERT_EQ(points.size(), 2u);
  for (const auto& p : points) EXPECT_TRUE(p.final_average.has_value()) << p.error;
  EXPECT_EQ(lines(dir / "sweep.csv").size(), 3u);
  EXPECT_THROW(sweep(j, "nonsense", values, dir), FormatError);
}

TEST(Cli, RerunIsByteIdenticalAcrossThreadCounts) {
  const auto dir = fresh_dir("cli");
  const auto cfg_path = dir / "cfg.json";
  std::ofstream(cfg_path) << tiny_config().dump();
  ASSERT_EQ(run_cli("run --config " + cfg_path.string() + " --out " + (dir / "a").string(), "FEDLAB_THREADS=1"), 0);
  ASSERT_EQ(run_cli("run --config " + cfg_path.string() + " --out " + (dir / "b").string(), "FEDLAB_THREADS=1"), 0);
  ASSERT_EQ(run_cli("run --config " + cfg_path.string() + " --out " + (dir / "c").string(), "FEDLAB_THREADS=4"), 0);
  const auto a = slurp(dir / "a" / "metrics.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "metrics.csv"));
  EXPECT_EQ(a, slurp(dir / "c" / "metrics.csv"));
}

TEST(Cli, InvalidConfigFailsWithNonZeroExit) {
  const auto dir = fresh_dir("cli_bad");
  std::ofstream(dir / "bad.json") << R"({"seed": 1, "bogus": true})";
  EXPECT_NE(run_cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()), 0);
  EXPECT_NE(run_cli("run --config " + (dir / "missing.json").string()), 0);
  EXPECT_NE(run_cli("run --config " + (dir / "bad.json").string(), "FEDLAB_THREADS=zero"), 0);
}

TEST(Cli, GenDataWritesClientFiles) {
  const auto dir = fresh_dir("cli_gen");
  std::ofstream(dir / "cfg.json") << tiny_config().dump();
  ASSERT_EQ(run_cli("gen-data --config " + (dir / "cfg.json").string() + " --out " + (dir / "data").string()), 0);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(lines(dir / "data" / ("client_" + std::to_string(k) + "_train.csv")).size(), 30u);
    EXPECT_EQ(lines(dir / "data" / ("client_" + std::to_string(k) + "_test.csv")).size(), 20u);
  }
  EXPECT_EQ(lines(dir / "data" / "pooled_test.csv").size(), 60u);
}
