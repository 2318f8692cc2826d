// fedlab: command-line driver for federated prototype-learning experiments.
//
//   fedlab run     --config cfg.json [--out dir]
//   fedlab ablate  --config cfg.json --seeds 3 [--out dir]
//   fedlab sweep   --config cfg.json --param tau --values 0.07,0.55 [--out dir]
//   fedlab gen-data --config cfg.json --out dir
//
// FEDLAB_THREADS caps the number of worker threads.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedlab/config.hpp"
#include "fedlab/harness.hpp"
#include "fedlab/json_io.hpp"

namespace {

void print_ablation(const std::vector<fedlab::AblationRow>& rows) {
  std::printf("%-16s %-6s %-6s %10s %10s\n", "variant", "contra", "corr", "avg", "delta");
  for (const auto& r : rows) {
    std::printf("%-16s %-6s %-6s %10s %10s\n", r.variant.name.c_str(), r.variant.contra.c_str(),
                r.variant.corr.c_str(),
                r.mean_average ? std::to_string(100.0 * *r.mean_average).c_str() : "error",
                r.delta ? std::to_string(100.0 * *r.delta).c_str() : "-");
    for (const auto& c : r.cells) {
      if (!c.error.empty()) std::fprintf(stderr, "  seed %llu: %s\n", static_cast<unsigned long long>(c.seed), c.error.c_str());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated prototype learning with weighted clustered prototypes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::size_t seeds = 3;
  std::string param;
  std::vector<std::string> values;

  auto* run = app.add_subcommand("run", "Train once and write metrics.csv and summary.json");
  run->add_option("--config", config_path, "Experiment config (flat JSON)")->required();
  run->add_option("--out", out_dir, "Output directory");

  auto* ablate = app.add_subcommand("ablate", "Run the seven loss-component variants over several seeds");
  ablate->add_option("--config", config_path, "Base experiment config")->required();
  ablate->add_option("--seeds", seeds, "Seeds per variant")->check(CLI::PositiveNumber);
  ablate->add_option("--out", out_dir, "Output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "Re-run a config over values of one parameter");
  sweep_cmd->add_option("--config", config_path, "Base experiment config")->required();
  sweep_cmd->add_option("--param", param, "Config key to vary")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  auto* gen = app.add_subcommand("gen-data", "Write the configured dataset as CSV files");
  gen->add_option("--config", config_path, "Experiment config")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::size_t threads = fedlab::threads_from_env();
    if (*run) {
      const auto cfg = fedlab::ExperimentConfig::from_file(config_path);
      const auto outcome = fedlab::run_experiment(cfg, out_dir, threads);
      const auto& last = outcome.run.metrics.back();
      std::printf("round %d  avg accuracy %.4f  ->  %s\n", last.round, last.average_accuracy, out_dir.c_str());
    } else if (*ablate) {
      const auto cfg = fedlab::ExperimentConfig::from_file(config_path);
      const auto rows = fedlab::ablation_suite(cfg, seeds, out_dir, threads);
      print_ablation(rows);
      for (const auto& r : rows) {
        if (!r.mean_average) return 3;
      }
    } else if (*sweep_cmd) {
      const auto points = fedlab::sweep(fedlab::read_json_file(config_path), param, values, out_dir, threads);
      bool ok = true;
      for (const auto& p : points) {
        if (p.final_average) {
          std::printf("%s=%s  avg accuracy %.4f\n", param.c_str(), p.value.c_str(), *p.final_average);
        } else {
          std::fprintf(stderr, "%s=%s  failed: %s\n", param.c_str(), p.value.c_str(), p.error.c_str());
          ok = false;
        }
      }
      if (!ok) return 3;
    } else if (*gen) {
      fedlab::gen_data(fedlab::ExperimentConfig::from_file(config_path), out_dir);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
