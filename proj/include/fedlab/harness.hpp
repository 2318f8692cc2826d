#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedlab/config.hpp"
#include "fedlab/federation.hpp"

namespace fedlab {

/// Build identifier baked in at configure time (git describe).
std::string build_describe();

/// metrics.csv: round, acc_client_0..K-1, acc_avg, delta, seconds.
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows,
                       std::size_t clients);
/// acc_avg column of a metrics.csv, indexed by row order.
std::vector<double> read_average_accuracy(const std::filesystem::path& path);

/// Fills MetricsRow::delta from a baseline average-accuracy series (same round index).
void apply_baseline(std::vector<MetricsRow>& rows, std::span<const double> baseline_avg);

struct ExperimentOutcome {
  RunResult run;
  std::filesystem::path out_dir;
};

/// Trains, then writes metrics.csv, summary.json and (optionally) checkpoint.json into out_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 std::size_t threads = 1);

struct AblationVariant {
  std::string name;
  std::string contra;  // column labels as in the ablation table
  std::string corr;
  std::function<void(ExperimentConfig&)> apply;
};

/// The seven loss-component configurations, baseline ({w/o, w/o}) first and
/// the full method last.
const std::vector<AblationVariant>& ablation_variants();

struct AblationCell {
  std::uint64_t seed = 0;
  std::optional<double> final_average;
  std::string error;
};

struct AblationRow {
  AblationVariant variant;
  std::vector<AblationCell> cells;
  std::optional<double> mean_average;
  std::optional<double> delta;  // vs. the baseline row's mean
};

/// Runs every variant for seeds base.seed, base.seed + 1, ... and writes
/// ablation.csv plus one run directory per cell under out_dir. Cells run in
/// parallel up to `threads`; a failing cell is recorded and the suite continues.
std::vector<AblationRow> ablation_suite(const ExperimentConfig& base, std::size_t n_seeds,
                                        const std::filesystem::path& out_dir, std::size_t threads = 1);

struct SweepPoint {
  std::string value;
  std::optional<double> final_average;
  std::string error;
};

/// Re-runs the raw config with `param` overridden by each value (JSON literals)
/// and writes sweep.csv.
std::vector<SweepPoint> sweep(const nlohmann::json& base_config, const std::string& param,
                              std::span<const std::string> values, const std::filesystem::path& out_dir,
                              std::size_t threads = 1);

/// Writes client_<k>_train.csv / client_<k>_test.csv for the configured data.
void gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace fedlab
