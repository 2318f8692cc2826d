#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedlab/data.hpp"
#include "fedlab/federation.hpp"

namespace fedlab {

struct AblationFlags {
  bool disable_contra = false;        // lambda1 forced to 0
  bool disable_corr = false;          // lambda2 forced to 0
  bool unit_weights = false;          // every global prototype weight set to 1 before normalizing
  std::optional<double> phi_override;
  bool unweighted_centroids = false;
  Metric metric = Metric::Cosine;
};

/// Flat JSON experiment description. Every key is optional; unknown keys are
/// rejected. See README for the schema.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  SyntheticSpec synthetic;
  std::vector<std::string> train_csv;  // one file per client; overrides the synthetic generator
  std::vector<std::string> test_csv;
  bool csv_header = false;

  std::vector<std::size_t> hidden{64};
  std::size_t feature_dim = 32;

  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-5;

  std::size_t rounds = 30;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;

  LossConfig loss;
  AblationFlags flags;

  bool record_wall_time = false;
  std::string transport_dir;
  std::string baseline_metrics;
  bool save_checkpoint = false;
  std::string init_checkpoint;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  void validate() const;
  /// Loss settings after the ablation flags are applied.
  LossConfig effective_loss() const;
  DatasetBundle load_data() const;
  TrainingConfig training_config(const DatasetBundle& data, std::size_t threads) const;
};

/// Names of all accepted config keys.
const std::vector<std::string>& config_keys();

/// Thread cap from FEDLAB_THREADS (default 1).
std::size_t threads_from_env();

}  // namespace fedlab
