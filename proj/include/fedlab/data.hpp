#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedlab/linalg.hpp"
#include "fedlab/rng.hpp"

namespace fedlab {

struct LabeledSample {
  DenseVec x;
  int label = 0;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Per-client transform of the shared class-conditional distribution:
/// x = scale * rotation * (mean_y + noise_sigma * eps) + shift.
struct DomainSpec {
  DenseMat rotation;
  double scale = 1.0;
  DenseVec shift;
  double noise_sigma = 1.0;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t clients = 5;
  std::size_t classes = 5;
  std::size_t input_dim = 16;
  std::size_t n_train = 300;
  std::size_t n_test = 200;

  double class_sep = 3.0;          // radius of the sphere holding the class means
  double noise_sigma = 1.0;        // within-class standard deviation before the transform
  double shift_scale = 1.0;        // per-coordinate std of the domain shift
  double scale_jitter = 0.25;      // domain scale drawn from [1 - j, 1 + j]
  double rotation_strength = 1.0;  // 0 = identity, 1 = uniformly random orthogonal
  bool hard_domain = true;         // last client gets extra noise and a scale distortion
  double hard_noise_factor = 1.5;
  double hard_scale = 0.5;

  void validate() const;
};

struct DatasetBundle {
  std::size_t classes = 0;
  std::size_t input_dim = 0;
  std::vector<std::vector<LabeledSample>> train;  // per client
  std::vector<std::vector<LabeledSample>> test;   // per client, own domain
  std::vector<LabeledSample> pooled_test;         // all domains
  std::vector<DomainSpec> domains;                // empty for CSV-loaded data

  std::size_t clients() const { return train.size(); }
  void validate() const;

  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

/// Orthogonal matrix from Gram-Schmidt on (1 - strength) * I + strength * G,
/// G standard Gaussian. strength = 1 gives a Haar-distributed rotation.
DenseMat random_orthogonal(std::size_t n, double strength, SeededRng& rng);

DatasetBundle gen_synthetic(const SyntheticSpec& spec);

/// Comma-separated rows of `input_dim` reals followed by an integer label.
/// Labels must lie in [0, classes).
std::vector<LabeledSample> load_csv(const std::filesystem::path& path, std::size_t input_dim,
                                    std::size_t classes, bool skip_header = false);

void write_csv(const std::filesystem::path& path, std::span<const LabeledSample> samples);

/// Per-class sample counts.
std::vector<std::size_t> class_counts(std::span<const LabeledSample> samples, std::size_t classes);

}  // namespace fedlab
