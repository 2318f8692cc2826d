#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedlab/linalg.hpp"

namespace fedlab {

enum class Metric { Cosine, Euclidean };

enum class CentroidMode { Weighted, Unweighted };

struct WeightedPoint {
  DenseVec vector;
  double weight = 1.0;
};

/// Cluster assignment; ids are contiguous from 0 and numbered by first appearance.
struct Partition {
  std::vector<std::size_t> assignment;
  std::size_t cluster_count = 0;

  std::size_t size() const { return assignment.size(); }
  std::vector<std::vector<std::size_t>> members() const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct WeightedPrototypeSet {
  int class_label = 0;
  std::vector<WeightedPoint> prototypes;

  double total_weight() const;
};

/// Distance used for nearest-neighbour search: 1 - cos(a, b) or ||a - b||.
double metric_distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Index of each point's first nearest neighbour (self excluded, ties to the
/// lowest index). A single point is its own neighbour.
std::vector<std::size_t> first_neighbors(std::span<const DenseVec> points, Metric metric);

/// First (finest) FINCH partition: i and j are linked when nn(i) = j, nn(j) = i
/// or nn(i) = nn(j); clusters are the connected components.
Partition finch_partition(std::span<const DenseVec> points, Metric metric);

/// Weighted FINCH: cluster the vectors, sum member weights per cluster, and
/// take the (weighted or plain) member mean as the prototype vector.
/// Weights are not normalized.
WeightedPrototypeSet finch_star(std::span<const WeightedPoint> points, Metric metric,
                                CentroidMode mode = CentroidMode::Weighted, int class_label = 0);

/// Divide every weight by the set total.
WeightedPrototypeSet normalize_weights(WeightedPrototypeSet set);

}  // namespace fedlab
