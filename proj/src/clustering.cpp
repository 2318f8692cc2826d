#include "fedlab/clustering.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedlab/errors.hpp"

namespace fedlab {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<std::vector<std::size_t>> Partition::members() const {
  std::vector<std::vector<std::size_t>> out(cluster_count);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

double WeightedPrototypeSet::total_weight() const {
  double s = 0.0;
  for (const auto& p : prototypes) s += p.weight;
  return s;
}

double metric_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (metric == Metric::Cosine) return 1.0 - cosine_sim(a, b);
  if (a.size() != b.size()) throw ShapeError("metric_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::size_t> first_neighbors(std::span<const DenseVec> points, Metric metric) {
  const std::size_t n = points.size();
  if (n == 0) throw DomainError("first_neighbors: no points");
  const std::size_t dim = points.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (points[i].size() != dim) throw ShapeError("first_neighbors: points differ in dimension");
    if (metric == Metric::Cosine && is_zero(points[i])) {
      throw DomainError("first_neighbors: zero vector at index " + std::to_string(i) +
                        " under cosine metric");
    }
  }
  std::vector<std::size_t> nn(n, 0);
  if (n == 1) return nn;

  // Symmetric distances, computed once per pair.
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = metric_distance(points[i], points[j], metric);
      // Strict comparison keeps the lowest index on ties because j and i are
      // visited in increasing order for both endpoints.
      if (d < best[i]) {
        best[i] = d;
        nn[i] = j;
      }
      if (d < best[j]) {
        best[j] = d;
        nn[j] = i;
      }
    }
  }
  return nn;
}

Partition finch_partition(std::span<const DenseVec> points, Metric metric) {
  const auto nn = first_neighbors(points, metric);
  const std::size_t n = nn.size();
  // Linking i to nn(i) suffices: nn(i) = nn(j) puts i and j in the component
  // of their shared neighbour.
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) sets.unite(i, nn[i]);

  Partition part;
  part.assignment.assign(n, 0);
  std::vector<std::size_t> id_of_root(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (id_of_root[root] == std::numeric_limits<std::size_t>::max()) {
      id_of_root[root] = part.cluster_count++;
    }
    part.assignment[i] = id_of_root[root];
  }
  return part;
}

WeightedPrototypeSet finch_star(std::span<const WeightedPoint> points, Metric metric,
                                CentroidMode mode, int class_label) {
  if (points.empty()) throw DomainError("finch_star: no points");
  std::vector<DenseVec> vectors;
  vectors.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.weight > 0.0) || !std::isfinite(p.weight)) {
      throw DomainError("finch_star: point weights must be positive and finite");
    }
    vectors.push_back(p.vector);
  }
  const Partition part = finch_partition(vectors, metric);

  WeightedPrototypeSet out;
  out.class_label = class_label;
  for (const auto& members : part.members()) {
    WeightedPoint proto{DenseVec(vectors.front().size(), 0.0), 0.0};
    double mass = 0.0;
    for (std::size_t idx : members) {
      const double coeff = mode == CentroidMode::Weighted ? points[idx].weight : 1.0;
      axpy(coeff, points[idx].vector, proto.vector);
      mass += coeff;
    }
    for (double& v : proto.vector) v /= mass;
    for (std::size_t idx : members) proto.weight += points[idx].weight;
    out.prototypes.push_back(std::move(proto));
  }
  return out;
}

WeightedPrototypeSet normalize_weights(WeightedPrototypeSet set) {
  if (set.prototypes.empty()) throw DomainError("normalize_weights: empty prototype set");
  const double total = set.total_weight();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DomainError("normalize_weights: total weight must be positive");
  }
  for (auto& p : set.prototypes) p.weight /= total;
  return set;
}

}  // namespace fedlab
