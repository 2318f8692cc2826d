#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fedlab/clustering.hpp"
#include "fedlab/errors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fedlab;
using namespace fedlab::testing;

namespace {

std::vector<DenseVec> random_points(SeededRng& rng, std::size_t n, std::size_t dim, bool grid) {
  std::vector<DenseVec> pts;
  for (std::size_t i = 0; i < n; ++i) {
    DenseVec v(dim);
    for (double& e : v) e = grid ? static_cast<double>(rng.uniform_index(4)) + 1.0 : rng.uniform(-1.0, 1.0);
    pts.push_back(v);
  }
  return pts;
}

std::vector<WeightedPoint> random_weighted(SeededRng& rng, std::size_t n, std::size_t dim) {
  std::vector<WeightedPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({random_vec(rng, dim), rng.uniform(0.1, 5.0)});
  return pts;
}

void expect_vec_near(const DenseVec& a, const DenseVec& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol);
}

}  // namespace

TEST(FinchPartition, SinglePoint) {
  const std::vector<DenseVec> pts{{1.0, 2.0}};
  const Partition p = finch_partition(pts, Metric::Cosine);
  EXPECT_EQ(p.cluster_count, 1u);
  EXPECT_EQ(p.assignment, (std::vector<std::size_t>{0}));
}

TEST(FinchPartition, TwoPointsMerge) {
  const std::vector<DenseVec> pts{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_EQ(finch_partition(pts, Metric::Cosine).cluster_count, 1u);
  EXPECT_EQ(finch_partition(pts, Metric::Euclidean).cluster_count, 1u);
}

TEST(FinchPartition, TwoTightPairs) {
  const std::vector<DenseVec> pts{{0.0, 0.0}, {0.0, 0.1}, {10.0, 10.0}, {10.0, 10.1}};
  const Partition p = finch_partition(pts, Metric::Euclidean);
  EXPECT_EQ(p.cluster_count, 2u);
  EXPECT_EQ(p.assignment, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_EQ(p, oracle_partition(pts, Metric::Euclidean));
}

TEST(FinchPartition, NearestNeighborTieGoesToLowestIndex) {
  const std::vector<DenseVec> pts{{0.0}, {1.0}, {2.0}};
  EXPECT_EQ(first_neighbors(pts, Metric::Euclidean), (std::vector<std::size_t>{1, 0, 1}));
}

TEST(FinchPartition, ZeroVectorUnderCosineIsDomainError) {
  const std::vector<DenseVec> pts{{1.0, 0.0}, {0.0, 0.0}};
  EXPECT_THROW(finch_partition(pts, Metric::Cosine), DomainError);
  EXPECT_NO_THROW(finch_partition(pts, Metric::Euclidean));
}

TEST(FinchPartition, EmptyAndRaggedInputs) {
  EXPECT_THROW(finch_partition(std::vector<DenseVec>{}, Metric::Euclidean), DomainError);
  const std::vector<DenseVec> ragged{{1.0, 0.0}, {1.0}};
  EXPECT_THROW(finch_partition(ragged, Metric::Euclidean), ShapeError);
}

TEST(FinchPartition, MatchesBruteForceOracle) {
  SeededRng rng = spawn_rng(7, "finch-oracle");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const std::size_t dim = 1 + rng.uniform_index(8);
    const bool grid = trial % 4 == 3;
    const auto pts = random_points(rng, n, dim, grid);
    for (Metric m : {Metric::Cosine, Metric::Euclidean}) {
      EXPECT_EQ(finch_partition(pts, m), oracle_partition(pts, m)) << "trial " << trial;
    }
  }
}

TEST(FinchPartition, InvariantsHold) {
  SeededRng rng = spawn_rng(8, "finch-inv");
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_points(rng, 1 + rng.uniform_index(30), 3, false);
    const Partition p = finch_partition(pts, Metric::Cosine);
    ASSERT_EQ(p.size(), pts.size());
    std::vector<std::size_t> sizes(p.cluster_count, 0);
    for (std::size_t a : p.assignment) {
      ASSERT_LT(a, p.cluster_count);
      ++sizes[a];
    }
    // Every point has a partner in the first partition, except a lone point.
    for (std::size_t s : sizes) EXPECT_GE(s, pts.size() > 1 ? 2u : 1u);
  }
}

TEST(FinchStar, UnitWeightsSingleClusterGivesMean) {
  const std::vector<WeightedPoint> pts{{{1.0, 0.0}}, {{0.0, 1.0}}};
  const auto s = finch_star(pts, Metric::Cosine);
  ASSERT_EQ(s.prototypes.size(), 1u);
  expect_vec_near(s.prototypes[0].vector, {0.5, 0.5}, 1e-15);
  EXPECT_DOUBLE_EQ(s.prototypes[0].weight, 2.0);
}

TEST(FinchStar, WeightedPairMean) {
  const DenseVec v1{1.0, 2.0, 3.0};
  const DenseVec v2{-1.0, 4.0, 0.5};
  const std::vector<WeightedPoint> pts{{v1, 2.0}, {v2, 6.0}};
  const auto s = finch_star(pts, Metric::Euclidean);
  ASSERT_EQ(s.prototypes.size(), 1u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.prototypes[0].vector[i], (2 * v1[i] + 6 * v2[i]) / 8, 1e-15);
  EXPECT_DOUBLE_EQ(s.prototypes[0].weight, 8.0);
}

TEST(FinchStar, UnweightedModeIgnoresWeights) {
  const std::vector<WeightedPoint> pts{{{2.0, 0.0}, 1.0}, {{0.0, 2.0}, 3.0}};
  const auto s = finch_star(pts, Metric::Cosine, CentroidMode::Unweighted, 4);
  EXPECT_EQ(s.class_label, 4);
  expect_vec_near(s.prototypes[0].vector, {1.0, 1.0}, 1e-15);
  EXPECT_DOUBLE_EQ(s.prototypes[0].weight, 4.0);
}

TEST(FinchStar, DuplicatesMerge) {
  const std::vector<WeightedPoint> pts{{{0.3, 0.7}}, {{0.3, 0.7}}};
  const auto s = finch_star(pts, Metric::Cosine);
  ASSERT_EQ(s.prototypes.size(), 1u);
  EXPECT_DOUBLE_EQ(s.prototypes[0].weight, 2.0);
}

TEST(FinchStar, NonPositiveWeightRejected) {
  const std::vector<WeightedPoint> pts{{{1.0}, 1.0}, {{2.0}, 0.0}};
  EXPECT_THROW(finch_star(pts, Metric::Euclidean), DomainError);
}

TEST(FinchStar, WeightConservation) {
  SeededRng rng = spawn_rng(9, "conserve");
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_weighted(rng, 1 + rng.uniform_index(20), 1 + rng.uniform_index(8));
    double in = 0.0;
    for (const auto& p : pts) in += p.weight;
    const auto s = finch_star(pts, trial % 2 ? Metric::Cosine : Metric::Euclidean);
    EXPECT_NEAR(s.total_weight(), in, 1e-9 * in);
    EXPECT_NEAR(normalize_weights(s).total_weight(), 1.0, 1e-9);
  }
}

TEST(FinchStar, UnitWeightsEqualPlainClusterMeans) {
  SeededRng rng = spawn_rng(10, "unit");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.uniform_index(8);
    const auto vecs = random_points(rng, 1 + rng.uniform_index(15), dim, false);
    std::vector<WeightedPoint> pts;
    for (const auto& v : vecs) pts.push_back({v, 1.0});
    const Partition part = oracle_partition(vecs, Metric::Cosine);
    const auto s = finch_star(pts, Metric::Cosine);
    ASSERT_EQ(s.prototypes.size(), part.cluster_count);
    const auto members = part.members();
    for (std::size_t c = 0; c < part.cluster_count; ++c) {
      DenseVec mean(dim, 0.0);
      for (std::size_t i : members[c]) {
        for (std::size_t d = 0; d < dim; ++d) mean[d] += vecs[i][d];
      }
      for (double& e : mean) e /= static_cast<double>(members[c].size());
      expect_vec_near(s.prototypes[c].vector, mean, 1e-9);
      EXPECT_DOUBLE_EQ(s.prototypes[c].weight, static_cast<double>(members[c].size()));
    }
  }
}

TEST(FinchStar, PermutationEquivariant) {
  SeededRng rng = spawn_rng(11, "perm");
  auto canonical = [](const WeightedPrototypeSet& s) {
    std::vector<std::vector<double>> rows;
    for (const auto& p : s.prototypes) {
      auto r = p.vector;
      r.push_back(p.weight);
      rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = random_weighted(rng, 2 + rng.uniform_index(12), 3);
    const auto a = canonical(finch_star(pts, Metric::Cosine));
    for (std::size_t i = pts.size() - 1; i > 0; --i) std::swap(pts[i], pts[rng.uniform_index(static_cast<std::uint32_t>(i + 1))]);
    const auto b = canonical(finch_star(pts, Metric::Cosine));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
      for (std::size_t k = 0; k < a[r].size(); ++k) EXPECT_NEAR(a[r][k], b[r][k], 1e-9);
    }
  }
}

TEST(NormalizeWeights, Examples) {
  WeightedPrototypeSet s;
  s.prototypes = {{{1.0}, 2.0}, {{2.0}, 3.0}, {{3.0}, 5.0}};
  const auto n = normalize_weights(s);
  EXPECT_DOUBLE_EQ(n.prototypes[0].weight, 0.2);
  EXPECT_DOUBLE_EQ(n.prototypes[1].weight, 0.3);
  EXPECT_DOUBLE_EQ(n.prototypes[2].weight, 0.5);

  WeightedPrototypeSet one;
  one.prototypes = {{{1.0}, 7.0}};
  EXPECT_DOUBLE_EQ(normalize_weights(one).prototypes[0].weight, 1.0);
}

TEST(NormalizeWeights, DegenerateTotalsRejected) {
  WeightedPrototypeSet zero;
  zero.prototypes = {{{1.0}, 0.0}, {{2.0}, 0.0}};
  EXPECT_THROW(normalize_weights(zero), DomainError);
  EXPECT_THROW(normalize_weights(WeightedPrototypeSet{}), DomainError);
}

TEST(NormalizeWeights, Idempotent) {
  SeededRng rng = spawn_rng(12, "idem");
  for (int trial = 0; trial < 50; ++trial) {
    WeightedPrototypeSet s;
    s.prototypes = random_weighted(rng, 1 + rng.uniform_index(10), 2);
    const auto once = normalize_weights(s);
    const auto twice = normalize_weights(once);
    for (std::size_t i = 0; i < once.prototypes.size(); ++i) {
      EXPECT_NEAR(once.prototypes[i].weight, twice.prototypes[i].weight, 1e-15);
      EXPECT_EQ(once.prototypes[i].vector, twice.prototypes[i].vector);
    }
  }
}
