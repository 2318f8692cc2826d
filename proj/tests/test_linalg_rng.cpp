#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fedlab/errors.hpp"
#include "fedlab/linalg.hpp"
#include "fedlab/rng.hpp"

using namespace fedlab;

namespace {

DenseVec random_vec(SeededRng& rng, std::size_t n) {
  DenseVec v(n);
  for (double& e : v) e = rng.normal();
  return v;
}

}  // namespace

TEST(CosineSim, Examples) {
  EXPECT_DOUBLE_EQ(cosine_sim(DenseVec{1, 0}, DenseVec{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(cosine_sim(DenseVec{1, 0}, DenseVec{0, 1}), 0.0);
  EXPECT_NEAR(cosine_sim(DenseVec{1, 1}, DenseVec{1, 0}), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CosineSim, Errors) {
  EXPECT_THROW(cosine_sim(DenseVec{0, 0}, DenseVec{1, 0}), DomainError);
  EXPECT_THROW(cosine_sim(DenseVec{1, 0}, DenseVec{0, 0}), DomainError);
  EXPECT_THROW(cosine_sim(DenseVec{1, 0}, DenseVec{1, 0, 0}), ShapeError);
}

TEST(CosineSim, Properties) {
  SeededRng rng = spawn_rng(7, "cosine-props");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(10);
    const DenseVec a = random_vec(rng, n);
    const DenseVec b = random_vec(rng, n);
    EXPECT_NEAR(cosine_sim(a, a), 1.0, 1e-12);
    EXPECT_EQ(cosine_sim(a, b), cosine_sim(b, a));
    DenseVec scaled = a;
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    for (double& e : scaled) e *= c;
    EXPECT_NEAR(cosine_sim(scaled, b), cosine_sim(a, b), 1e-12);
    const double v = cosine_sim(a, b);
    EXPECT_LE(v, 1.0);
    EXPECT_GE(v, -1.0);
  }
}

TEST(CosineSim, ClampsRoundingOvershoot) {
  // Nearly parallel vectors whose raw ratio can exceed 1 by an ulp.
  const DenseVec a{0.1, 0.2, 0.3};
  const DenseVec b{0.30000000000000004, 0.6000000000000001, 0.9};
  EXPECT_LE(cosine_sim(a, b), 1.0);
}

TEST(Matvec, AgreesWithHandComputation) {
  const DenseMat m(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(matvec(m, DenseVec{1, 0, -1}), (DenseVec{-2, -2}));
  EXPECT_EQ(matvec_transposed(m, DenseVec{1, -1}), (DenseVec{-3, -3, -3}));
  EXPECT_THROW(matvec(m, DenseVec{1, 0}), ShapeError);
  EXPECT_THROW(DenseMat(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(SeededRng, SameSeedAndLabelGiveIdenticalStreams) {
  SeededRng a = spawn_rng(42, "client-0");
  SeededRng b = spawn_rng(42, "client-0");
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(SeededRng, DistinctLabelsOrSeedsDiverge) {
  EXPECT_NE(spawn_rng(42, "client-0").next_u64(), spawn_rng(42, "client-1").next_u64());
  EXPECT_NE(spawn_rng(42, "x").next_u64(), spawn_rng(43, "x").next_u64());
}

TEST(SeededRng, ReferenceStream) {
  // pcg32_srandom(42, 54) reference output from the PCG distribution's demo program.
  SeededRng rng(42, 54);
  const std::uint32_t expected[] = {0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e};
  for (std::uint32_t e : expected) EXPECT_EQ(rng.next_u32(), e);
}

TEST(SeededRng, SpawnIsIndependentOfParentDraws) {
  SeededRng parent = spawn_rng(5, "parent");
  SeededRng child_before = parent.spawn("c");
  SeededRng copy = parent;
  EXPECT_EQ(child_before.next_u64(), copy.spawn("c").next_u64());
  // spawn_rng streams only depend on (seed, label), never on other draws.
  SeededRng x = spawn_rng(9, "a");
  for (int i = 0; i < 17; ++i) x.next_u32();
  EXPECT_EQ(spawn_rng(9, "b").next_u64(), spawn_rng(9, "b").next_u64());
}

TEST(SeededRng, UniformAndIndexRanges) {
  SeededRng rng = spawn_rng(3, "ranges");
  std::set<std::uint32_t> seen;
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7U);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7U);
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
  EXPECT_THROW(rng.uniform_index(0), DomainError);
}

TEST(SeededRng, NormalMoments) {
  SeededRng rng = spawn_rng(11, "normal");
  const int n = 100000;
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  EXPECT_NEAR(m1, 0.0, 0.02);
  EXPECT_NEAR(m2, 1.0, 0.02);
}
