#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "fedlab/clustering.hpp"
#include "fedlab/linalg.hpp"

namespace fedlab {

struct LossConfig {
  double alpha = 0.5;
  double tau = 0.07;
  double lambda1 = 1.0;
  double lambda2 = 10.0;
  double phi = 0.5;

  void validate() const;
};

/// Global prototypes keyed by class label. Per-class weights are expected to
/// be normalized when produced by the server.
struct GlobalPrototypes {
  std::map<int, std::vector<WeightedPoint>> by_class;

  bool empty() const;
  std::size_t size() const;
  const std::vector<WeightedPoint>* find(int label) const;
};

/// clamp(cos(z, g), 0, 1)^alpha.
double alpha_similarity(std::span<const double> z, std::span<const double> g, double alpha);

/// Value of alpha_similarity and its gradient with respect to z. The gradient
/// is zero wherever the clamp is active.
double alpha_similarity_grad(std::span<const double> z, std::span<const double> g, double alpha,
                             std::span<double> grad_out);

double loss_ce(std::span<const double> logits, int label);
double loss_ce_batch(std::span<const DenseVec> logits, std::span<const int> labels);

/// Weighted, temperature-scaled contrastive loss against all global prototypes.
double loss_contra(std::span<const double> z, int label, const GlobalPrototypes& protos,
                   const LossConfig& cfg);

/// Number of terms kept by the top-k sum: ceil(phi * n), at least 1.
std::size_t topk_count(std::size_t n, double phi);

/// Indices of the ceil(phi * n) largest values, descending; equal values keep
/// index order.
std::vector<std::size_t> topk_indices(std::span<const double> values, double phi);

/// Negative top-k sum of weighted same-class similarities.
double loss_corr(std::span<const double> z, int label, const GlobalPrototypes& protos,
                 const LossConfig& cfg);

struct LossResult {
  double loss = 0.0;
  double ce = 0.0;
  double contra = 0.0;
  double corr = 0.0;
  DenseVec dloss_dlogits;
  DenseVec dloss_dfeatures;
  bool prototype_terms_evaluated = false;
};

/// L = CE + lambda1 * contra + lambda2 * corr for one sample, with exact
/// gradients with respect to the logits and the features. Prototypes are
/// constants. The prototype terms are skipped (zero loss and feature
/// gradient) when there are no prototypes, when the sample's class has none,
/// when both lambdas are zero, or when z is the zero vector.
LossResult total_loss_and_grads(std::span<const double> z, std::span<const double> logits,
                                int label, const GlobalPrototypes& protos, const LossConfig& cfg);

}  // namespace fedlab
