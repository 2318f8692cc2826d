#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedlab/linalg.hpp"
#include "fedlab/rng.hpp"

namespace fedlab {

struct ModelDims {
  std::size_t input = 0;                // V
  std::vector<std::size_t> hidden;      // hidden widths of the extractor
  std::size_t feature = 0;              // D
  std::size_t classes = 0;              // M

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// One affine layer: out = weight * in + bias, weight is (out x in).
struct DenseLayer {
  DenseMat weight;
  DenseVec bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feature extractor h (rectified affine layers, including the last one) and
/// linear classifier f. The same layout also stores gradients and optimizer
/// velocity.
struct ModelParams {
  ModelDims dims;
  std::vector<DenseLayer> extractor;
  DenseLayer classifier;

  /// Zero-filled parameters with the layer shapes implied by dims.
  static ModelParams zeros(const ModelDims& dims);
  /// Fan-in scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static ModelParams init(const ModelDims& dims, SeededRng& rng);

  std::size_t parameter_count() const;
  bool same_shape(const ModelParams& other) const;

  /// Apply fn(span<double>) to every tensor, extractor layers first, weight before bias.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& layer : extractor) {
      fn(layer.weight.flat());
      fn(std::span<double>(layer.bias));
    }
    fn(classifier.weight.flat());
    fn(std::span<double>(classifier.bias));
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    for (const auto& layer : extractor) {
      fn(layer.weight.flat());
      fn(std::span<const double>(layer.bias));
    }
    fn(classifier.weight.flat());
    fn(std::span<const double>(classifier.bias));
  }

  /// All parameters flattened in for_each_tensor order.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Gradients = ModelParams;

void validate_dims(const ModelDims& dims);

/// Per-sample activation record needed by backward.
struct ForwardCache {
  std::vector<DenseVec> layer_inputs;  // input to each extractor layer
  std::vector<DenseVec> pre_activations;
};

struct ForwardResult {
  DenseVec features;
  DenseVec logits;
  ForwardCache cache;
};

ForwardResult forward(const ModelParams& params, std::span<const double> x);

/// Adds the parameter gradient of one sample into grads. The feature-level
/// upstream gradient is summed with the classifier's backpropagated gradient
/// before entering the extractor.
void accumulate_backward(const ModelParams& params, const ForwardResult& fwd,
                         std::span<const double> dloss_dlogits,
                         std::span<const double> dloss_dfeatures, Gradients& grads);

Gradients backward(const ModelParams& params, const ForwardResult& fwd,
                   std::span<const double> dloss_dlogits,
                   std::span<const double> dloss_dfeatures);

/// SGD with momentum; weight decay is folded into the gradient first:
///   v <- momentum * v + g + weight_decay * w
///   w <- w - lr * v
struct SgdState {
  Gradients velocity;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-5;

  static SgdState for_params(const ModelParams& params, double lr, double momentum,
                             double weight_decay);
};

void sgd_step(ModelParams& params, const Gradients& grads, SgdState& state);

/// Entrywise sum of counts[k] / sum(counts) * models[k].
ModelParams average_models(std::span<const ModelParams> models,
                           std::span<const std::size_t> counts);

std::size_t argmax(std::span<const double> values);

}  // namespace fedlab
