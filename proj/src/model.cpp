#include "fedlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedlab/errors.hpp"

namespace fedlab {

void validate_dims(const ModelDims& dims) {
  if (dims.input == 0 || dims.feature == 0 || dims.classes == 0) {
    throw DomainError("model dims: input, feature and class sizes must be positive");
  }
  if (std::find(dims.hidden.begin(), dims.hidden.end(), 0U) != dims.hidden.end()) {
    throw DomainError("model dims: hidden widths must be positive");
  }
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  validate_dims(dims);
  ModelParams p;
  p.dims = dims;
  std::size_t in = dims.input;
  auto add_layer = [&](std::size_t out) {
    p.extractor.push_back(DenseLayer{DenseMat(out, in), DenseVec(out, 0.0)});
    in = out;
  };
  for (std::size_t width : dims.hidden) add_layer(width);
  add_layer(dims.feature);
  p.classifier = DenseLayer{DenseMat(dims.classes, dims.feature), DenseVec(dims.classes, 0.0)};
  return p;
}

ModelParams ModelParams::init(const ModelDims& dims, SeededRng& rng) {
  ModelParams p = zeros(dims);
  auto fill = [&rng](DenseLayer& layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (double& w : layer.weight.flat()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  };
  for (auto& layer : p.extractor) fill(layer);
  fill(p.classifier);
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&n](std::span<const double> t) { n += t.size(); });
  return n;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  if (extractor.size() != other.extractor.size()) return false;
  auto layer_match = [](const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.bias.size() == b.bias.size();
  };
  for (std::size_t i = 0; i < extractor.size(); ++i) {
    if (!layer_match(extractor[i], other.extractor[i])) return false;
  }
  return layer_match(classifier, other.classifier);
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for_each_tensor([&out](std::span<const double> t) { out.insert(out.end(), t.begin(), t.end()); });
  return out;
}

void ModelParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ShapeError("assign_flat: wrong parameter count");
  std::size_t offset = 0;
  for_each_tensor([&](std::span<double> t) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
    offset += t.size();
  });
}

ForwardResult forward(const ModelParams& params, std::span<const double> x) {
  if (x.size() != params.dims.input) {
    throw ShapeError("forward: input has " + std::to_string(x.size()) + " entries, model expects " +
                     std::to_string(params.dims.input));
  }
  ForwardResult out;
  out.cache.layer_inputs.reserve(params.extractor.size());
  out.cache.pre_activations.reserve(params.extractor.size());
  DenseVec act(x.begin(), x.end());
  for (const auto& layer : params.extractor) {
    DenseVec pre = matvec(layer.weight, act);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += layer.bias[i];
    out.cache.layer_inputs.push_back(std::move(act));
    act.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    out.cache.pre_activations.push_back(std::move(pre));
  }
  out.features = std::move(act);
  out.logits = matvec(params.classifier.weight, out.features);
  for (std::size_t i = 0; i < out.logits.size(); ++i) out.logits[i] += params.classifier.bias[i];
  if (!all_finite(out.logits)) throw NumericError("forward: non-finite activation");
  return out;
}

namespace {

void add_outer(DenseMat& g, std::span<const double> upstream, std::span<const double> input) {
  for (std::size_t r = 0; r < upstream.size(); ++r) {
    const double u = upstream[r];
    if (u == 0.0) continue;
    auto row = g.row(r);
    for (std::size_t c = 0; c < input.size(); ++c) row[c] += u * input[c];
  }
}

}  // namespace

void accumulate_backward(const ModelParams& params, const ForwardResult& fwd,
                         std::span<const double> dloss_dlogits,
                         std::span<const double> dloss_dfeatures, Gradients& grads) {
  if (dloss_dlogits.size() != params.dims.classes || dloss_dfeatures.size() != params.dims.feature) {
    throw ShapeError("backward: upstream gradient shape does not match model");
  }
  if (fwd.cache.layer_inputs.size() != params.extractor.size() || !grads.same_shape(params)) {
    throw ShapeError("backward: cache or gradient buffer does not match model");
  }
  add_outer(grads.classifier.weight, dloss_dlogits, fwd.features);
  axpy(1.0, dloss_dlogits, grads.classifier.bias);

  DenseVec upstream = matvec_transposed(params.classifier.weight, dloss_dlogits);
  axpy(1.0, dloss_dfeatures, upstream);

  for (std::size_t li = params.extractor.size(); li-- > 0;) {
    const auto& pre = fwd.cache.pre_activations[li];
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      if (!(pre[i] > 0.0)) upstream[i] = 0.0;
    }
    add_outer(grads.extractor[li].weight, upstream, fwd.cache.layer_inputs[li]);
    axpy(1.0, upstream, grads.extractor[li].bias);
    if (li > 0) upstream = matvec_transposed(params.extractor[li].weight, upstream);
  }
}

Gradients backward(const ModelParams& params, const ForwardResult& fwd,
                   std::span<const double> dloss_dlogits,
                   std::span<const double> dloss_dfeatures) {
  Gradients g = ModelParams::zeros(params.dims);
  accumulate_backward(params, fwd, dloss_dlogits, dloss_dfeatures, g);
  return g;
}

SgdState SgdState::for_params(const ModelParams& params, double lr, double momentum,
                              double weight_decay) {
  if (!(lr > 0.0)) throw DomainError("sgd: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("sgd: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw DomainError("sgd: weight decay must be >= 0");
  return SgdState{ModelParams::zeros(params.dims), lr, momentum, weight_decay};
}

void sgd_step(ModelParams& params, const Gradients& grads, SgdState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.velocity)) {
    throw ShapeError("sgd_step: parameter, gradient and velocity shapes differ");
  }
  std::vector<std::span<double>> w;
  std::vector<std::span<const double>> g;
  std::vector<std::span<double>> v;
  params.for_each_tensor([&w](std::span<double> t) { w.push_back(t); });
  grads.for_each_tensor([&g](std::span<const double> t) { g.push_back(t); });
  state.velocity.for_each_tensor([&v](std::span<double> t) { v.push_back(t); });
  bool finite = true;
  for (std::size_t t = 0; t < w.size(); ++t) {
    for (std::size_t i = 0; i < w[t].size(); ++i) {
      v[t][i] = state.momentum * v[t][i] + g[t][i] + state.weight_decay * w[t][i];
      w[t][i] -= state.lr * v[t][i];
      finite = finite && std::isfinite(w[t][i]);
    }
  }
  if (!finite) throw NumericError("sgd_step: non-finite parameter after update");
}

ModelParams average_models(std::span<const ModelParams> models,
                           std::span<const std::size_t> counts) {
  if (models.empty()) throw DomainError("average_models: no models");
  if (models.size() != counts.size()) throw ShapeError("average_models: one count per model");
  std::size_t total = 0;
  for (std::size_t n : counts) {
    if (n == 0) throw DomainError("average_models: sample counts must be positive");
    total += n;
  }
  for (const auto& m : models) {
    if (!m.same_shape(models.front())) throw ShapeError("average_models: model shapes differ");
  }
  ModelParams out = ModelParams::zeros(models.front().dims);
  std::vector<std::span<double>> dst;
  out.for_each_tensor([&dst](std::span<double> t) { dst.push_back(t); });
  for (std::size_t k = 0; k < models.size(); ++k) {
    const double coeff = static_cast<double>(counts[k]) / static_cast<double>(total);
    std::size_t ti = 0;
    models[k].for_each_tensor([&](std::span<const double> t) { axpy(coeff, t, dst[ti++]); });
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax: empty input");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace fedlab
