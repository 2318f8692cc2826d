#include "fedlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedlab/errors.hpp"

namespace fedlab {

void LossConfig::validate() const {
  if (!(alpha > 0.0)) throw DomainError("loss config: alpha must be > 0");
  if (!(tau > 0.0)) throw DomainError("loss config: tau must be > 0");
  if (!(lambda1 >= 0.0)) throw DomainError("loss config: lambda1 must be >= 0");
  if (!(lambda2 >= 0.0)) throw DomainError("loss config: lambda2 must be >= 0");
  if (!(phi > 0.0 && phi <= 1.0)) throw DomainError("loss config: phi must be in (0, 1]");
}

bool GlobalPrototypes::empty() const { return size() == 0; }

std::size_t GlobalPrototypes::size() const {
  std::size_t n = 0;
  for (const auto& [label, list] : by_class) n += list.size();
  return n;
}

const std::vector<WeightedPoint>* GlobalPrototypes::find(int label) const {
  auto it = by_class.find(label);
  if (it == by_class.end() || it->second.empty()) return nullptr;
  return &it->second;
}

double alpha_similarity(std::span<const double> z, std::span<const double> g, double alpha) {
  const double c = std::clamp(cosine_sim(z, g), 0.0, 1.0);
  return std::pow(c, alpha);
}

double alpha_similarity_grad(std::span<const double> z, std::span<const double> g, double alpha,
                             std::span<double> grad_out) {
  if (grad_out.size() != z.size()) throw ShapeError("alpha_similarity_grad: gradient buffer size");
  const double nz = norm2(z);
  const double ng = norm2(g);
  if (nz == 0.0 || ng == 0.0) throw DomainError("alpha_similarity: zero-norm vector");
  const double raw = dot(z, g) / (nz * ng);
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  if (raw <= 0.0) return 0.0;
  if (raw >= 1.0) return 1.0;
  const double value = std::pow(raw, alpha);
  // d cos / dz = (g/|g| - cos * z/|z|) / |z|
  const double outer = alpha * value / raw;
  for (std::size_t i = 0; i < z.size(); ++i) {
    grad_out[i] = outer * (g[i] / ng - raw * z[i] / nz) / nz;
  }
  return value;
}

double loss_ce(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw DomainError("loss_ce: label " + std::to_string(label) + " out of range");
  }
  const auto top = std::max_element(logits.begin(), logits.end());
  const double mx = *top;
  // The max term contributes exactly 1; log1p keeps precision for confident logits.
  double rest = 0.0;
  for (auto it = logits.begin(); it != logits.end(); ++it) {
    if (it != top) rest += std::exp(*it - mx);
  }
  return (mx - logits[static_cast<std::size_t>(label)]) + std::log1p(rest);
}

double loss_ce_batch(std::span<const DenseVec> logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) throw ShapeError("loss_ce_batch: one label per sample");
  if (logits.empty()) throw DomainError("loss_ce_batch: empty batch");
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += loss_ce(logits[i], labels[i]);
  return s / static_cast<double>(logits.size());
}

namespace {

// Similarity of z to one prototype, plus what the gradient needs.
struct SimTerm {
  double value = 0.0;       // s_alpha
  double dvalue_dcos = 0.0;  // zero where the clamp is active
  double cos = 0.0;
  double inv_proto_norm = 0.0;
};

struct FeatureView {
  std::span<const double> z;
  double norm = 0.0;
};

FeatureView view_of(std::span<const double> z) {
  FeatureView v{z, norm2(z)};
  if (v.norm == 0.0) throw DomainError("alpha_similarity: zero-norm vector");
  return v;
}

SimTerm similarity(const FeatureView& f, std::span<const double> g, double alpha) {
  const double ng = norm2(g);
  if (ng == 0.0) throw DomainError("alpha_similarity: zero-norm vector");
  SimTerm t;
  t.inv_proto_norm = 1.0 / ng;
  t.cos = dot(f.z, g) / (f.norm * ng);
  if (t.cos <= 0.0) {
    t.value = 0.0;
  } else if (t.cos >= 1.0) {
    t.value = 1.0;
  } else {
    t.value = std::pow(t.cos, alpha);
    t.dvalue_dcos = alpha * t.value / t.cos;
  }
  return t;
}

// Accumulates sum_j factor_j * d s_j / dz using
// d cos / dz = (g / |g| - cos * z / |z|) / |z|.
class SimGradAccumulator {
 public:
  explicit SimGradAccumulator(const FeatureView& f) : f_(f), dir_(f.z.size(), 0.0) {}

  void add(double factor, const SimTerm& t, std::span<const double> g) {
    const double w = factor * t.dvalue_dcos;
    if (w == 0.0) return;
    axpy(w * t.inv_proto_norm, g, dir_);
    cos_mass_ += w * t.cos;
  }

  void write(std::span<double> grad) const {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] = (dir_[i] - cos_mass_ * f_.z[i] / f_.norm) / f_.norm;
    }
  }

 private:
  const FeatureView& f_;
  DenseVec dir_;
  double cos_mass_ = 0.0;
};

const std::vector<WeightedPoint>& same_class_or_throw(const GlobalPrototypes& protos, int label,
                                                      const char* op) {
  const auto* list = protos.find(label);
  if (list == nullptr) {
    throw DomainError(std::string(op) + ": no prototypes for class " + std::to_string(label));
  }
  return *list;
}

double log_sum_exp(std::span<const double> a) {
  const double mx = *std::max_element(a.begin(), a.end());
  double s = 0.0;
  for (double v : a) s += std::exp(v - mx);
  return mx + std::log(s);
}

// Contrastive term and, when grad is non-empty, its gradient with respect to z.
double contra_impl(std::span<const double> z, int label, const GlobalPrototypes& protos,
                   const LossConfig& cfg, std::span<double> grad) {
  same_class_or_throw(protos, label, "loss_contra");
  const FeatureView f = view_of(z);

  struct Entry {
    const WeightedPoint* point;
    bool same_class;
    SimTerm sim;
    double logit;
  };
  std::vector<Entry> entries;
  entries.reserve(protos.size());
  std::vector<double> logit_all;
  std::vector<double> logit_same;
  for (const auto& [cls, list] : protos.by_class) {
    for (const auto& p : list) {
      const SimTerm sim = similarity(f, p.vector, cfg.alpha);
      const double a = sim.value / cfg.tau + std::log(p.weight);
      entries.push_back({&p, cls == label, sim, a});
      logit_all.push_back(a);
      if (cls == label) logit_same.push_back(a);
    }
  }
  const double lse_all = log_sum_exp(logit_all);
  const double lse_same = log_sum_exp(logit_same);

  if (!grad.empty()) {
    SimGradAccumulator acc(f);
    for (const auto& e : entries) {
      double coeff = std::exp(e.logit - lse_all);
      if (e.same_class) coeff -= std::exp(e.logit - lse_same);
      acc.add(coeff / cfg.tau, e.sim, e.point->vector);
    }
    acc.write(grad);
  }
  return std::max(lse_all - lse_same, 0.0);
}

double corr_impl(std::span<const double> z, int label, const GlobalPrototypes& protos,
                 const LossConfig& cfg, std::span<double> grad) {
  const auto& same = same_class_or_throw(protos, label, "loss_corr");
  const FeatureView f = view_of(z);
  std::vector<SimTerm> sims;
  std::vector<double> terms;
  sims.reserve(same.size());
  terms.reserve(same.size());
  for (const auto& p : same) {
    sims.push_back(similarity(f, p.vector, cfg.alpha));
    terms.push_back(sims.back().value * p.weight);
  }
  double loss = 0.0;
  SimGradAccumulator acc(f);
  for (std::size_t j : topk_indices(terms, cfg.phi)) {
    loss -= terms[j];
    acc.add(-same[j].weight, sims[j], same[j].vector);
  }
  if (!grad.empty()) acc.write(grad);
  return loss;
}

}  // namespace

double loss_contra(std::span<const double> z, int label, const GlobalPrototypes& protos,
                   const LossConfig& cfg) {
  return contra_impl(z, label, protos, cfg, {});
}

std::size_t topk_count(std::size_t n, double phi) {
  if (!(phi > 0.0 && phi <= 1.0)) throw DomainError("topk_count: phi must be in (0, 1]");
  if (n == 0) return 0;
  // A small slack absorbs products such as 0.3 * 10 landing one ulp above an integer.
  const double raw = std::ceil(phi * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

std::vector<std::size_t> topk_indices(std::span<const double> values, double phi) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&values](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(topk_count(values.size(), phi));
  return order;
}

double loss_corr(std::span<const double> z, int label, const GlobalPrototypes& protos,
                 const LossConfig& cfg) {
  return corr_impl(z, label, protos, cfg, {});
}

LossResult total_loss_and_grads(std::span<const double> z, std::span<const double> logits,
                                int label, const GlobalPrototypes& protos, const LossConfig& cfg) {
  LossResult out;
  out.ce = loss_ce(logits, label);
  out.dloss_dlogits.resize(logits.size());
  {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      out.dloss_dlogits[i] = std::exp(logits[i] - mx);
      s += out.dloss_dlogits[i];
    }
    for (double& g : out.dloss_dlogits) g /= s;
    out.dloss_dlogits[static_cast<std::size_t>(label)] -= 1.0;
  }
  out.dloss_dfeatures.assign(z.size(), 0.0);
  out.loss = out.ce;

  const bool active = (cfg.lambda1 > 0.0 || cfg.lambda2 > 0.0) && protos.find(label) != nullptr &&
                      !is_zero(z);
  if (active) {
    out.prototype_terms_evaluated = true;
    DenseVec grad(z.size());
    if (cfg.lambda1 > 0.0) {
      out.contra = contra_impl(z, label, protos, cfg, grad);
      axpy(cfg.lambda1, grad, out.dloss_dfeatures);
      out.loss += cfg.lambda1 * out.contra;
    }
    if (cfg.lambda2 > 0.0) {
      out.corr = corr_impl(z, label, protos, cfg, grad);
      axpy(cfg.lambda2, grad, out.dloss_dfeatures);
      out.loss += cfg.lambda2 * out.corr;
    }
  }
  if (!std::isfinite(out.loss) || !all_finite(out.dloss_dfeatures)) {
    throw NumericError("total_loss_and_grads: non-finite loss or gradient");
  }
  return out;
}

}  // namespace fedlab
