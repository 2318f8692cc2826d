#include "fedlab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include "fedlab/errors.hpp"

namespace fedlab {

void SyntheticSpec::validate() const {
  if (clients == 0 || classes == 0 || n_train == 0 || n_test == 0) {
    throw DomainError("synthetic data: clients, classes and sample counts must be >= 1");
  }
  if (input_dim < 2) throw DomainError("synthetic data: input_dim must be >= 2");
  if (n_train < classes) {
    throw DomainError("synthetic data: n_train must cover every class at least once");
  }
  if (!(noise_sigma > 0.0) || !(class_sep > 0.0) || !(shift_scale >= 0.0)) {
    throw DomainError("synthetic data: noise_sigma and class_sep must be > 0, shift_scale >= 0");
  }
  if (!(scale_jitter >= 0.0 && scale_jitter < 1.0)) {
    throw DomainError("synthetic data: scale_jitter must be in [0, 1)");
  }
  if (!(rotation_strength >= 0.0 && rotation_strength <= 1.0)) {
    throw DomainError("synthetic data: rotation_strength must be in [0, 1]");
  }
  if (hard_domain && (!(hard_noise_factor > 0.0) || !(hard_scale > 0.0))) {
    throw DomainError("synthetic data: hard-domain factors must be > 0");
  }
}

void DatasetBundle::validate() const {
  if (train.empty() || train.size() != test.size()) {
    throw DomainError("dataset: need matching per-client train and test lists");
  }
  for (std::size_t k = 0; k < train.size(); ++k) {
    if (train[k].empty()) throw DomainError("dataset: client " + std::to_string(k) + " has no training data");
    for (const auto* split : {&train[k], &test[k]}) {
      for (const auto& s : *split) {
        if (s.x.size() != input_dim) throw ShapeError("dataset: sample dimension mismatch");
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes) {
          throw DomainError("dataset: label out of range");
        }
      }
    }
  }
}

DenseMat random_orthogonal(std::size_t n, double strength, SeededRng& rng) {
  DenseMat a(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      a(r, c) = strength * rng.normal() + (r == c ? 1.0 - strength : 0.0);
    }
  }
  // Modified Gram-Schmidt on columns, run twice for numerical orthogonality.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += a(r, i) * a(r, j);
        for (std::size_t r = 0; r < n; ++r) a(r, j) -= proj * a(r, i);
      }
      double nrm = 0.0;
      for (std::size_t r = 0; r < n; ++r) nrm += a(r, j) * a(r, j);
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) throw NumericError("random_orthogonal: degenerate draw");
      for (std::size_t r = 0; r < n; ++r) a(r, j) /= nrm;
    }
  }
  return a;
}

namespace {

std::vector<int> balanced_labels(std::size_t n, std::size_t classes, SeededRng& rng) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.uniform_index(static_cast<std::uint32_t>(i));
    std::swap(labels[i - 1], labels[j]);
  }
  return labels;
}

LabeledSample draw(const DomainSpec& dom, const DenseVec& mean, int label, SeededRng& rng) {
  DenseVec latent(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) latent[i] = mean[i] + dom.noise_sigma * rng.normal();
  DenseVec x = matvec(dom.rotation, latent);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = dom.scale * x[i] + dom.shift[i];
  return {std::move(x), label};
}

}  // namespace

DatasetBundle gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SeededRng rng = spawn_rng(spec.seed, "synthetic-data");
  const std::size_t v = spec.input_dim;

  std::vector<DenseVec> means(spec.classes, DenseVec(v));
  for (auto& m : means) {
    double nrm = 0.0;
    do {
      for (double& e : m) e = rng.normal();
      nrm = norm2(m);
    } while (nrm < 1e-9);
    for (double& e : m) e *= spec.class_sep / nrm;
  }

  DatasetBundle bundle;
  bundle.classes = spec.classes;
  bundle.input_dim = v;
  for (std::size_t k = 0; k < spec.clients; ++k) {
    DomainSpec dom;
    dom.rotation = random_orthogonal(v, spec.rotation_strength, rng);
    dom.scale = rng.uniform(1.0 - spec.scale_jitter, 1.0 + spec.scale_jitter);
    dom.shift.resize(v);
    for (double& s : dom.shift) s = spec.shift_scale * rng.normal();
    dom.noise_sigma = spec.noise_sigma;
    if (spec.hard_domain && spec.clients > 1 && k + 1 == spec.clients) {
      dom.noise_sigma *= spec.hard_noise_factor;
      dom.scale *= spec.hard_scale;
    }

    std::vector<LabeledSample> train;
    train.reserve(spec.n_train);
    for (int y : balanced_labels(spec.n_train, spec.classes, rng)) {
      train.push_back(draw(dom, means[static_cast<std::size_t>(y)], y, rng));
    }
    std::vector<LabeledSample> test;
    test.reserve(spec.n_test);
    for (int y : balanced_labels(spec.n_test, spec.classes, rng)) {
      test.push_back(draw(dom, means[static_cast<std::size_t>(y)], y, rng));
    }
    bundle.pooled_test.insert(bundle.pooled_test.end(), test.begin(), test.end());
    bundle.train.push_back(std::move(train));
    bundle.test.push_back(std::move(test));
    bundle.domains.push_back(std::move(dom));
  }
  return bundle;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_field(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

std::vector<LabeledSample> load_csv(const std::filesystem::path& path, std::size_t input_dim,
                                    std::size_t classes, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_csv: cannot open " + path.string());
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (skip_header && row == 1) continue;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::string where = path.string() + " row " + std::to_string(row);
    if (fields.size() != input_dim + 1) {
      throw FormatError("load_csv: " + where + ": expected " + std::to_string(input_dim + 1) +
                        " columns, found " + std::to_string(fields.size()));
    }
    LabeledSample s;
    s.x.resize(input_dim);
    for (std::size_t c = 0; c < input_dim; ++c) {
      if (!parse_field(fields[c], s.x[c]) || !std::isfinite(s.x[c])) {
        throw FormatError("load_csv: " + where + ": column " + std::to_string(c + 1) +
                          " is not a finite number");
      }
    }
    if (!parse_field(fields[input_dim], s.label)) {
      throw FormatError("load_csv: " + where + ": label is not an integer");
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes) {
      throw DomainError("load_csv: " + where + ": label " + std::to_string(s.label) +
                        " outside [0, " + std::to_string(classes) + ")");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const LabeledSample> samples) {
  std::ofstream out(path);
  if (!out) throw FormatError("write_csv: cannot open " + path.string());
  char buf[32];
  for (const auto& s : samples) {
    for (double v : s.x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << s.label << '\n';
  }
}

std::vector<std::size_t> class_counts(std::span<const LabeledSample> samples, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (const auto& s : samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes) {
      throw DomainError("class_counts: label out of range");
    }
    ++counts[static_cast<std::size_t>(s.label)];
  }
  return counts;
}

}  // namespace fedlab
