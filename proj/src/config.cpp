#include "fedlab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>

#include "fedlab/errors.hpp"
#include "fedlab/json_io.hpp"

namespace fedlab {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& key, const std::string& what) {
  throw FormatError("config field '" + key + "': " + what);
}

double as_number(const std::string& key, const json& v) {
  if (!v.is_number()) field_error(key, "expected a number");
  return v.get<double>();
}

std::size_t as_count(const std::string& key, const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) field_error(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) field_error(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) field_error(key, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> as_string_list(const std::string& key, const json& v) {
  if (!v.is_array()) field_error(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(as_string(key, e));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& c, auto& k, auto& v) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.template get<long long>() >= 0)) {
           field_error(k, "expected a non-negative integer");
         }
         c.seed = v.template get<std::uint64_t>();
       }},
      {"clients", [](auto& c, auto& k, auto& v) { c.synthetic.clients = as_count(k, v); }},
      {"classes", [](auto& c, auto& k, auto& v) { c.synthetic.classes = as_count(k, v); }},
      {"input_dim", [](auto& c, auto& k, auto& v) { c.synthetic.input_dim = as_count(k, v); }},
      {"n_train", [](auto& c, auto& k, auto& v) { c.synthetic.n_train = as_count(k, v); }},
      {"n_test", [](auto& c, auto& k, auto& v) { c.synthetic.n_test = as_count(k, v); }},
      {"class_sep", [](auto& c, auto& k, auto& v) { c.synthetic.class_sep = as_number(k, v); }},
      {"noise_sigma", [](auto& c, auto& k, auto& v) { c.synthetic.noise_sigma = as_number(k, v); }},
      {"shift_scale", [](auto& c, auto& k, auto& v) { c.synthetic.shift_scale = as_number(k, v); }},
      {"scale_jitter", [](auto& c, auto& k, auto& v) { c.synthetic.scale_jitter = as_number(k, v); }},
      {"rotation_strength", [](auto& c, auto& k, auto& v) { c.synthetic.rotation_strength = as_number(k, v); }},
      {"hard_domain", [](auto& c, auto& k, auto& v) { c.synthetic.hard_domain = as_bool(k, v); }},
      {"hard_noise_factor", [](auto& c, auto& k, auto& v) { c.synthetic.hard_noise_factor = as_number(k, v); }},
      {"hard_scale", [](auto& c, auto& k, auto& v) { c.synthetic.hard_scale = as_number(k, v); }},
      {"train_csv", [](auto& c, auto& k, auto& v) { c.train_csv = as_string_list(k, v); }},
      {"test_csv", [](auto& c, auto& k, auto& v) { c.test_csv = as_string_list(k, v); }},
      {"csv_header", [](auto& c, auto& k, auto& v) { c.csv_header = as_bool(k, v); }},
      {"hidden", [](auto& c, auto& k, auto& v) {
         if (!v.is_array()) field_error(k, "expected an array of layer widths");
         c.hidden.clear();
         for (const auto& e : v) c.hidden.push_back(as_count(k, e));
       }},
      {"feature_dim", [](auto& c, auto& k, auto& v) { c.feature_dim = as_count(k, v); }},
      {"lr", [](auto& c, auto& k, auto& v) { c.lr = as_number(k, v); }},
      {"momentum", [](auto& c, auto& k, auto& v) { c.momentum = as_number(k, v); }},
      {"weight_decay", [](auto& c, auto& k, auto& v) { c.weight_decay = as_number(k, v); }},
      {"rounds", [](auto& c, auto& k, auto& v) { c.rounds = as_count(k, v); }},
      {"epochs", [](auto& c, auto& k, auto& v) { c.epochs = as_count(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = as_count(k, v); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.loss.alpha = as_number(k, v); }},
      {"tau", [](auto& c, auto& k, auto& v) { c.loss.tau = as_number(k, v); }},
      {"lambda1", [](auto& c, auto& k, auto& v) { c.loss.lambda1 = as_number(k, v); }},
      {"lambda2", [](auto& c, auto& k, auto& v) { c.loss.lambda2 = as_number(k, v); }},
      {"phi", [](auto& c, auto& k, auto& v) { c.loss.phi = as_number(k, v); }},
      {"disable_contra", [](auto& c, auto& k, auto& v) { c.flags.disable_contra = as_bool(k, v); }},
      {"disable_corr", [](auto& c, auto& k, auto& v) { c.flags.disable_corr = as_bool(k, v); }},
      {"unit_weights", [](auto& c, auto& k, auto& v) { c.flags.unit_weights = as_bool(k, v); }},
      {"phi_override", [](auto& c, auto& k, auto& v) {
         if (v.is_null()) {
           c.flags.phi_override.reset();
         } else {
           c.flags.phi_override = as_number(k, v);
         }
       }},
      {"unweighted_centroids", [](auto& c, auto& k, auto& v) { c.flags.unweighted_centroids = as_bool(k, v); }},
      {"metric", [](auto& c, auto& k, auto& v) {
         const auto name = as_string(k, v);
         if (name == "cosine") {
           c.flags.metric = Metric::Cosine;
         } else if (name == "euclidean") {
           c.flags.metric = Metric::Euclidean;
         } else {
           field_error(k, "expected \"cosine\" or \"euclidean\"");
         }
       }},
      {"record_wall_time", [](auto& c, auto& k, auto& v) { c.record_wall_time = as_bool(k, v); }},
      {"transport_dir", [](auto& c, auto& k, auto& v) { c.transport_dir = as_string(k, v); }},
      {"baseline_metrics", [](auto& c, auto& k, auto& v) { c.baseline_metrics = as_string(k, v); }},
      {"save_checkpoint", [](auto& c, auto& k, auto& v) { c.save_checkpoint = as_bool(k, v); }},
      {"init_checkpoint", [](auto& c, auto& k, auto& v) { c.init_checkpoint = as_string(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw FormatError("config: top level must be a JSON object");
  ExperimentConfig cfg;
  const auto& table = setters();
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto setter = table.find(it.key());
    if (setter == table.end()) throw FormatError("config: unknown key '" + it.key() + "'");
  }
  for (auto it = j.begin(); it != j.end(); ++it) table.at(it.key())(cfg, it.key(), it.value());
  // lambda2 tracks 10 * lambda1 unless it is given explicitly.
  if (j.contains("lambda1") && !j.contains("lambda2")) cfg.loss.lambda2 = 10.0 * cfg.loss.lambda1;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

json ExperimentConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["clients"] = synthetic.clients;
  j["classes"] = synthetic.classes;
  j["input_dim"] = synthetic.input_dim;
  j["n_train"] = synthetic.n_train;
  j["n_test"] = synthetic.n_test;
  j["class_sep"] = synthetic.class_sep;
  j["noise_sigma"] = synthetic.noise_sigma;
  j["shift_scale"] = synthetic.shift_scale;
  j["scale_jitter"] = synthetic.scale_jitter;
  j["rotation_strength"] = synthetic.rotation_strength;
  j["hard_domain"] = synthetic.hard_domain;
  j["hard_noise_factor"] = synthetic.hard_noise_factor;
  j["hard_scale"] = synthetic.hard_scale;
  j["train_csv"] = train_csv;
  j["test_csv"] = test_csv;
  j["csv_header"] = csv_header;
  j["hidden"] = hidden;
  j["feature_dim"] = feature_dim;
  j["lr"] = lr;
  j["momentum"] = momentum;
  j["weight_decay"] = weight_decay;
  j["rounds"] = rounds;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["alpha"] = loss.alpha;
  j["tau"] = loss.tau;
  j["lambda1"] = loss.lambda1;
  j["lambda2"] = loss.lambda2;
  j["phi"] = loss.phi;
  j["disable_contra"] = flags.disable_contra;
  j["disable_corr"] = flags.disable_corr;
  j["unit_weights"] = flags.unit_weights;
  j["phi_override"] = flags.phi_override ? json(*flags.phi_override) : json(nullptr);
  j["unweighted_centroids"] = flags.unweighted_centroids;
  j["metric"] = flags.metric == Metric::Cosine ? "cosine" : "euclidean";
  j["record_wall_time"] = record_wall_time;
  j["transport_dir"] = transport_dir;
  j["baseline_metrics"] = baseline_metrics;
  j["save_checkpoint"] = save_checkpoint;
  j["init_checkpoint"] = init_checkpoint;
  return j;
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) field_error(key, what);
  };
  check(loss.alpha > 0.0, "alpha", "must be > 0");
  check(loss.tau > 0.0, "tau", "must be > 0");
  check(loss.lambda1 >= 0.0, "lambda1", "must be >= 0");
  check(loss.lambda2 >= 0.0, "lambda2", "must be >= 0");
  check(loss.phi > 0.0 && loss.phi <= 1.0, "phi", "must be in (0, 1]");
  if (flags.phi_override) {
    check(*flags.phi_override > 0.0 && *flags.phi_override <= 1.0, "phi_override", "must be in (0, 1]");
  }
  check(lr > 0.0, "lr", "must be > 0");
  check(momentum >= 0.0 && momentum < 1.0, "momentum", "must be in [0, 1)");
  check(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  check(batch_size > 0, "batch_size", "must be > 0");
  check(feature_dim > 0, "feature_dim", "must be > 0");
  check(std::find(hidden.begin(), hidden.end(), 0U) == hidden.end(), "hidden", "widths must be > 0");
  check(test_csv.empty() || test_csv.size() == train_csv.size(), "test_csv",
        "needs one file per train_csv entry");
  if (train_csv.empty()) {
    try {
      synthetic.validate();
    } catch (const DomainError& e) {
      throw FormatError(std::string("config: ") + e.what());
    }
  } else {
    check(synthetic.classes > 0, "classes", "must be > 0");
    check(synthetic.input_dim > 0, "input_dim", "must be > 0");
  }
}

LossConfig ExperimentConfig::effective_loss() const {
  LossConfig out = loss;
  if (flags.disable_contra) out.lambda1 = 0.0;
  if (flags.disable_corr) out.lambda2 = 0.0;
  if (flags.phi_override) out.phi = *flags.phi_override;
  return out;
}

DatasetBundle ExperimentConfig::load_data() const {
  if (train_csv.empty()) {
    SyntheticSpec spec = synthetic;
    spec.seed = seed;
    return gen_synthetic(spec);
  }
  DatasetBundle bundle;
  bundle.classes = synthetic.classes;
  bundle.input_dim = synthetic.input_dim;
  for (std::size_t k = 0; k < train_csv.size(); ++k) {
    bundle.train.push_back(load_csv(train_csv[k], bundle.input_dim, bundle.classes, csv_header));
    bundle.test.push_back(test_csv.empty()
                              ? std::vector<LabeledSample>{}
                              : load_csv(test_csv[k], bundle.input_dim, bundle.classes, csv_header));
    bundle.pooled_test.insert(bundle.pooled_test.end(), bundle.test.back().begin(),
                              bundle.test.back().end());
  }
  bundle.validate();
  return bundle;
}

TrainingConfig ExperimentConfig::training_config(const DatasetBundle& data, std::size_t threads) const {
  TrainingConfig tc;
  tc.seed = seed;
  tc.dims = ModelDims{data.input_dim, hidden, feature_dim, data.classes};
  tc.protocol.loss = effective_loss();
  tc.protocol.epochs = epochs;
  tc.protocol.batch_size = batch_size;
  tc.protocol.lr = lr;
  tc.protocol.momentum = momentum;
  tc.protocol.weight_decay = weight_decay;
  tc.protocol.metric = flags.metric;
  tc.protocol.centroids = flags.unweighted_centroids ? CentroidMode::Unweighted : CentroidMode::Weighted;
  tc.protocol.unit_weights = flags.unit_weights;
  tc.rounds = rounds;
  tc.threads = threads;
  tc.record_wall_time = record_wall_time;
  tc.transport_dir = transport_dir;
  if (!init_checkpoint.empty()) tc.initial_model = model_from_json(read_json_file(init_checkpoint));
  return tc;
}

std::size_t threads_from_env() {
  const char* raw = std::getenv("FEDLAB_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1) throw FormatError("FEDLAB_THREADS must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace fedlab
