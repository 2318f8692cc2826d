#include "fedlab/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedlab/errors.hpp"

namespace fedlab {

using nlohmann::json;

namespace {

void emit(const json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Numeric arrays stay on one line even when indenting.
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); });
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += indent >= 0 && flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        emit(e, out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw NumericError("dump_precise: non-finite number");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

json matrix_to_json(const DenseMat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

DenseMat matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw FormatError("matrix: wrong row count");
  DenseMat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (row.size() != cols) throw FormatError("matrix: wrong column count");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

json layer_to_json(const DenseLayer& layer) {
  return json{{"weight", matrix_to_json(layer.weight)}, {"bias", layer.bias}};
}

}  // namespace

std::string dump_precise(const json& j, int indent) {
  std::string out;
  emit(j, out, indent, 0);
  return out;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << dump_precise(j, 1) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json to_json(const ModelParams& p) {
  json layers = json::array();
  for (const auto& layer : p.extractor) layers.push_back(layer_to_json(layer));
  return json{{"dims",
               {{"input", p.dims.input},
                {"hidden", p.dims.hidden},
                {"feature", p.dims.feature},
                {"classes", p.dims.classes}}},
              {"extractor", layers},
              {"classifier", layer_to_json(p.classifier)}};
}

ModelParams model_from_json(const json& j) {
  try {
    ModelDims dims;
    dims.input = j.at("dims").at("input").get<std::size_t>();
    dims.hidden = j.at("dims").at("hidden").get<std::vector<std::size_t>>();
    dims.feature = j.at("dims").at("feature").get<std::size_t>();
    dims.classes = j.at("dims").at("classes").get<std::size_t>();
    ModelParams p = ModelParams::zeros(dims);
    const auto& layers = j.at("extractor");
    if (layers.size() != p.extractor.size()) throw FormatError("model: wrong layer count");
    auto read_layer = [](const json& src, DenseLayer& dst) {
      dst.weight = matrix_from_json(src.at("weight"), dst.weight.rows(), dst.weight.cols());
      auto bias = src.at("bias").get<std::vector<double>>();
      if (bias.size() != dst.bias.size()) throw FormatError("model: wrong bias length");
      dst.bias = std::move(bias);
    };
    for (std::size_t i = 0; i < p.extractor.size(); ++i) read_layer(layers[i], p.extractor[i]);
    read_layer(j.at("classifier"), p.classifier);
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

json to_json(const WeightedPrototypeSet& set) {
  json protos = json::array();
  for (const auto& p : set.prototypes) protos.push_back({{"vector", p.vector}, {"weight", p.weight}});
  return json{{"class", set.class_label}, {"prototypes", protos}};
}

WeightedPrototypeSet prototype_set_from_json(const json& j) {
  try {
    WeightedPrototypeSet set;
    set.class_label = j.at("class").get<int>();
    for (const auto& p : j.at("prototypes")) {
      set.prototypes.push_back({p.at("vector").get<std::vector<double>>(), p.at("weight").get<double>()});
    }
    return set;
  } catch (const json::exception& e) {
    throw FormatError(std::string("prototype set: ") + e.what());
  }
}

json to_json(const GlobalPrototypes& protos) {
  json classes = json::array();
  for (const auto& [label, list] : protos.by_class) {
    classes.push_back(to_json(WeightedPrototypeSet{label, list}));
  }
  return classes;
}

GlobalPrototypes global_prototypes_from_json(const json& j) {
  GlobalPrototypes out;
  for (const auto& entry : j) {
    auto set = prototype_set_from_json(entry);
    out.by_class[set.class_label] = std::move(set.prototypes);
  }
  return out;
}

// The message schema is closed: only the fields below are ever written.
json to_json(const ClientUpdateMsg& msg) {
  json protos = json::array();
  for (const auto& set : msg.prototypes) protos.push_back(to_json(set));
  return json{{"type", "client_update"},
              {"client_id", msg.client_id},
              {"round", msg.round},
              {"sample_count", msg.sample_count},
              {"model", to_json(msg.model)},
              {"prototypes", protos}};
}

ClientUpdateMsg client_update_from_json(const json& j) {
  try {
    if (j.at("type") != "client_update") throw FormatError("client update: wrong message type");
    ClientUpdateMsg msg;
    msg.client_id = j.at("client_id").get<int>();
    msg.round = j.at("round").get<int>();
    msg.sample_count = j.at("sample_count").get<std::size_t>();
    msg.model = model_from_json(j.at("model"));
    for (const auto& set : j.at("prototypes")) msg.prototypes.push_back(prototype_set_from_json(set));
    return msg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("client update: ") + e.what());
  }
}

json to_json(const BroadcastMsg& msg) {
  return json{{"type", "broadcast"},
              {"round", msg.round},
              {"model", to_json(msg.model)},
              {"prototypes", to_json(msg.prototypes)}};
}

BroadcastMsg broadcast_from_json(const json& j) {
  try {
    if (j.at("type") != "broadcast") throw FormatError("broadcast: wrong message type");
    BroadcastMsg msg;
    msg.round = j.at("round").get<int>();
    msg.model = model_from_json(j.at("model"));
    msg.prototypes = global_prototypes_from_json(j.at("prototypes"));
    return msg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("broadcast: ") + e.what());
  }
}

}  // namespace fedlab
