#include "fedlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedlab/errors.hpp"
#include "fedlab/json_io.hpp"

#ifndef FEDLAB_GIT_DESCRIBE
#define FEDLAB_GIT_DESCRIBE "unknown"
#endif

namespace fedlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string build_describe() { return FEDLAB_GIT_DESCRIBE; }

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_metrics_csv(const fs::path& path, std::span<const MetricsRow> rows, std::size_t clients) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "round";
  for (std::size_t k = 0; k < clients; ++k) out << ",acc_client_" << k;
  out << ",acc_avg,delta,seconds\n";
  for (const auto& r : rows) {
    out << r.round;
    for (double a : r.client_accuracy) out << ',' << fixed(a);
    out << ',' << fixed(r.average_accuracy) << ',';
    if (r.delta) out << fixed(*r.delta);
    out << ',' << fixed(r.seconds, 3) << '\n';
  }
}

std::vector<double> read_average_accuracy(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty metrics file");
  const auto header = split_csv_line(line);
  const auto col = std::find(header.begin(), header.end(), "acc_avg");
  if (col == header.end()) throw FormatError(path.string() + ": no acc_avg column");
  const auto idx = static_cast<std::size_t>(col - header.begin());
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto fields = split_csv_line(line);
    if (fields.size() <= idx) throw FormatError(path.string() + ": short row");
    out.push_back(std::stod(fields[idx]));
  }
  return out;
}

void apply_baseline(std::vector<MetricsRow>& rows, std::span<const double> baseline_avg) {
  for (std::size_t i = 0; i < rows.size() && i < baseline_avg.size(); ++i) {
    // The baseline comes from a 6-digit CSV column; compare at that precision.
    rows[i].delta = std::stod(fixed(rows[i].average_accuracy)) - baseline_avg[i];
  }
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::size_t threads) {
  cfg.validate();
  const DatasetBundle data = cfg.load_data();
  TrainingConfig tc = cfg.training_config(data, threads);
  if (!tc.transport_dir.empty() && tc.transport_dir.is_relative()) tc.transport_dir = out_dir / tc.transport_dir;

  ExperimentOutcome outcome{run_training(data, tc), out_dir};
  if (!cfg.baseline_metrics.empty()) apply_baseline(outcome.run.metrics, read_average_accuracy(cfg.baseline_metrics));

  fs::create_directories(out_dir);
  write_metrics_csv(out_dir / "metrics.csv", outcome.run.metrics, data.clients());

  const MetricsRow& last = outcome.run.metrics.back();
  json summary{{"config", cfg.to_json()},
               {"build", build_describe()},
               {"final_round", last.round},
               {"client_accuracy", last.client_accuracy},
               {"average_accuracy", last.average_accuracy},
               {"global_prototypes", outcome.run.server.prototypes.size()}};
  if (last.delta) summary["delta"] = *last.delta;
  write_json_file(out_dir / "summary.json", summary);
  if (cfg.save_checkpoint) write_json_file(out_dir / "checkpoint.json", to_json(outcome.run.server.global));
  return outcome;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants = {
      {"fedavg", "w/o", "w/o", [](ExperimentConfig& c) { c.flags.disable_contra = c.flags.disable_corr = true; }},
      {"corr_only", "w/o", "w/", [](ExperimentConfig& c) { c.flags.disable_contra = true; }},
      {"corr_only_phi1", "w/o", "phi=1", [](ExperimentConfig& c) {
         c.flags.disable_contra = true;
         c.flags.phi_override = 1.0;
       }},
      {"contra_only", "w/", "w/o", [](ExperimentConfig& c) { c.flags.disable_corr = true; }},
      {"full_phi1", "w/", "phi=1", [](ExperimentConfig& c) { c.flags.phi_override = 1.0; }},
      {"unit_weights", "w=1", "w=1", [](ExperimentConfig& c) { c.flags.unit_weights = true; }},
      {"full", "w/", "w/", [](ExperimentConfig&) {}},
  };
  return variants;
}

std::vector<AblationRow> ablation_suite(const ExperimentConfig& base, std::size_t n_seeds,
                                        const fs::path& out_dir, std::size_t threads) {
  if (n_seeds == 0) throw DomainError("ablation_suite: need at least one seed");
  const auto& variants = ablation_variants();
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    AblationRow row{v, {}, {}, {}};
    for (std::size_t s = 0; s < n_seeds; ++s) row.cells.push_back({base.seed + s, {}, {}});
    rows.push_back(std::move(row));
  }
  auto cell_dir = [&](std::size_t r, std::size_t s) {
    return out_dir / (rows[r].variant.name + "_seed" + std::to_string(rows[r].cells[s].seed));
  };

  auto run_cell = [&](std::size_t r, std::size_t s) {
    AblationCell& cell = rows[r].cells[s];
    try {
      ExperimentConfig cfg = base;
      cfg.seed = cell.seed;
      cfg.flags = AblationFlags{};
      cfg.flags.metric = base.flags.metric;
      cfg.flags.unweighted_centroids = base.flags.unweighted_centroids;
      cfg.transport_dir.clear();
      cfg.baseline_metrics.clear();
      // Per-round deltas against the baseline run with the same seed.
      if (r > 0 && rows[0].cells[s].final_average) cfg.baseline_metrics = (cell_dir(0, s) / "metrics.csv").string();
      rows[r].variant.apply(cfg);
      cell.final_average = run_experiment(cfg, cell_dir(r, s), 1).run.metrics.back().average_accuracy;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };
  parallel_for(n_seeds, threads, [&](std::size_t s) { run_cell(0, s); });
  parallel_for((rows.size() - 1) * n_seeds, threads,
               [&](std::size_t i) { run_cell(1 + i / n_seeds, i % n_seeds); });

  for (auto& row : rows) {
    double sum = 0.0;
    bool complete = true;
    for (const auto& c : row.cells) {
      if (!c.final_average) complete = false;
      else sum += *c.final_average;
    }
    if (complete) row.mean_average = sum / static_cast<double>(row.cells.size());
  }
  for (auto& row : rows) {
    if (row.mean_average && rows.front().mean_average) row.delta = *row.mean_average - *rows.front().mean_average;
  }

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "ablation.csv");
  csv << "variant,contra,corr";
  for (std::size_t s = 0; s < n_seeds; ++s) csv << ",acc_seed_" << rows.front().cells[s].seed;
  csv << ",acc_avg_mean,delta,errors\n";
  for (const auto& row : rows) {
    csv << row.variant.name << ',' << row.variant.contra << ',' << row.variant.corr;
    std::string errors;
    for (const auto& c : row.cells) {
      csv << ',' << (c.final_average ? fixed(*c.final_average) : "");
      if (!c.error.empty()) {
        std::string msg = c.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        errors += (errors.empty() ? "" : " | ") + ("seed " + std::to_string(c.seed) + ": " + msg);
      }
    }
    csv << ',' << (row.mean_average ? fixed(*row.mean_average) : "") << ','
        << (row.delta ? fixed(*row.delta) : "") << ',' << errors << '\n';
  }
  return rows;
}

std::vector<SweepPoint> sweep(const json& base_config, const std::string& param,
                              std::span<const std::string> values, const fs::path& out_dir,
                              std::size_t threads) {
  const auto& keys = config_keys();
  if (std::find(keys.begin(), keys.end(), param) == keys.end()) {
    throw FormatError("sweep: unknown parameter '" + param + "'");
  }
  ExperimentConfig::from_json(base_config);  // validate the base before fanning out

  std::vector<SweepPoint> points;
  for (const auto& v : values) points.push_back({v, {}, {}});
  parallel_for(points.size(), threads, [&](std::size_t i) {
    try {
      json cfg_json = base_config;
      try {
        cfg_json[param] = json::parse(points[i].value);
      } catch (const json::parse_error&) {
        cfg_json[param] = points[i].value;
      }
      const auto cfg = ExperimentConfig::from_json(cfg_json);
      const auto dir = out_dir / (param + "_" + std::to_string(i));
      points[i].final_average = run_experiment(cfg, dir, 1).run.metrics.back().average_accuracy;
    } catch (const std::exception& e) {
      points[i].error = e.what();
    }
  });

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "sweep.csv");
  csv << param << ",acc_avg_final,error\n";
  for (const auto& p : points) {
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    csv << p.value << ',' << (p.final_average ? fixed(*p.final_average) : "") << ',' << err << '\n';
  }
  return points;
}

void gen_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const DatasetBundle data = cfg.load_data();
  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < data.clients(); ++k) {
    write_csv(out_dir / ("client_" + std::to_string(k) + "_train.csv"), data.train[k]);
    write_csv(out_dir / ("client_" + std::to_string(k) + "_test.csv"), data.test[k]);
  }
  write_csv(out_dir / "pooled_test.csv", data.pooled_test);
}

}  // namespace fedlab
