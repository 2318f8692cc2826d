#include "fedlab/federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <numeric>
#include <thread>

#include "fedlab/errors.hpp"
#include "fedlab/json_io.hpp"

namespace fedlab {

namespace {

void zero_fill(Gradients& g) {
  g.for_each_tensor([](std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
}

void scale(Gradients& g, double s) {
  g.for_each_tensor([s](std::span<double> t) {
    for (double& v : t) v *= s;
  });
}

std::filesystem::path round_dir(const std::filesystem::path& root, int round) {
  return root / ("round_" + std::to_string(round));
}

}  // namespace

LocalUpdateStats local_update(ClientState& client, const BroadcastMsg& broadcast,
                              const ProtocolOptions& opts) {
  if (client.train.empty()) throw DomainError("local_update: client has no training data");
  if (opts.batch_size == 0) throw DomainError("local_update: batch size must be positive");
  opts.loss.validate();

  client.model = broadcast.model;
  client.optimizer = SgdState::for_params(client.model, opts.lr, opts.momentum, opts.weight_decay);

  LocalUpdateStats stats;
  const std::size_t n = client.train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Gradients grads = ModelParams::zeros(client.model.dims);
  double loss_sum = 0.0;
  std::size_t loss_terms = 0;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[client.rng.uniform_index(static_cast<std::uint32_t>(i))]);
    }
    for (std::size_t start = 0; start < n; start += opts.batch_size) {
      const std::size_t stop = std::min(n, start + opts.batch_size);
      zero_fill(grads);
      for (std::size_t b = start; b < stop; ++b) {
        const auto& sample = client.train[order[b]];
        const ForwardResult fwd = forward(client.model, sample.x);
        const LossResult loss =
            total_loss_and_grads(fwd.features, fwd.logits, sample.label, broadcast.prototypes, opts.loss);
        if (loss.prototype_terms_evaluated) ++stats.prototype_term_evals;
        loss_sum += loss.loss;
        ++loss_terms;
        accumulate_backward(client.model, fwd, loss.dloss_dlogits, loss.dloss_dfeatures, grads);
      }
      scale(grads, 1.0 / static_cast<double>(stop - start));
      sgd_step(client.model, grads, client.optimizer);
      ++stats.steps;
    }
  }
  stats.mean_loss = loss_terms > 0 ? loss_sum / static_cast<double>(loss_terms) : 0.0;
  return stats;
}

ClientUpdateMsg build_client_update(const ClientState& client, const ProtocolOptions& opts,
                                    int round) {
  ClientUpdateMsg msg;
  msg.client_id = client.id;
  msg.round = round;
  msg.model = client.model;
  msg.sample_count = client.train.size();

  std::map<int, std::vector<WeightedPoint>> per_class;
  for (const auto& sample : client.train) {
    DenseVec z = forward(client.model, sample.x).features;
    if (opts.metric == Metric::Cosine && is_zero(z)) continue;
    per_class[sample.label].push_back({std::move(z), 1.0});
  }
  for (const auto& [label, points] : per_class) {
    msg.prototypes.push_back(finch_star(points, opts.metric, opts.centroids, label));
  }
  return msg;
}

BroadcastMsg server_aggregate(ServerState& server, std::span<const ClientUpdateMsg> updates,
                              const ProtocolOptions& opts) {
  if (updates.empty()) throw DomainError("server_aggregate: no client updates");
  std::vector<const ClientUpdateMsg*> sorted;
  for (const auto& u : updates) sorted.push_back(&u);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  std::map<int, std::vector<WeightedPoint>> pooled;
  std::vector<ModelParams> models;
  std::vector<std::size_t> counts;
  for (const auto* u : sorted) {
    if (!u->model.same_shape(sorted.front()->model)) {
      throw ShapeError("server_aggregate: client " + std::to_string(u->client_id) +
                       " sent a model of a different shape");
    }
    for (const auto& set : u->prototypes) {
      auto& dst = pooled[set.class_label];
      dst.insert(dst.end(), set.prototypes.begin(), set.prototypes.end());
    }
    models.push_back(u->model);
    counts.push_back(u->sample_count);
  }

  GlobalPrototypes global;
  for (auto& [label, points] : pooled) {
    if (points.empty()) continue;
    WeightedPrototypeSet set = finch_star(points, opts.metric, opts.centroids, label);
    if (opts.unit_weights) {
      for (auto& p : set.prototypes) p.weight = 1.0;
    }
    global.by_class[label] = normalize_weights(std::move(set)).prototypes;
  }

  server.global = average_models(models, counts);
  server.prototypes = std::move(global);
  ++server.round;
  return BroadcastMsg{server.round + 1, server.global, server.prototypes};
}

double accuracy(const ModelParams& model, std::span<const LabeledSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (argmax(forward(model, s.x).logits) == static_cast<std::size_t>(s.label)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<ClientState> make_clients(const DatasetBundle& data, const ModelParams& init,
                                      const TrainingConfig& cfg) {
  data.validate();
  std::vector<ClientState> clients;
  for (std::size_t k = 0; k < data.clients(); ++k) {
    ClientState c;
    c.id = static_cast<int>(k);
    c.train = data.train[k];
    c.test = data.test[k];
    c.model = init;
    c.optimizer = SgdState::for_params(init, cfg.protocol.lr, cfg.protocol.momentum,
                                       cfg.protocol.weight_decay);
    c.rng = spawn_rng(cfg.seed, "client-" + std::to_string(k));
    clients.push_back(std::move(c));
  }
  return clients;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

MetricsRow evaluate(const ModelParams& model, const std::vector<ClientState>& clients, int round) {
  MetricsRow row;
  row.round = round;
  for (const auto& c : clients) row.client_accuracy.push_back(accuracy(model, c.test));
  row.average_accuracy = std::accumulate(row.client_accuracy.begin(), row.client_accuracy.end(), 0.0) /
                         static_cast<double>(row.client_accuracy.size());
  return row;
}

}  // namespace

RunResult run_rounds(ServerState server, std::vector<ClientState>& clients,
                     const TrainingConfig& cfg) {
  if (clients.empty()) throw DomainError("run_training: no clients");
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  auto elapsed = [&] {
    return cfg.record_wall_time ? std::chrono::duration<double>(Clock::now() - started).count() : 0.0;
  };
  const bool files = !cfg.transport_dir.empty();

  RunResult result;
  result.metrics.push_back(evaluate(server.global, clients, 0));
  result.metrics.back().seconds = elapsed();

  BroadcastMsg broadcast{server.round + 1, server.global, server.prototypes};
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const int round = broadcast.round;
    try {
      if (files) {
        const auto path = round_dir(cfg.transport_dir, round) / "broadcast.json";
        write_json_file(path, to_json(broadcast));
        broadcast = broadcast_from_json(read_json_file(path));
      }
      std::vector<ClientUpdateMsg> updates(clients.size());
      std::vector<LocalUpdateStats> stats(clients.size());
      parallel_for(clients.size(), cfg.threads, [&](std::size_t i) {
        stats[i] = local_update(clients[i], broadcast, cfg.protocol);
        updates[i] = build_client_update(clients[i], cfg.protocol, round);
      });
      if (files) {
        for (auto& u : updates) {
          const auto path =
              round_dir(cfg.transport_dir, round) / ("client_" + std::to_string(u.client_id) + ".json");
          write_json_file(path, to_json(u));
          u = client_update_from_json(read_json_file(path));
        }
      }
      RoundTrace trace;
      trace.round = round;
      for (const auto& s : stats) {
        trace.prototype_term_evals += s.prototype_term_evals;
        trace.mean_local_loss += s.mean_loss / static_cast<double>(stats.size());
      }
      broadcast = server_aggregate(server, updates, cfg.protocol);
      trace.global_prototypes = server.prototypes.size();
      result.trace.push_back(trace);
      result.metrics.push_back(evaluate(server.global, clients, round));
      result.metrics.back().seconds = elapsed();
    } catch (const RoundError&) {
      throw;
    } catch (const std::exception& e) {
      throw RoundError(round, e.what());
    }
  }
  if (files && cfg.rounds > 0) {
    write_json_file(round_dir(cfg.transport_dir, broadcast.round) / "broadcast.json", to_json(broadcast));
  }
  result.server = std::move(server);
  return result;
}

RunResult run_training(const DatasetBundle& data, const TrainingConfig& cfg) {
  cfg.protocol.loss.validate();
  ServerState server;
  if (cfg.initial_model) {
    if (!(cfg.initial_model->dims == cfg.dims)) throw ShapeError("initial model does not match dims");
    server.global = *cfg.initial_model;
  } else {
    SeededRng init_rng = spawn_rng(cfg.seed, "global-init");
    server.global = ModelParams::init(cfg.dims, init_rng);
  }
  auto clients = make_clients(data, server.global, cfg);
  return run_rounds(std::move(server), clients, cfg);
}

}  // namespace fedlab
