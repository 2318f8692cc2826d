#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedlab/clustering.hpp"
#include "fedlab/data.hpp"
#include "fedlab/losses.hpp"
#include "fedlab/model.hpp"
#include "fedlab/rng.hpp"

namespace fedlab {

struct ClientState {
  int id = 0;
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  ModelParams model;
  SgdState optimizer;
  SeededRng rng{0, 0};
};

/// Client -> server. Carries parameters and clustered prototypes only.
struct ClientUpdateMsg {
  int client_id = 0;
  int round = 0;
  ModelParams model;
  std::vector<WeightedPrototypeSet> prototypes;  // one set per class present locally
  std::size_t sample_count = 0;
};

/// Server -> clients at the start of a round.
struct BroadcastMsg {
  int round = 0;
  ModelParams model;
  GlobalPrototypes prototypes;
};

struct ServerState {
  ModelParams global;
  GlobalPrototypes prototypes;
  int round = 0;
};

/// Knobs shared by the client and server sides of a round.
struct ProtocolOptions {
  LossConfig loss;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  Metric metric = Metric::Cosine;
  CentroidMode centroids = CentroidMode::Weighted;
  bool unit_weights = false;  // replace every global weight by 1 before normalizing
};

struct LocalUpdateStats {
  std::size_t steps = 0;
  std::size_t prototype_term_evals = 0;
  double mean_loss = 0.0;
};

/// Resets the client model to the broadcast model and optimizer velocity to
/// zero, then runs `epochs` epochs of shuffled mini-batch SGD on the local
/// objective with the broadcast prototypes held constant.
LocalUpdateStats local_update(ClientState& client, const BroadcastMsg& broadcast,
                              const ProtocolOptions& opts);

/// Features of every local sample, clustered per class with unit weights.
/// Zero feature vectors carry no direction and are left out under the cosine
/// metric; a class with no usable features is omitted.
ClientUpdateMsg build_client_update(const ClientState& client, const ProtocolOptions& opts,
                                    int round = 0);

/// Pools prototypes per class, clusters them again, normalizes the weights,
/// averages models with N_k / N coefficients and advances the round counter.
/// Updates are processed in client-id order, so the result does not depend
/// on arrival order.
BroadcastMsg server_aggregate(ServerState& server, std::span<const ClientUpdateMsg> updates,
                              const ProtocolOptions& opts);

double accuracy(const ModelParams& model, std::span<const LabeledSample> samples);

struct MetricsRow {
  int round = 0;
  std::vector<double> client_accuracy;
  double average_accuracy = 0.0;
  std::optional<double> delta;
  double seconds = 0.0;
};

struct RoundTrace {
  int round = 0;
  std::size_t prototype_term_evals = 0;
  std::size_t global_prototypes = 0;
  double mean_local_loss = 0.0;
};

struct TrainingConfig {
  std::uint64_t seed = 0;
  ModelDims dims;
  ProtocolOptions protocol;
  std::size_t rounds = 30;
  std::size_t threads = 1;
  bool record_wall_time = false;
  std::filesystem::path transport_dir;  // empty = in-process messages
  std::optional<ModelParams> initial_model;
};

struct RunResult {
  ServerState server;
  std::vector<MetricsRow> metrics;
  std::vector<RoundTrace> trace;
};

/// Failure inside a round; the message carries the round number.
class RoundError : public std::runtime_error {
 public:
  RoundError(int round, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}
  int round() const { return round_; }

 private:
  int round_;
};

/// One client per data partition; each client gets its own stream
/// spawn_rng(seed, "client-<k>").
std::vector<ClientState> make_clients(const DatasetBundle& data, const ModelParams& init,
                                      const TrainingConfig& cfg);

/// Runs fn(i) for i in [0, n) on up to `threads` workers and rethrows the
/// first failure by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Global model initialized from spawn_rng(seed, "global-init") unless an
/// initial model is supplied. Round 0 is the evaluation of the initial model.
RunResult run_training(const DatasetBundle& data, const TrainingConfig& cfg);

/// Rounds over an explicit client set; run_training is a thin wrapper.
RunResult run_rounds(ServerState server, std::vector<ClientState>& clients,
                     const TrainingConfig& cfg);

}  // namespace fedlab
