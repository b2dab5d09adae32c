#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fedtn/train.hpp"

namespace fedtn::cli {
struct ExperimentConfig;
}

namespace fedtn::fed {

// A simulated hospital: its private shard, its model replica, and its
// optimizer state. Only params and losses ever leave a client.
struct ClientState {
  std::string id;
  data::Dataset dataset;
  model::ModelParams params;
  train::AdamState opt;
  std::optional<train::DPConfig> dp;
};

enum class Aggregation { Mean, WeightedBySamples };

struct ServerState {
  model::ModelParams global_params;
  int round = 0;
  double server_lr = 1.0;
  Aggregation aggregation = Aggregation::Mean;
};

struct ClientLoss {
  std::string id;
  double train_loss = 0.0;
  long n_samples = 0;
};

struct RoundReport {
  int round = 0;
  std::vector<ClientLoss> per_client;
  train::MetricsReport global_metrics;
  long long bytes_exchanged = 0;  // cumulative, float32 accounting, down + up
};

// Per-round per-client seed streams; pinned so parallel client training is
// schedule-independent and a single-client run can be replayed centrally.
std::uint64_t client_round_seed(std::uint64_t global_seed, int round,
                                std::string_view client_id);
std::uint64_t client_dp_seed(std::uint64_t global_seed, int round,
                             std::string_view client_id);

// Copies the global parameters into every client. Shape mismatch throws.
void broadcast(const ServerState& server, std::vector<ClientState>& clients);

struct ClientUpdate {
  std::string id;
  model::ModelParams params;
  long n_samples = 0;
};

// Federated averaging with an optional server learning rate:
//   theta_s <- theta_s - eta_s * (theta_s - mean)
// which reduces to plain assignment of the mean at eta_s = 1 (taken as an
// exact branch). The mean is computed anchored at the first client in
// canonical (sorted id) order so that averaging H identical parameter sets
// returns them bit-exactly. Increments the round counter.
void aggregate(ServerState& server, std::vector<ClientUpdate> updates);

struct RoundOptions {
  int local_epochs = 1;
  int batch_size = 8;
  std::uint64_t global_seed = 0;
  int threads = 0;  // 0 = FEDTN_THREADS env or hardware concurrency
};

// broadcast -> parallel local training -> aggregate -> evaluate on the test
// set. Adds 2 * H * P * 4 bytes to the communication meter (P = total
// parameter count).
RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const RoundOptions& opts, const data::Dataset& test_set,
                      long long bytes_so_far);

struct FederationResult {
  std::vector<RoundReport> history;
  model::ModelParams final_params;
  train::MetricsReport final_val_metrics;  // empty val set leaves this zeroed
  bool has_val_metrics = false;
  bool stopped_early = false;
  std::optional<std::string> error;
  int error_round = -1;
};

// Builds the dataset, splits, partitions, model and clients from the config,
// then runs rounds until R is reached or the early-stop target holds for
// `patience` consecutive rounds. A numeric error aborts the loop and is
// recorded alongside the partial history.
FederationResult run_federation(const cli::ExperimentConfig& config);

int resolve_threads(int requested);

}  // namespace fedtn::fed
