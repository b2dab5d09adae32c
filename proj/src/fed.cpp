#include "fedtn/fed.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <thread>

#include "fedtn/config.hpp"
#include "fedtn/rng.hpp"

namespace fedtn::fed {

namespace {

constexpr std::uint64_t kTagDpStream = 0x6470ULL;

void check_shape(const model::ModelParams& a, const model::ModelParams& b,
                 const char* what) {
  if (!(a.desc == b.desc) || a.quantum.size() != b.quantum.size() ||
      a.head_weights.size() != b.head_weights.size()) {
    throw std::invalid_argument(std::string(what) + ": parameter shape mismatch");
  }
}

}  // namespace

std::uint64_t client_round_seed(std::uint64_t global_seed, int round,
                                std::string_view client_id) {
  return mix64(mix64(global_seed ^ mix64(static_cast<std::uint64_t>(round) + 1)) ^
               hash_str(client_id));
}

std::uint64_t client_dp_seed(std::uint64_t global_seed, int round,
                             std::string_view client_id) {
  return mix64(client_round_seed(global_seed, round, client_id) ^ kTagDpStream);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FEDTN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void broadcast(const ServerState& server, std::vector<ClientState>& clients) {
  for (auto& c : clients) {
    check_shape(server.global_params, c.params, "broadcast");
    c.params = server.global_params;
  }
}

void aggregate(ServerState& server, std::vector<ClientUpdate> updates) {
  if (updates.empty()) {
    throw std::invalid_argument("aggregate needs at least one client update");
  }
  std::sort(updates.begin(), updates.end(),
            [](const ClientUpdate& a, const ClientUpdate& b) { return a.id < b.id; });
  for (const auto& u : updates) {
    check_shape(server.global_params, u.params, "aggregate");
  }

  // anchored mean: theta_0 + sum_h w_h (theta_h - theta_0). Identical inputs
  // contribute exact zeros, so averaging H copies of theta returns theta
  // bit-for-bit.
  const Eigen::VectorXd anchor = model::flatten(updates.front().params);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(anchor.size());
  if (server.aggregation == Aggregation::Mean) {
    for (const auto& u : updates) {
      acc += model::flatten(u.params) - anchor;
    }
    acc /= static_cast<double>(updates.size());
  } else {
    double total = 0.0;
    for (const auto& u : updates) total += static_cast<double>(u.n_samples);
    if (total <= 0.0) {
      throw std::invalid_argument("weighted aggregation needs positive sample counts");
    }
    for (const auto& u : updates) {
      acc += (static_cast<double>(u.n_samples) / total) *
             (model::flatten(u.params) - anchor);
    }
  }
  const Eigen::VectorXd mean = anchor + acc;

  Eigen::VectorXd next;
  if (server.server_lr == 1.0) {
    next = mean;
  } else {
    const Eigen::VectorXd current = model::flatten(server.global_params);
    next = current - server.server_lr * (current - mean);
  }
  model::unflatten(server.global_params, next);
  server.round += 1;
}

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const RoundOptions& opts, const data::Dataset& test_set,
                      long long bytes_so_far) {
  if (clients.empty()) {
    throw std::invalid_argument("run_round needs at least one client");
  }
  if (opts.local_epochs < 1) {
    throw std::invalid_argument("local_epochs must be >= 1");
  }
  const int round = server.round;
  broadcast(server, clients);

  const int n_workers = std::min<int>(resolve_threads(opts.threads),
                                      static_cast<int>(clients.size()));
  std::vector<double> losses(clients.size(), 0.0);
  auto train_client = [&](std::size_t i) {
    ClientState& c = clients[i];
    std::optional<train::DPConfig> dp = c.dp;
    if (dp) dp->rng_seed = client_dp_seed(opts.global_seed, round, c.id);
    auto result = train::train_local(std::move(c.params), c.dataset,
                                     opts.local_epochs, opts.batch_size, c.opt, dp,
                                     client_round_seed(opts.global_seed, round, c.id));
    c.params = std::move(result.params);
    losses[i] = result.mean_loss;
  };
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < clients.size(); ++i) train_client(i);
  } else {
    // waves of at most n_workers clients; each client owns its seed streams
    // so scheduling cannot change the result
    for (std::size_t start = 0; start < clients.size();
         start += static_cast<std::size_t>(n_workers)) {
      std::vector<std::future<void>> wave;
      const std::size_t end =
          std::min(clients.size(), start + static_cast<std::size_t>(n_workers));
      for (std::size_t i = start; i < end; ++i) {
        wave.push_back(std::async(std::launch::async, train_client, i));
      }
      for (auto& f : wave) f.get();
    }
  }

  std::vector<ClientUpdate> updates;
  updates.reserve(clients.size());
  for (const auto& c : clients) {
    updates.push_back({c.id, c.params, c.dataset.size()});
  }
  aggregate(server, std::move(updates));

  RoundReport report;
  report.round = server.round;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    report.per_client.push_back({clients[i].id, losses[i], clients[i].dataset.size()});
  }
  report.global_metrics = train::evaluate(server.global_params, test_set);
  const long long p = model::total_param_count(server.global_params);
  report.bytes_exchanged =
      bytes_so_far + 2LL * static_cast<long long>(clients.size()) * p * 4LL;
  return report;
}

FederationResult run_federation(const cli::ExperimentConfig& cfg) {
  // data pipeline: load -> optional resize -> split -> partition
  data::Dataset full;
  switch (cfg.dataset.source) {
    case cli::DatasetSpec::Source::Csv:
      full = data::load_csv(cfg.dataset.path);
      break;
    case cli::DatasetSpec::Source::PgmDir:
      full = data::load_pgm_dir(cfg.dataset.dir, cfg.dataset.labels);
      break;
    case cli::DatasetSpec::Source::Synth:
      full = data::synth_blobs(cfg.dataset.n, cfg.dataset.h, cfg.dataset.w,
                               cfg.dataset.noise_sd, cli::dataset_seed(cfg));
      break;
  }
  if (cfg.resize) {
    for (auto& s : full.samples) {
      s = data::downscale(s, (*cfg.resize)[0], (*cfg.resize)[1]);
    }
  }
  auto split = data::train_val_test_split(full, cfg.split.train, cfg.split.val,
                                          cfg.split.test, cli::split_seed(cfg));
  auto shards = data::partition(split.train, cli::materialize_partition(cfg));

  const int n_qubits = cfg.patch_side * cfg.patch_side;
  const auto tmpl = qtn::build_topology(cfg.topology, n_qubits, cfg.block);
  const int h = split.train.height();
  const int w = split.train.width();
  if (h % cfg.patch_side != 0 || w % cfg.patch_side != 0) {
    throw std::invalid_argument("image size " + std::to_string(h) + "x" +
                                std::to_string(w) + " is not divisible by patch_side");
  }
  const int n_patches = (h / cfg.patch_side) * (w / cfg.patch_side);
  auto params0 = model::init_params(tmpl, cfg.head, n_patches, cli::init_seed(cfg));

  FederationResult result;
  ServerState server{params0, 0, cfg.server_lr, cfg.aggregation};
  std::vector<ClientState> clients;
  const int total = model::total_param_count(params0);
  for (std::size_t i = 0; i < shards.size(); ++i) {
    ClientState c;
    c.id = shards[i].name;  // H1, H2, ...
    c.dataset = std::move(shards[i]);
    if (c.dataset.empty()) {
      throw std::invalid_argument("client " + c.id + " received no samples");
    }
    c.params = params0;
    c.opt = train::AdamState::init(total, cfg.lr, cfg.weight_decay);
    if (cfg.dp.enabled) {
      c.dp = train::DPConfig{cfg.dp.clip, cfg.dp.epsilon, 0};
    }
    clients.push_back(std::move(c));
  }

  RoundOptions opts{cfg.local_epochs, cfg.batch_size, cfg.seed, cfg.threads};
  long long bytes = 0;
  int streak = 0;
  for (int r = 0; r < cfg.rounds; ++r) {
    RoundReport report;
    try {
      report = run_round(server, clients, opts, split.test, bytes);
    } catch (const numeric_error& e) {
      result.error = e.what();
      result.error_round = server.round + 1;
      break;
    }
    bytes = report.bytes_exchanged;
    const double acc = report.global_metrics.accuracy;
    result.history.push_back(std::move(report));
    if (cfg.target_accuracy && acc >= *cfg.target_accuracy) {
      if (++streak >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    } else {
      streak = 0;
    }
  }
  result.final_params = server.global_params;
  if (!split.val.empty()) {
    result.final_val_metrics = train::evaluate(server.global_params, split.val);
    result.has_val_metrics = true;
  }
  return result;
}

}  // namespace fedtn::fed
