#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "fedtn/fed.hpp"

namespace fedtn::cli {

// Schema violations carry the offending field path for exit-code-2 reporting.
struct config_error : std::runtime_error {
  std::string field;
  config_error(std::string field_path, const std::string& msg)
      : std::runtime_error("config field `" + field_path + "`: " + msg),
        field(std::move(field_path)) {}
};

struct DatasetSpec {
  enum class Source { Csv, PgmDir, Synth };
  Source source = Source::Synth;
  std::string path;    // csv
  std::string dir;     // pgm_dir
  std::string labels;  // pgm_dir
  int n = 800;         // synth
  int h = 8;
  int w = 8;
  double noise_sd = 0.1;
  std::optional<std::uint64_t> seed;  // defaults to a stream derived from `seed`
};

struct SplitSpec {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;
  std::optional<std::uint64_t> seed;
};

struct PartitionCfg {
  std::vector<data::ClientCounts> counts;
  std::vector<double> fractions;
  bool stratified = true;
  std::optional<std::uint64_t> seed;

  bool use_counts() const { return !counts.empty(); }
  std::size_t n_clients() const {
    return use_counts() ? counts.size() : fractions.size();
  }
};

struct DpCfg {
  bool enabled = false;
  double clip = 1.0;
  double epsilon = 0.0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::optional<std::array<int, 2>> resize;  // [h, w]
  SplitSpec split;
  PartitionCfg partition;
  qtn::TopologyKind topology = qtn::TopologyKind::Ttn;
  qtn::BlockKind block;
  int patch_side = 2;
  model::HeadKind head = model::HeadKind::Gap;
  int rounds = 1;
  int local_epochs = 1;
  int batch_size = 8;
  double lr = 0.001;
  double weight_decay = 1e-4;
  double server_lr = 1.0;
  fed::Aggregation aggregation = fed::Aggregation::Mean;
  DpCfg dp;
  std::optional<double> target_accuracy;  // absent = run all rounds
  int patience = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int threads = 0;  // 0 = FEDTN_THREADS env or hardware concurrency
};

// Throws config_error naming the field path on any schema violation.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Inverse of parse_config; round-trips every field value.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

// Seed-stream derivations used when the optional sub-seeds are absent.
std::uint64_t dataset_seed(const ExperimentConfig& cfg);
std::uint64_t split_seed(const ExperimentConfig& cfg);
std::uint64_t partition_seed(const ExperimentConfig& cfg);
std::uint64_t init_seed(const ExperimentConfig& cfg);

data::PartitionSpec materialize_partition(const ExperimentConfig& cfg);

}  // namespace fedtn::cli
