#include "fedtn/config.hpp"

#include <fstream>

#include "fedtn/rng.hpp"

namespace fedtn::cli {

namespace {

using nlohmann::json;

// seed-stream tags (arbitrary fixed constants)
constexpr std::uint64_t kTagDataset = 0x64617461ULL;
constexpr std::uint64_t kTagSplit = 0x73706c69ULL;
constexpr std::uint64_t kTagPartition = 0x70617274ULL;
constexpr std::uint64_t kTagInit = 0x696e6974ULL;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw config_error(field, msg);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) fail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

std::uint64_t get_seed(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    fail(path, "expected a non-negative integer seed");
  }
  return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

DatasetSpec parse_dataset(const json& j) {
  if (!j.is_object()) fail("dataset", "expected an object");
  DatasetSpec d;
  const std::string source = get_string(require(j, "source", "dataset"), "dataset.source");
  if (source == "csv") {
    d.source = DatasetSpec::Source::Csv;
    d.path = get_string(require(j, "path", "dataset"), "dataset.path");
  } else if (source == "pgm_dir") {
    d.source = DatasetSpec::Source::PgmDir;
    d.dir = get_string(require(j, "dir", "dataset"), "dataset.dir");
    d.labels = get_string(require(j, "labels", "dataset"), "dataset.labels");
  } else if (source == "synth") {
    d.source = DatasetSpec::Source::Synth;
    d.n = static_cast<int>(get_integer(require(j, "n", "dataset"), "dataset.n"));
    d.h = static_cast<int>(get_integer(require(j, "h", "dataset"), "dataset.h"));
    d.w = static_cast<int>(get_integer(require(j, "w", "dataset"), "dataset.w"));
    d.noise_sd = get_number(require(j, "noise_sd", "dataset"), "dataset.noise_sd");
    if (d.n < 1) fail("dataset.n", "must be >= 1");
    if (d.noise_sd < 0) fail("dataset.noise_sd", "must be >= 0");
  } else {
    fail("dataset.source", "expected one of csv|pgm_dir|synth, got \"" + source + "\"");
  }
  if (j.contains("seed")) d.seed = get_seed(j["seed"], "dataset.seed");
  return d;
}

PartitionCfg parse_partition(const json& j) {
  if (!j.is_object()) fail("partition", "expected an object");
  PartitionCfg p;
  const bool has_counts = j.contains("counts");
  const bool has_fractions = j.contains("fractions");
  if (has_counts == has_fractions) {
    fail("partition", "give exactly one of `counts` or `fractions`");
  }
  if (has_counts) {
    const json& arr = j["counts"];
    if (!arr.is_array() || arr.empty()) fail("partition.counts", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "partition.counts[" + std::to_string(i) + "]";
      if (!arr[i].is_array() || arr[i].size() != 2) fail(path, "expected [n_label0, n_label1]");
      data::ClientCounts c;
      c.n_label0 = get_integer(arr[i][0], path + "[0]");
      c.n_label1 = get_integer(arr[i][1], path + "[1]");
      if (c.n_label0 < 0 || c.n_label1 < 0) fail(path, "counts must be >= 0");
      p.counts.push_back(c);
    }
  } else {
    const json& arr = j["fractions"];
    if (!arr.is_array() || arr.empty()) fail("partition.fractions", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      p.fractions.push_back(
          get_number(arr[i], "partition.fractions[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("stratified")) p.stratified = get_bool(j["stratified"], "partition.stratified");
  if (j.contains("seed")) p.seed = get_seed(j["seed"], "partition.seed");
  return p;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) {
    throw config_error("(root)", "config must be a JSON object");
  }
  ExperimentConfig cfg;
  cfg.dataset = parse_dataset(require(j, "dataset", ""));
  cfg.partition = parse_partition(require(j, "partition", ""));

  if (j.contains("resize")) {
    const json& r = j["resize"];
    if (!r.is_array() || r.size() != 2) fail("resize", "expected [h, w]");
    cfg.resize = {{static_cast<int>(get_integer(r[0], "resize[0]")),
                   static_cast<int>(get_integer(r[1], "resize[1]"))}};
    if ((*cfg.resize)[0] < 1 || (*cfg.resize)[1] < 1) fail("resize", "must be >= 1");
  }

  if (j.contains("split")) {
    const json& s = j["split"];
    if (!s.is_object()) fail("split", "expected an object");
    if (s.contains("train")) cfg.split.train = get_number(s["train"], "split.train");
    if (s.contains("val")) cfg.split.val = get_number(s["val"], "split.val");
    if (s.contains("test")) cfg.split.test = get_number(s["test"], "split.test");
    if (s.contains("seed")) cfg.split.seed = get_seed(s["seed"], "split.seed");
    if (std::abs(cfg.split.train + cfg.split.val + cfg.split.test - 1.0) > 1e-9) {
      fail("split", "fractions must sum to 1");
    }
  }

  const std::string topology = get_string(require(j, "topology", ""), "topology");
  if (topology == "mps") {
    cfg.topology = qtn::TopologyKind::Mps;
  } else if (topology == "ttn") {
    cfg.topology = qtn::TopologyKind::Ttn;
  } else if (topology == "mera") {
    cfg.topology = qtn::TopologyKind::Mera;
  } else {
    fail("topology", "expected one of mps|ttn|mera, got \"" + topology + "\"");
  }

  const std::string block = get_string(require(j, "block", ""), "block");
  if (block == "simple") {
    cfg.block.type = qtn::BlockType::Simple;
  } else if (block == "strong") {
    cfg.block.type = qtn::BlockType::StronglyEntangling;
  } else {
    fail("block", "expected one of simple|strong, got \"" + block + "\"");
  }
  if (j.contains("layers")) {
    cfg.block.layers = static_cast<int>(get_integer(j["layers"], "layers"));
    if (cfg.block.layers < 1) fail("layers", "must be >= 1");
  }

  cfg.patch_side = static_cast<int>(get_integer(require(j, "patch_side", ""), "patch_side"));
  if (cfg.patch_side < 1) fail("patch_side", "must be >= 1");

  const std::string head = get_string(require(j, "head", ""), "head");
  if (head == "dense") {
    cfg.head = model::HeadKind::Dense;
  } else if (head == "gap") {
    cfg.head = model::HeadKind::Gap;
  } else {
    fail("head", "expected one of dense|gap, got \"" + head + "\"");
  }

  cfg.rounds = static_cast<int>(get_integer(require(j, "rounds", ""), "rounds"));
  if (cfg.rounds < 0) fail("rounds", "must be >= 0");
  if (j.contains("local_epochs")) {
    cfg.local_epochs = static_cast<int>(get_integer(j["local_epochs"], "local_epochs"));
    if (cfg.local_epochs < 1) fail("local_epochs", "must be >= 1");
  }
  if (j.contains("batch_size")) {
    cfg.batch_size = static_cast<int>(get_integer(j["batch_size"], "batch_size"));
    if (cfg.batch_size < 1) fail("batch_size", "must be >= 1");
  }
  if (j.contains("lr")) cfg.lr = get_number(j["lr"], "lr");
  if (j.contains("weight_decay")) cfg.weight_decay = get_number(j["weight_decay"], "weight_decay");
  if (j.contains("server_lr")) cfg.server_lr = get_number(j["server_lr"], "server_lr");
  if (j.contains("aggregation")) {
    const std::string agg = get_string(j["aggregation"], "aggregation");
    if (agg == "mean") {
      cfg.aggregation = fed::Aggregation::Mean;
    } else if (agg == "weighted") {
      cfg.aggregation = fed::Aggregation::WeightedBySamples;
    } else {
      fail("aggregation", "expected one of mean|weighted, got \"" + agg + "\"");
    }
  }
  if (j.contains("dp")) {
    const json& d = j["dp"];
    if (!d.is_object()) fail("dp", "expected an object");
    if (d.contains("enabled")) cfg.dp.enabled = get_bool(d["enabled"], "dp.enabled");
    if (d.contains("clip")) cfg.dp.clip = get_number(d["clip"], "dp.clip");
    if (d.contains("epsilon")) cfg.dp.epsilon = get_number(d["epsilon"], "dp.epsilon");
    if (cfg.dp.clip <= 0) fail("dp.clip", "must be > 0");
    if (cfg.dp.epsilon < 0) fail("dp.epsilon", "must be >= 0");
  }
  if (j.contains("target_accuracy")) {
    cfg.target_accuracy = get_number(j["target_accuracy"], "target_accuracy");
  }
  if (j.contains("patience")) {
    cfg.patience = static_cast<int>(get_integer(j["patience"], "patience"));
    if (cfg.patience < 1) fail("patience", "must be >= 1");
  }
  if (j.contains("seed")) cfg.seed = get_seed(j["seed"], "seed");
  if (j.contains("output_dir")) cfg.output_dir = get_string(j["output_dir"], "output_dir");
  if (j.contains("threads")) {
    cfg.threads = static_cast<int>(get_integer(j["threads"], "threads"));
    if (cfg.threads < 0) fail("threads", "must be >= 0");
  }

  // cross-field checks
  const int n_qubits = cfg.patch_side * cfg.patch_side;
  if (cfg.topology != qtn::TopologyKind::Mps &&
      (n_qubits & (n_qubits - 1)) != 0) {
    fail("patch_side", "patch_side^2 must be a power of two for ttn/mera");
  }
  if (cfg.topology == qtn::TopologyKind::Mera && n_qubits < 4) {
    fail("patch_side", "mera needs patch_side^2 >= 4");
  }
  if (n_qubits < 2) fail("patch_side", "patch_side^2 must be >= 2");
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw format_error("cannot open config " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw config_error("(root)", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json d;
  switch (cfg.dataset.source) {
    case DatasetSpec::Source::Csv:
      d["source"] = "csv";
      d["path"] = cfg.dataset.path;
      break;
    case DatasetSpec::Source::PgmDir:
      d["source"] = "pgm_dir";
      d["dir"] = cfg.dataset.dir;
      d["labels"] = cfg.dataset.labels;
      break;
    case DatasetSpec::Source::Synth:
      d["source"] = "synth";
      d["n"] = cfg.dataset.n;
      d["h"] = cfg.dataset.h;
      d["w"] = cfg.dataset.w;
      d["noise_sd"] = cfg.dataset.noise_sd;
      break;
  }
  if (cfg.dataset.seed) d["seed"] = *cfg.dataset.seed;
  j["dataset"] = d;

  if (cfg.resize) j["resize"] = {(*cfg.resize)[0], (*cfg.resize)[1]};

  nlohmann::ordered_json s;
  s["train"] = cfg.split.train;
  s["val"] = cfg.split.val;
  s["test"] = cfg.split.test;
  if (cfg.split.seed) s["seed"] = *cfg.split.seed;
  j["split"] = s;

  nlohmann::ordered_json p;
  if (cfg.partition.use_counts()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cfg.partition.counts) {
      arr.push_back({c.n_label0, c.n_label1});
    }
    p["counts"] = arr;
  } else {
    p["fractions"] = cfg.partition.fractions;
  }
  p["stratified"] = cfg.partition.stratified;
  if (cfg.partition.seed) p["seed"] = *cfg.partition.seed;
  j["partition"] = p;

  j["topology"] = qtn::to_string(cfg.topology);
  j["block"] = qtn::to_string(cfg.block.type);
  j["layers"] = cfg.block.layers;
  j["patch_side"] = cfg.patch_side;
  j["head"] = model::to_string(cfg.head);
  j["rounds"] = cfg.rounds;
  j["local_epochs"] = cfg.local_epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["server_lr"] = cfg.server_lr;
  j["aggregation"] =
      cfg.aggregation == fed::Aggregation::Mean ? "mean" : "weighted";
  j["dp"] = {{"enabled", cfg.dp.enabled}, {"clip", cfg.dp.clip}, {"epsilon", cfg.dp.epsilon}};
  if (cfg.target_accuracy) j["target_accuracy"] = *cfg.target_accuracy;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  return j;
}

std::uint64_t dataset_seed(const ExperimentConfig& cfg) {
  return cfg.dataset.seed ? *cfg.dataset.seed : mix64(cfg.seed ^ kTagDataset);
}

std::uint64_t split_seed(const ExperimentConfig& cfg) {
  return cfg.split.seed ? *cfg.split.seed : mix64(cfg.seed ^ kTagSplit);
}

std::uint64_t partition_seed(const ExperimentConfig& cfg) {
  return cfg.partition.seed ? *cfg.partition.seed : mix64(cfg.seed ^ kTagPartition);
}

std::uint64_t init_seed(const ExperimentConfig& cfg) {
  return mix64(cfg.seed ^ kTagInit);
}

data::PartitionSpec materialize_partition(const ExperimentConfig& cfg) {
  data::PartitionSpec spec;
  spec.counts = cfg.partition.counts;
  spec.fractions = cfg.partition.fractions;
  spec.stratified = cfg.partition.stratified;
  spec.seed = partition_seed(cfg);
  return spec;
}

}  // namespace fedtn::cli
