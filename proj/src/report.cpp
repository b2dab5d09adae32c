#include "fedtn/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace fedtn::report {

namespace {

using nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw format_error("cannot write " + path.string());
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ordered_json metrics_to_json(const train::MetricsReport& m) {
  ordered_json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["specificity"] = m.specificity;
  j["sensitivity"] = m.sensitivity;
  if (std::isnan(m.auc)) {
    j["auc"] = nullptr;
  } else {
    j["auc"] = m.auc;
  }
  return j;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<fed::RoundReport>& history) {
  auto out = open_out(path);
  out << "round,client,loss,test_acc,test_auc,bytes_total\n";
  for (const auto& r : history) {
    for (const auto& c : r.per_client) {
      out << r.round << ',' << c.id << ',' << format_double(c.train_loss) << ','
          << format_double(r.global_metrics.accuracy) << ','
          << format_double(r.global_metrics.auc) << ',' << r.bytes_exchanged << "\n";
    }
  }
}

void write_roc_csv(const std::filesystem::path& path,
                   const std::vector<train::RocPoint>& points) {
  auto out = open_out(path);
  out << "fpr,tpr\n";
  for (const auto& p : points) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << "\n";
  }
}

void write_summary_json(const std::filesystem::path& path,
                        const cli::ExperimentConfig& cfg,
                        const fed::FederationResult& result) {
  ordered_json j;
  j["schema_version"] = 1;
  j["config"] = cli::to_json(cfg);
  j["rounds_completed"] = result.history.size();
  j["stopped_early"] = result.stopped_early;
  j["bytes_total"] =
      result.history.empty() ? 0 : result.history.back().bytes_exchanged;
  if (!result.history.empty()) {
    j["test"] = metrics_to_json(result.history.back().global_metrics);
    ordered_json clients = ordered_json::array();
    for (const auto& c : result.history.back().per_client) {
      clients.push_back({{"id", c.id}, {"n_samples", c.n_samples}, {"loss", c.train_loss}});
    }
    j["clients"] = clients;
  }
  if (result.has_val_metrics) {
    j["val"] = metrics_to_json(result.final_val_metrics);
  }
  if (result.error) {
    j["error"] = {{"round", result.error_round}, {"message", *result.error}};
  } else {
    j["error"] = nullptr;
  }
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void save_checkpoint(const std::filesystem::path& path, const model::ModelParams& p) {
  ordered_json j;
  j["schema_version"] = 1;
  j["topology"] = qtn::to_string(p.desc.topology);
  j["block"] = qtn::to_string(p.desc.block.type);
  j["layers"] = p.desc.block.layers;
  j["n_qubits"] = p.desc.n_qubits;
  j["patch_side"] = p.desc.patch_side;
  j["n_patches"] = p.desc.n_patches;
  j["head_kind"] = model::to_string(p.desc.head);
  j["quantum"] = std::vector<double>(p.quantum.begin(), p.quantum.end());
  j["head_weights"] = std::vector<double>(p.head_weights.begin(), p.head_weights.end());
  j["head_bias"] = p.head_bias;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

model::ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw format_error("cannot open checkpoint " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error("checkpoint " + path.string() + ": " + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) {
      throw format_error("checkpoint missing field `" + std::string(key) + "`");
    }
    return *it;
  };
  model::ModelParams p;
  const std::string topology = need("topology").get<std::string>();
  if (topology == "mps") {
    p.desc.topology = qtn::TopologyKind::Mps;
  } else if (topology == "ttn") {
    p.desc.topology = qtn::TopologyKind::Ttn;
  } else if (topology == "mera") {
    p.desc.topology = qtn::TopologyKind::Mera;
  } else {
    throw format_error("checkpoint has unknown topology \"" + topology + "\"");
  }
  const std::string block = need("block").get<std::string>();
  if (block == "simple") {
    p.desc.block.type = qtn::BlockType::Simple;
  } else if (block == "strong") {
    p.desc.block.type = qtn::BlockType::StronglyEntangling;
  } else {
    throw format_error("checkpoint has unknown block \"" + block + "\"");
  }
  p.desc.block.layers = need("layers").get<int>();
  p.desc.n_qubits = need("n_qubits").get<int>();
  p.desc.patch_side = need("patch_side").get<int>();
  p.desc.n_patches = need("n_patches").get<int>();
  const std::string head = need("head_kind").get<std::string>();
  if (head == "dense") {
    p.desc.head = model::HeadKind::Dense;
  } else if (head == "gap") {
    p.desc.head = model::HeadKind::Gap;
  } else {
    throw format_error("checkpoint has unknown head \"" + head + "\"");
  }
  const auto quantum = need("quantum").get<std::vector<double>>();
  p.quantum = Eigen::Map<const Eigen::VectorXd>(quantum.data(),
                                                static_cast<Eigen::Index>(quantum.size()));
  const auto weights = need("head_weights").get<std::vector<double>>();
  p.head_weights = Eigen::Map<const Eigen::VectorXd>(
      weights.data(), static_cast<Eigen::Index>(weights.size()));
  p.head_bias = need("head_bias").get<double>();

  const auto tmpl = model::template_for(p.desc);
  if (p.quantum.size() != tmpl.seq.n_params) {
    throw format_error("checkpoint quantum parameter count does not match template");
  }
  if (p.desc.head == model::HeadKind::Dense &&
      p.head_weights.size() != p.desc.n_patches) {
    throw format_error("checkpoint head weight count does not match n_patches");
  }
  if (!p.quantum.allFinite() || !p.head_weights.allFinite() ||
      !std::isfinite(p.head_bias)) {
    throw format_error("checkpoint contains non-finite parameters");
  }
  return p;
}

void write_partition_manifest(const std::filesystem::path& path,
                              const std::vector<data::Dataset>& shards,
                              const std::vector<std::string>& files) {
  ordered_json clients = ordered_json::array();
  long total = 0;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    ordered_json c;
    c["id"] = shards[i].name;
    c["file"] = files[i];
    c["n_label0"] = shards[i].count_label(0);
    c["n_label1"] = shards[i].count_label(1);
    clients.push_back(c);
    total += shards[i].size();
  }
  ordered_json j;
  j["clients"] = clients;
  j["total"] = total;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace fedtn::report
