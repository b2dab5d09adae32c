#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fedtn/config.hpp"

namespace fedtn::report {

// Deterministic decimal formatting used by every CSV emitter.
std::string format_double(double v);

nlohmann::ordered_json metrics_to_json(const train::MetricsReport& m);

// history.csv: `round,client,loss,test_acc,test_auc,bytes_total`, one row per
// client per round.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<fed::RoundReport>& history);

// roc.csv: `fpr,tpr`
void write_roc_csv(const std::filesystem::path& path,
                   const std::vector<train::RocPoint>& points);

void write_summary_json(const std::filesystem::path& path,
                        const cli::ExperimentConfig& cfg,
                        const fed::FederationResult& result);

// Model checkpoint; decimal values round-trip exactly.
void save_checkpoint(const std::filesystem::path& path, const model::ModelParams& p);
model::ModelParams load_checkpoint(const std::filesystem::path& path);

void write_partition_manifest(const std::filesystem::path& path,
                              const std::vector<data::Dataset>& shards,
                              const std::vector<std::string>& files);

}  // namespace fedtn::report
