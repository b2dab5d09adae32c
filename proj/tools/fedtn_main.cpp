#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fedtn/config.hpp"
#include "fedtn/report.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fedtn;

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> out_dir) {
  auto cfg = cli::load_config_file(config_path);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.output_dir = *out_dir;

  fs::create_directories(cfg.output_dir);
  auto result = fed::run_federation(cfg);

  const fs::path out(cfg.output_dir);
  report::write_history_csv(out / "history.csv", result.history);
  report::write_summary_json(out / "summary.json", cfg, result);
  report::save_checkpoint(out / "model_final.json", result.final_params);
  const std::vector<train::RocPoint> roc =
      result.history.empty() ? std::vector<train::RocPoint>{}
                             : result.history.back().global_metrics.roc;
  report::write_roc_csv(out / "roc.csv", roc);

  if (result.error) {
    std::cerr << "numeric error in round " << result.error_round << ": "
              << *result.error << "\n";
    return 3;
  }
  std::cout << "completed " << result.history.size() << " round(s)";
  if (!result.history.empty()) {
    std::cout << ", test accuracy "
              << result.history.back().global_metrics.accuracy << ", auc "
              << result.history.back().global_metrics.auc;
  }
  std::cout << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             double threshold) {
  const auto params = report::load_checkpoint(model_path);
  const auto dataset = data::load_csv(data_path);
  const auto metrics = train::evaluate(params, dataset, threshold);
  std::cout << report::metrics_to_json(metrics).dump(2) << "\n";
  return 0;
}

int cmd_partition(const std::string& data_path, const std::string& spec_path,
                  const std::string& out_dir) {
  const auto dataset = data::load_csv(data_path);

  std::ifstream in(spec_path);
  if (!in) {
    throw format_error("cannot open spec " + spec_path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw cli::config_error("(root)", std::string("invalid JSON: ") + e.what());
  }
  // reuse the experiment-config partition schema
  nlohmann::json wrapper;
  wrapper["dataset"] = {{"source", "csv"}, {"path", data_path}};
  wrapper["partition"] = j;
  wrapper["topology"] = "mps";
  wrapper["block"] = "simple";
  wrapper["patch_side"] = 2;
  wrapper["head"] = "gap";
  wrapper["rounds"] = 0;
  auto cfg = cli::parse_config(wrapper);

  auto shards = data::partition(dataset, cli::materialize_partition(cfg));
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  for (const auto& shard : shards) {
    const std::string name = shard.name + ".csv";
    data::save_csv(shard, fs::path(out_dir) / name);
    files.push_back(name);
  }
  report::write_partition_manifest(fs::path(out_dir) / "partition_manifest.json",
                                   shards, files);
  std::cout << "wrote " << shards.size() << " client file(s) to " << out_dir << "\n";
  return 0;
}

int cmd_synth(int n, int h, int w, double noise_sd, std::uint64_t seed,
              const std::string& out_file) {
  const auto dataset = data::synth_blobs(n, h, w, noise_sd, seed);
  data::save_csv(dataset, out_file);
  std::cout << "wrote " << dataset.size() << " samples to " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated quantum tensor-network classifier simulator"};
  app.set_help_flag("--help", "print help and exit");  // frees --h for synth
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "run a federated experiment from a config file");
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  train_cmd->add_option("--config", config_path, "experiment config JSON")->required();
  train_cmd->add_option("--seed", seed_override, "override config seed");
  train_cmd->add_option("--out", out_override, "override output directory");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a CSV dataset");
  std::string model_path, data_path;
  double threshold = 0.5;
  eval_cmd->add_option("--model", model_path, "model checkpoint JSON")->required();
  eval_cmd->add_option("--data", data_path, "dataset CSV")->required();
  eval_cmd->add_option("--threshold", threshold, "decision threshold (default 0.5)");

  auto* part_cmd = app.add_subcommand("partition", "materialize per-client CSV shards");
  std::string part_data, part_spec, part_out;
  part_cmd->add_option("--data", part_data, "dataset CSV")->required();
  part_cmd->add_option("--spec", part_spec, "partition spec JSON")->required();
  part_cmd->add_option("--out", part_out, "output directory")->required();

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset CSV");
  int n = 800, h = 8, w = 8;
  double noise_sd = 0.1;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth_cmd->add_option("--n", n, "number of samples");
  synth_cmd->add_option("--h", h, "image height");
  synth_cmd->add_option("--w", w, "image width");
  synth_cmd->add_option("--noise", noise_sd, "pixel noise standard deviation");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(config_path, seed_override, out_override);
    if (*eval_cmd) return cmd_eval(model_path, data_path, threshold);
    if (*part_cmd) return cmd_partition(part_data, part_spec, part_out);
    if (*synth_cmd) return cmd_synth(n, h, w, noise_sd, synth_seed, synth_out);
  } catch (const fedtn::cli::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fedtn::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const fedtn::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fedtn::format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
