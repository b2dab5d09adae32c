#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedtn/data.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("fedtn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(FEDTN_BIN_PATH) + " " + args;
  if (!stdout_file.empty()) {
    cmd += " > " + stdout_file.string();
  } else {
    cmd += " > /dev/null";
  }
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

nlohmann::json base_config(const TempDir& tmp) {
  nlohmann::json j;
  j["dataset"] = {{"source", "synth"}, {"n", 60}, {"h", 4}, {"w", 4}, {"noise_sd", 0.1}};
  j["partition"] = {{"fractions", {0.5, 0.5}}};
  j["topology"] = "ttn";
  j["block"] = "simple";
  j["patch_side"] = 2;
  j["head"] = "dense";
  j["rounds"] = 2;
  j["seed"] = 11;
  j["threads"] = 1;
  j["output_dir"] = (tmp.path / "out").string();
  return j;
}

}  // namespace

TEST_CASE("synth writes a loadable dataset") {
  TempDir tmp;
  const auto file = tmp.path / "synth.csv";
  CHECK(run("synth --n 10 --h 4 --w 4 --noise 0.1 --seed 3 --out " + file.string()) == 0);
  auto d = fedtn::data::load_csv(file);
  CHECK(d.size() == 10);
  CHECK(d.count_label(1) == 5);
}

TEST_CASE("train writes the four outputs and is byte-reproducible") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "cfg.json";
  write_file(cfg_path, base_config(tmp).dump());
  REQUIRE(run("train --config " + cfg_path.string()) == 0);

  const fs::path out = tmp.path / "out";
  for (const char* name : {"history.csv", "summary.json", "model_final.json", "roc.csv"}) {
    CHECK(fs::exists(out / name));
  }

  const std::string history = slurp(out / "history.csv");
  // header + rounds * clients rows
  CHECK(std::count(history.begin(), history.end(), '\n') == 1 + 2 * 2);

  // rerun into a second directory: identical bytes
  REQUIRE(run("train --config " + cfg_path.string() + " --out " +
              (tmp.path / "out2").string()) == 0);
  CHECK(slurp(tmp.path / "out2" / "history.csv") == history);
  CHECK(slurp(tmp.path / "out2" / "model_final.json") == slurp(out / "model_final.json"));
  CHECK(slurp(tmp.path / "out2" / "roc.csv") == slurp(out / "roc.csv"));
}

TEST_CASE("train rejects a bad config with exit 2 naming the field") {
  TempDir tmp;
  auto j = base_config(tmp);
  j["topology"] = "peps";
  const auto cfg_path = tmp.path / "bad.json";
  write_file(cfg_path, j.dump());
  CHECK(run("train --config " + cfg_path.string()) == 2);
}

TEST_CASE("eval prints metrics for a trained model and rejects bad shapes") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "cfg.json";
  write_file(cfg_path, base_config(tmp).dump());
  REQUIRE(run("train --config " + cfg_path.string()) == 0);

  const auto data_path = tmp.path / "eval.csv";
  REQUIRE(run("synth --n 12 --h 4 --w 4 --noise 0.1 --seed 5 --out " +
              data_path.string()) == 0);

  const auto json_out = tmp.path / "metrics.json";
  const auto model = (tmp.path / "out" / "model_final.json").string();
  REQUIRE(run("eval --model " + model + " --data " + data_path.string(), json_out) == 0);
  auto metrics = nlohmann::json::parse(slurp(json_out));
  for (const char* key : {"tp", "fp", "tn", "fn", "accuracy", "precision", "recall",
                          "f1", "specificity", "sensitivity", "auc"}) {
    CHECK(metrics.contains(key));
  }
  CHECK(metrics["tp"].get<int>() + metrics["fp"].get<int>() +
            metrics["tn"].get<int>() + metrics["fn"].get<int>() ==
        12);

  // threshold 0 marks everything positive
  REQUIRE(run("eval --model " + model + " --data " + data_path.string() +
              " --threshold 0",
              json_out) == 0);
  auto all_pos = nlohmann::json::parse(slurp(json_out));
  CHECK(all_pos["fn"] == 0);
  CHECK(all_pos["tn"] == 0);

  // wrong image size for the checkpoint
  const auto wrong = tmp.path / "wrong.csv";
  REQUIRE(run("synth --n 6 --h 6 --w 6 --noise 0.1 --seed 5 --out " + wrong.string()) == 0);
  CHECK(run("eval --model " + model + " --data " + wrong.string()) == 2);
}

TEST_CASE("partition materializes shards with a manifest") {
  TempDir tmp;
  const auto data_path = tmp.path / "all.csv";
  REQUIRE(run("synth --n 40 --h 4 --w 4 --noise 0.1 --seed 9 --out " +
              data_path.string()) == 0);

  const auto spec_path = tmp.path / "spec.json";
  write_file(spec_path, R"({"fractions": [0.48, 0.25, 0.15, 0.12], "seed": 2})");
  const auto out_dir = tmp.path / "shards";
  REQUIRE(run("partition --data " + data_path.string() + " --spec " +
              spec_path.string() + " --out " + out_dir.string()) == 0);

  auto manifest = nlohmann::json::parse(slurp(out_dir / "partition_manifest.json"));
  CHECK(manifest["total"] == 40);
  long total = 0;
  for (const auto& c : manifest["clients"]) {
    const auto shard = fedtn::data::load_csv(out_dir / c["file"].get<std::string>());
    CHECK(shard.count_label(0) == c["n_label0"].get<long>());
    CHECK(shard.count_label(1) == c["n_label1"].get<long>());
    total += shard.size();
  }
  CHECK(total == 40);

  // single client: same multiset of values as the input
  const auto one_spec = tmp.path / "one.json";
  write_file(one_spec, R"({"fractions": [1.0], "seed": 2})");
  const auto one_dir = tmp.path / "one";
  REQUIRE(run("partition --data " + data_path.string() + " --spec " +
              one_spec.string() + " --out " + one_dir.string()) == 0);
  auto original = fedtn::data::load_csv(data_path);
  auto copy = fedtn::data::load_csv(one_dir / "H1.csv");
  REQUIRE(copy.size() == original.size());
  auto key = [](const fedtn::data::ImageSample& s) {
    std::ostringstream k;
    k << s.label;
    for (int r = 0; r < s.pixels.rows(); ++r) {
      for (int c = 0; c < s.pixels.cols(); ++c) k << ',' << s.pixels(r, c);
    }
    return k.str();
  };
  std::multiset<std::string> lhs, rhs;
  for (const auto& s : original.samples) lhs.insert(key(s));
  for (const auto& s : copy.samples) rhs.insert(key(s));
  CHECK(lhs == rhs);

  // oversubscribed counts fail with exit 2
  const auto bad_spec = tmp.path / "bad.json";
  write_file(bad_spec, R"({"counts": [[100, 100]], "seed": 2})");
  CHECK(run("partition --data " + data_path.string() + " --spec " +
            bad_spec.string() + " --out " + (tmp.path / "bad").string()) == 2);
}
