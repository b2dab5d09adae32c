#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedtn/errors.hpp"

namespace fedtn::data {

struct ImageSample {
  Eigen::MatrixXd pixels;  // H x W, values in [0, 1]
  int label = 0;           // {0, 1}
  std::string id;
};

struct Dataset {
  std::vector<ImageSample> samples;
  std::string name;

  bool empty() const { return samples.empty(); }
  long size() const { return static_cast<long>(samples.size()); }
  int height() const { return samples.empty() ? 0 : static_cast<int>(samples.front().pixels.rows()); }
  int width() const { return samples.empty() ? 0 : static_cast<int>(samples.front().pixels.cols()); }
  long count_label(int label) const;
};

struct ClientCounts {
  long n_label0 = 0;
  long n_label1 = 0;
};

// Either explicit per-client label counts, or fractions summing to 1 with a
// stratified flag. The seed drives the pre-assignment shuffle.
struct PartitionSpec {
  std::vector<ClientCounts> counts;
  std::vector<double> fractions;
  bool stratified = true;
  std::uint64_t seed = 0;

  bool use_counts() const { return !counts.empty(); }
  std::size_t n_clients() const {
    return use_counts() ? counts.size() : fractions.size();
  }
};

// CSV with header `label,p0,...,p{HW-1}`; an optional first line `# w=W h=H`
// gives the image shape, otherwise square images are inferred. Integer pixel
// tokens are divided by 255, decimal tokens are taken as-is; both clamped
// to [0, 1].
Dataset load_csv(const std::filesystem::path& path);

// Writes the same format (shape comment, header, one row per sample). Pixel
// values keep full precision and always carry a decimal point so a reload
// yields bit-identical values.
void save_csv(const Dataset& d, const std::filesystem::path& path);

// Binary (P5) PGM files from `dir`, labels from a `filename,label` CSV.
// Samples are ordered by filename; pixels are divided by the PGM maxval.
Dataset load_pgm_dir(const std::filesystem::path& dir,
                     const std::filesystem::path& labels_csv);

// Area-average resampling; exact block mean when the scale factors are
// integral.
ImageSample downscale(const ImageSample& img, int out_h, int out_w);

struct SplitResult {
  Dataset train, val, test;
};

// Stratified split. Per label: floor(f_val*n) to val, floor(f_test*n) to
// test, the remainder to train.
SplitResult train_val_test_split(const Dataset& d, double f_train, double f_val,
                                 double f_test, std::uint64_t seed);

// Disjoint per-client datasets. Explicit counts are honored exactly;
// fraction mode assigns floor counts with the remainder going to the first
// clients in order.
std::vector<Dataset> partition(const Dataset& d, const PartitionSpec& spec);

// Synthetic binary task: label 1 has a bright (0.9) top-half band, label 0 a
// bright bottom-half band, 0.1 elsewhere, plus Gaussian pixel noise clamped
// to [0, 1]. Labels alternate so the dataset is balanced.
Dataset synth_blobs(int n, int h, int w, double noise_sd, std::uint64_t seed);

}  // namespace fedtn::data
