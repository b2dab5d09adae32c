#pragma once

#include <optional>
#include <vector>

#include "fedtn/model.hpp"
#include "fedtn/rng.hpp"

namespace fedtn::train {

struct AdamState {
  Eigen::VectorXd m, v;
  long t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;

  static AdamState init(int n_params, double lr = 0.001, double weight_decay = 1e-4);
};

// One Adam update with bias correction, in place. The gradient is expected
// to already carry the weight-decay term (loss_and_grad adds it).
void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grad);

// g * min(1, clip_norm / ||g||); the zero vector passes through unchanged.
Eigen::VectorXd clip_gradient(const Eigen::VectorXd& g, double clip_norm);

// Noise scale semantics follow the source material: sigma = epsilon * clip
// per coordinate on the summed clipped gradient, so larger epsilon means
// more noise (this inverts the usual privacy-budget reading; no (eps, delta)
// accounting is performed).
struct DPConfig {
  double clip = 1.0;
  double epsilon = 0.0;
  std::uint64_t rng_seed = 0;
};

// Clips every per-sample gradient to `clip`, sums, adds per-coordinate
// Gaussian noise of scale epsilon*clip (epsilon 0 draws nothing), divides by
// the batch size.
Eigen::VectorXd dp_batch_grad(const std::vector<Eigen::VectorXd>& per_sample_grads,
                              const DPConfig& dp, Rng& rng);

struct TrainResult {
  model::ModelParams params;
  double mean_loss = 0.0;  // sample-weighted mean over the last epoch
};

// Seeded per-epoch shuffles, mini-batches with the final short batch kept,
// one adam_step per batch. With DP the batch gradient is assembled from
// per-sample gradients through dp_batch_grad; otherwise one batch call.
// epochs == 0 evaluates the loss without updating.
TrainResult train_local(model::ModelParams params, const data::Dataset& data,
                        int epochs, int batch_size, AdamState& opt,
                        const std::optional<DPConfig>& dp, std::uint64_t seed);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auc = 0.0;
  std::vector<RocPoint> points;  // swept thresholds, sorted by fpr
};

// Mann-Whitney AUC with ties counted 0.5, plus the threshold-swept ROC.
// Throws std::domain_error unless both classes appear.
RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricsReport {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
  double sensitivity = 0.0;
  double auc = 0.0;  // NaN when the data is single-class
  std::vector<RocPoint> roc;
};

// Scores every sample with forward(); probability >= threshold counts as a
// positive prediction.
MetricsReport evaluate(const model::ModelParams& params, const data::Dataset& data,
                       double threshold = 0.5);

}  // namespace fedtn::train
