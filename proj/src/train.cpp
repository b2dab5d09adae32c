#include "fedtn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fedtn::train {

AdamState AdamState::init(int n_params, double lr, double weight_decay) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n_params);
  s.v = Eigen::VectorXd::Zero(n_params);
  s.lr = lr;
  s.weight_decay = weight_decay;
  return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grad) {
  if (params.size() != state.m.size() || grad.size() != state.m.size()) {
    throw std::invalid_argument("adam_step length mismatch");
  }
  if (!grad.allFinite()) {
    throw numeric_error("non-finite gradient component in adam_step");
  }
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double vc = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const Eigen::VectorXd m_hat = state.m / mc;
  const Eigen::VectorXd v_hat = state.v / vc;
  params -= state.lr * (m_hat.array() / (v_hat.array().sqrt() + state.eps)).matrix();
}

Eigen::VectorXd clip_gradient(const Eigen::VectorXd& g, double clip_norm) {
  if (clip_norm <= 0.0) {
    throw std::invalid_argument("clip norm must be positive");
  }
  const double norm = g.norm();
  if (norm <= clip_norm || norm == 0.0) {
    return g;
  }
  return g * (clip_norm / norm);
}

Eigen::VectorXd dp_batch_grad(const std::vector<Eigen::VectorXd>& per_sample_grads,
                              const DPConfig& dp, Rng& rng) {
  if (per_sample_grads.empty()) {
    throw std::invalid_argument("dp_batch_grad needs at least one gradient");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(per_sample_grads.front().size());
  for (const auto& g : per_sample_grads) {
    acc += clip_gradient(g, dp.clip);
  }
  if (dp.epsilon > 0.0) {
    const double sigma = dp.epsilon * dp.clip;
    for (Eigen::Index i = 0; i < acc.size(); ++i) {
      acc[i] += sigma * rng.normal();
    }
  }
  return acc / static_cast<double>(per_sample_grads.size());
}

TrainResult train_local(model::ModelParams params, const data::Dataset& data,
                        int epochs, int batch_size, AdamState& opt,
                        const std::optional<DPConfig>& dp, std::uint64_t seed) {
  if (data.empty()) {
    throw std::invalid_argument("train_local needs a non-empty dataset");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("batch_size must be >= 1");
  }
  if (epochs == 0) {
    const auto lg = model::loss_and_grad(
        params, std::span<const data::ImageSample>(data.samples), opt.weight_decay);
    return {std::move(params), lg.loss};
  }

  Rng shuffle_rng(seed);
  std::optional<Rng> dp_rng;
  if (dp) dp_rng.emplace(dp->rng_seed);

  const long n = data.size();
  std::vector<std::size_t> order(n);
  std::vector<data::ImageSample> scratch;
  std::vector<Eigen::VectorXd> sample_grads;
  double last_epoch_loss = 0.0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (long start = 0; start < n; start += batch_size) {
      const long b = std::min<long>(batch_size, n - start);
      double batch_loss;
      Eigen::VectorXd grad;
      if (dp) {
        sample_grads.clear();
        batch_loss = 0.0;
        for (long k = 0; k < b; ++k) {
          const auto& s = data.samples[order[start + k]];
          auto lg = model::loss_and_grad(
              params, std::span<const data::ImageSample>(&s, 1), opt.weight_decay);
          batch_loss += lg.loss;
          sample_grads.push_back(std::move(lg.grad));
        }
        batch_loss /= static_cast<double>(b);
        grad = dp_batch_grad(sample_grads, *dp, *dp_rng);
      } else {
        scratch.clear();
        for (long k = 0; k < b; ++k) {
          scratch.push_back(data.samples[order[start + k]]);
        }
        auto lg = model::loss_and_grad(
            params, std::span<const data::ImageSample>(scratch), opt.weight_decay);
        batch_loss = lg.loss;
        grad = std::move(lg.grad);
      }
      Eigen::VectorXd flat = model::flatten(params);
      adam_step(opt, flat, grad);
      model::unflatten(params, flat);
      loss_sum += batch_loss * static_cast<double>(b);
    }
    last_epoch_loss = loss_sum / static_cast<double>(n);
  }
  return {std::move(params), last_epoch_loss};
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("scores and labels must be equal-length and non-empty");
  }
  long n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1) {
      ++n_pos;
    } else if (y == 0) {
      ++n_neg;
    } else {
      throw std::domain_error("labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::domain_error("roc_auc needs at least one positive and one negative");
  }

  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // midrank sum of the positives; ties get the average rank, which is the
  // 0.5-per-tied-pair convention
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }
  RocResult out;
  out.auc = (pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
            (static_cast<double>(n_pos) * static_cast<double>(n_neg));

  // sweep thresholds from above the maximum score downwards
  out.points.push_back({0.0, 0.0});
  long tp = 0, fp = 0;
  for (std::size_t hi = n; hi > 0;) {
    std::size_t lo = hi;
    while (lo > 0 && scores[idx[lo - 1]] == scores[idx[hi - 1]]) --lo;
    for (std::size_t k = lo; k < hi; ++k) {
      if (labels[idx[k]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    out.points.push_back({static_cast<double>(fp) / n_neg,
                          static_cast<double>(tp) / n_pos});
    hi = lo;
  }
  return out;
}

MetricsReport evaluate(const model::ModelParams& params, const data::Dataset& data,
                       double threshold) {
  if (data.empty()) {
    throw std::invalid_argument("evaluate needs a non-empty dataset");
  }
  MetricsReport r;
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(data.samples.size());
  labels.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    const double prob = model::forward(params, s.pixels).probability;
    scores.push_back(prob);
    labels.push_back(s.label);
    const bool predicted_positive = prob >= threshold;
    if (s.label == 1) {
      predicted_positive ? ++r.tp : ++r.fn;
    } else {
      predicted_positive ? ++r.fp : ++r.tn;
    }
  }
  const double n = static_cast<double>(data.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.sensitivity = r.recall;
  r.specificity = (r.tn + r.fp) > 0 ? static_cast<double>(r.tn) / (r.tn + r.fp) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  const bool two_class = (r.tp + r.fn) > 0 && (r.tn + r.fp) > 0;
  if (two_class) {
    auto roc = roc_auc(scores, labels);
    r.auc = roc.auc;
    r.roc = std::move(roc.points);
  } else {
    r.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace fedtn::train
