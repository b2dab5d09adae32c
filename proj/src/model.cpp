#include "fedtn/model.hpp"

#include <cmath>
#include <string>

#include "fedtn/rng.hpp"

namespace fedtn::model {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sigmoid(double a) {
  if (a >= 0.0) {
    return 1.0 / (1.0 + std::exp(-a));
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

qtn::Patch extract_patch(const Eigen::MatrixXd& image, int side, int pr, int pc) {
  qtn::Patch patch;
  patch.side = side;
  patch.pixels.resize(side * side);
  for (int u = 0; u < side; ++u) {
    for (int v = 0; v < side; ++v) {
      patch.pixels[u * side + v] = image(pr * side + u, pc * side + v);
    }
  }
  return patch;
}

void check_image(const ModelDescriptor& d, const Eigen::MatrixXd& image) {
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  if (d.patch_side < 1 || h % d.patch_side != 0 || w % d.patch_side != 0) {
    throw std::invalid_argument("image " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not divisible into " + std::to_string(d.patch_side) +
                                "x" + std::to_string(d.patch_side) + " patches");
  }
  if (d.patch_side * d.patch_side != d.n_qubits) {
    throw std::invalid_argument("patch_side^2 must equal the circuit qubit count");
  }
  const int n_patches = (h / d.patch_side) * (w / d.patch_side);
  if (n_patches != d.n_patches) {
    throw std::invalid_argument("image yields " + std::to_string(n_patches) +
                                " patches, model expects " + std::to_string(d.n_patches));
  }
}

}  // namespace

qtn::CircuitTemplate template_for(const ModelDescriptor& desc) {
  return qtn::build_topology(desc.topology, desc.n_qubits, desc.block);
}

ModelParams init_params(const qtn::CircuitTemplate& tmpl, HeadKind head,
                        int n_patches, std::uint64_t seed) {
  if (n_patches < 1) {
    throw std::invalid_argument("n_patches must be >= 1");
  }
  Rng rng(seed);
  ModelParams p;
  p.desc.topology = tmpl.topology.kind;
  p.desc.block = tmpl.block;
  p.desc.n_qubits = tmpl.topology.n_qubits;
  p.desc.patch_side = static_cast<int>(std::lround(std::sqrt(double(tmpl.topology.n_qubits))));
  p.desc.n_patches = n_patches;
  p.desc.head = head;
  p.quantum.resize(tmpl.seq.n_params);
  for (Eigen::Index i = 0; i < p.quantum.size(); ++i) {
    p.quantum[i] = rng.uniform(-kPi, kPi);
  }
  if (head == HeadKind::Dense) {
    const double limit = std::sqrt(6.0 / (n_patches + 1));
    p.head_weights.resize(n_patches);
    for (Eigen::Index i = 0; i < p.head_weights.size(); ++i) {
      p.head_weights[i] = rng.uniform(-limit, limit);
    }
    p.head_bias = 0.0;
  }
  return p;
}

int total_param_count(const ModelParams& p) {
  int n = static_cast<int>(p.quantum.size());
  if (p.desc.head == HeadKind::Dense) {
    n += static_cast<int>(p.head_weights.size()) + 1;
  }
  return n;
}

Eigen::VectorXd flatten(const ModelParams& p) {
  Eigen::VectorXd flat(total_param_count(p));
  flat.head(p.quantum.size()) = p.quantum;
  if (p.desc.head == HeadKind::Dense) {
    flat.segment(p.quantum.size(), p.head_weights.size()) = p.head_weights;
    flat[flat.size() - 1] = p.head_bias;
  }
  return flat;
}

void unflatten(ModelParams& p, const Eigen::VectorXd& flat) {
  if (flat.size() != total_param_count(p)) {
    throw std::invalid_argument("flat parameter vector has the wrong length");
  }
  p.quantum = flat.head(p.quantum.size());
  if (p.desc.head == HeadKind::Dense) {
    p.head_weights = flat.segment(p.quantum.size(), p.head_weights.size());
    p.head_bias = flat[flat.size() - 1];
  }
}

Prediction forward(const ModelParams& p, const Eigen::MatrixXd& image) {
  check_image(p.desc, image);
  if (p.desc.head == HeadKind::Dense &&
      p.head_weights.size() != p.desc.n_patches) {
    throw std::invalid_argument("dense head weight count does not match patches");
  }
  const qtn::CircuitTemplate tmpl = template_for(p.desc);
  const int side = p.desc.patch_side;
  const int rows = static_cast<int>(image.rows()) / side;
  const int cols = static_cast<int>(image.cols()) / side;

  Prediction pred;
  pred.patch_expectations.resize(p.desc.n_patches);
  int k = 0;
  for (int pr = 0; pr < rows; ++pr) {
    for (int pc = 0; pc < cols; ++pc, ++k) {
      auto state = qtn::encode_patch(extract_patch(image, side, pr, pc));
      state = qsim::run_circuit(std::move(state), tmpl.seq, p.quantum);
      pred.patch_expectations[k] = qsim::expectation_z(state, tmpl.readout_qubit);
    }
  }
  double raw;
  if (p.desc.head == HeadKind::Dense) {
    raw = sigmoid(p.head_weights.dot(pred.patch_expectations) + p.head_bias);
  } else {
    raw = (1.0 + pred.patch_expectations.mean()) / 2.0;
  }
  pred.probability = clamp_prob(raw);
  return pred;
}

LossGrad loss_and_grad(const ModelParams& p,
                       std::span<const data::ImageSample> batch,
                       double weight_decay) {
  if (batch.empty()) {
    throw std::invalid_argument("loss_and_grad needs a non-empty batch");
  }
  const qtn::CircuitTemplate tmpl = template_for(p.desc);
  const int side = p.desc.patch_side;
  const int n_quantum = static_cast<int>(p.quantum.size());
  const int n_total = total_param_count(p);
  const bool dense = p.desc.head == HeadKind::Dense;
  const int n_patches = p.desc.n_patches;

  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(n_total);
  Eigen::VectorXd sample_grad(n_total);
  Eigen::VectorXd z(n_patches);
  Eigen::MatrixXd dz(n_patches, n_quantum);

  for (const auto& sample : batch) {
    if (sample.label != 0 && sample.label != 1) {
      throw std::domain_error("label must be 0 or 1, got " +
                              std::to_string(sample.label));
    }
    check_image(p.desc, sample.pixels);
    const int rows = static_cast<int>(sample.pixels.rows()) / side;
    const int cols = static_cast<int>(sample.pixels.cols()) / side;
    int k = 0;
    for (int pr = 0; pr < rows; ++pr) {
      for (int pc = 0; pc < cols; ++pc, ++k) {
        auto state = qtn::encode_patch(extract_patch(sample.pixels, side, pr, pc));
        auto [value, grad] =
            qsim::readout_and_grad(tmpl.seq, p.quantum, state, tmpl.readout_qubit);
        z[k] = value;
        dz.row(k) = grad;
      }
    }

    const double y = sample.label;
    double raw;
    if (dense) {
      raw = sigmoid(p.head_weights.dot(z) + p.head_bias);
    } else {
      raw = (1.0 + z.mean()) / 2.0;
    }
    const double prob = clamp_prob(raw);
    out.loss += -(y * std::log(prob) + (1.0 - y) * std::log(1.0 - prob));

    sample_grad.setZero();
    const bool clamped = raw <= kProbClamp || raw >= 1.0 - kProbClamp;
    if (!clamped) {
      if (dense) {
        const double da = raw - y;  // BCE + sigmoid
        sample_grad.head(n_quantum) = da * (dz.transpose() * p.head_weights);
        sample_grad.segment(n_quantum, n_patches) = da * z;
        sample_grad[n_total - 1] = da;
      } else {
        const double dprob = (prob - y) / (prob * (1.0 - prob));
        const double coeff = dprob / (2.0 * n_patches);
        sample_grad.head(n_quantum) = coeff * dz.colwise().sum().transpose();
      }
    }
    out.grad += sample_grad;
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv_b;
  out.grad *= inv_b;
  if (weight_decay != 0.0) {
    const Eigen::VectorXd flat = flatten(p);
    out.loss += 0.5 * weight_decay * flat.squaredNorm();
    out.grad += weight_decay * flat;
  }
  return out;
}

const char* to_string(HeadKind head) {
  return head == HeadKind::Dense ? "dense" : "gap";
}

}  // namespace fedtn::model
