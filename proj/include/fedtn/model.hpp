#pragma once

#include <cstdint>
#include <span>

#include "fedtn/data.hpp"
#include "fedtn/qtn.hpp"

namespace fedtn::model {

enum class HeadKind { Dense, Gap };

// Everything needed to rebuild the circuit and head shapes; travels with the
// parameters and is what checkpoints persist.
struct ModelDescriptor {
  qtn::TopologyKind topology = qtn::TopologyKind::Ttn;
  qtn::BlockKind block;
  int n_qubits = 0;
  int patch_side = 0;
  int n_patches = 0;
  HeadKind head = HeadKind::Gap;

  friend bool operator==(const ModelDescriptor& a, const ModelDescriptor& b) {
    return a.topology == b.topology && a.block.type == b.block.type &&
           a.block.layers == b.block.layers && a.n_qubits == b.n_qubits &&
           a.patch_side == b.patch_side && a.n_patches == b.n_patches &&
           a.head == b.head;
  }
};

// Quantum rotation angles plus the classical head; the unit exchanged
// between clients and server.
struct ModelParams {
  ModelDescriptor desc;
  Eigen::VectorXd quantum;
  Eigen::VectorXd head_weights;  // empty for GAP
  double head_bias = 0.0;
};

inline constexpr double kProbClamp = 1e-7;

struct Prediction {
  double probability = 0.5;  // clamped to [1e-7, 1 - 1e-7]
  Eigen::VectorXd patch_expectations;
};

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;  // over flatten() order
};

// Quantum angles uniform on (-pi, pi]; dense weights uniform on
// +-sqrt(6/(n_patches+1)), bias zero. Deterministic in the seed.
ModelParams init_params(const qtn::CircuitTemplate& tmpl, HeadKind head,
                        int n_patches, std::uint64_t seed);

qtn::CircuitTemplate template_for(const ModelDescriptor& desc);

int total_param_count(const ModelParams& p);

// Flat layout: quantum angles, then dense weights, then bias.
Eigen::VectorXd flatten(const ModelParams& p);
void unflatten(ModelParams& p, const Eigen::VectorXd& flat);

// Splits the image into non-overlapping patch_side x patch_side patches
// (row-major), runs each through the shared circuit, and maps the readout
// expectations through the head:
//   dense: sigmoid(w . z + b)
//   gap:   (1 + mean(z)) / 2
Prediction forward(const ModelParams& p, const Eigen::MatrixXd& image);

// Mean binary cross-entropy over the batch plus (weight_decay/2)*||params||^2.
// Head gradients in closed form; quantum gradients by the parameter-shift
// rule, summed over patches since the circuit parameters are shared.
LossGrad loss_and_grad(const ModelParams& p,
                       std::span<const data::ImageSample> batch,
                       double weight_decay);

const char* to_string(HeadKind head);

}  // namespace fedtn::model
