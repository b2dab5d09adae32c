#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fedtn/qsim.hpp"

namespace fedtn::qtn {

enum class BlockType { Simple, StronglyEntangling };

// Two-qubit building block. Simple: Ry on both wires, CNOT, trailing Ry on
// both wires (4 slots). Strongly entangling: per layer, Ry on both wires
// followed by a forward and a reverse CNOT (2 slots per layer).
struct BlockKind {
  BlockType type = BlockType::Simple;
  int layers = 1;  // StronglyEntangling only

  int slots_per_block() const {
    return type == BlockType::Simple ? 4 : 2 * layers;
  }
};

enum class TopologyKind { Mps, Ttn, Mera };

struct Topology {
  TopologyKind kind;
  int n_qubits;
};

// A built circuit: gate list with parameter slots plus the designated
// readout wire (the last surviving qubit of the coarse-graining).
struct CircuitTemplate {
  qsim::GateSequence seq;
  int readout_qubit = 0;
  Topology topology{TopologyKind::Mps, 0};
  BlockKind block;
  int n_blocks = 0;
};

// side x side pixel patch, flattened row-major, every value in [0, 1].
struct Patch {
  Eigen::VectorXd pixels;
  int side = 0;
};

// Expands one block on wires (q1, q2) starting at parameter slot next_slot.
// Returns the gates and the number of slots consumed.
std::pair<std::vector<qsim::Gate>, int> expand_block(const BlockKind& block,
                                                     int q1, int q2,
                                                     int next_slot);

// Staircase of blocks on (0,1), (1,2), ..., (n-2, n-1); readout is wire n-1.
CircuitTemplate build_mps(int n_qubits, BlockKind block);

// Binary tree: level 0 pairs (0,1),(2,3),...; the higher-indexed wire of
// each pair survives; levels repeat on the survivors until one remains.
CircuitTemplate build_ttn(int n_qubits, BlockKind block);

// Tree with disentanglers: per level over active wires [a0..a_{m-1}], blocks
// on the interior pairs (a1,a2),(a3,a4),...,(a_{m-3},a_{m-2}) first, then
// coarse-graining blocks on (a0,a1),(a2,a3),...; higher-indexed wire survives.
CircuitTemplate build_mera(int n_qubits, BlockKind block);

CircuitTemplate build_topology(TopologyKind kind, int n_qubits, BlockKind block);

// Number of distinct parameter slots in the template.
int param_count(const CircuitTemplate& t);

// Product-state preparation: qubit j is Ry(pi * p_j)|0>, i.e. amplitudes
// (cos(pi p_j / 2), sin(pi p_j / 2)). Throws std::domain_error when a pixel
// leaves [0, 1].
qsim::StateVector encode_patch(const Patch& p);

// Line-oriented listing (gate kind, qubits, slot) for golden-file tests.
std::string dump_template(const CircuitTemplate& t);

const char* to_string(TopologyKind kind);
const char* to_string(BlockType type);

}  // namespace fedtn::qtn
