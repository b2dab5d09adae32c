#include "fedtn/qtn.hpp"

#include <cmath>
#include <sstream>

namespace fedtn::qtn {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct Builder {
  CircuitTemplate t;
  int next_slot = 0;

  explicit Builder(TopologyKind kind, int n_qubits, BlockKind block) {
    t.topology = {kind, n_qubits};
    t.block = block;
    t.seq.n_qubits = n_qubits;
  }

  void add_block(int q1, int q2) {
    auto [gates, consumed] = expand_block(t.block, q1, q2, next_slot);
    t.seq.gates.insert(t.seq.gates.end(), gates.begin(), gates.end());
    next_slot += consumed;
    ++t.n_blocks;
  }

  CircuitTemplate finish(int readout) {
    t.seq.n_params = next_slot;
    t.readout_qubit = readout;
    return std::move(t);
  }
};

}  // namespace

std::pair<std::vector<qsim::Gate>, int> expand_block(const BlockKind& block,
                                                     int q1, int q2,
                                                     int next_slot) {
  if (q1 == q2) {
    throw std::invalid_argument("block wires must be distinct");
  }
  if (block.type == BlockType::StronglyEntangling && block.layers < 1) {
    throw std::invalid_argument("strongly entangling block needs layers >= 1");
  }
  std::vector<qsim::Gate> gates;
  int s = next_slot;
  if (block.type == BlockType::Simple) {
    gates = {qsim::Gate::ry(q1, s), qsim::Gate::ry(q2, s + 1),
             qsim::Gate::cnot(q1, q2), qsim::Gate::ry(q1, s + 2),
             qsim::Gate::ry(q2, s + 3)};
    s += 4;
  } else {
    for (int layer = 0; layer < block.layers; ++layer) {
      gates.push_back(qsim::Gate::ry(q1, s));
      gates.push_back(qsim::Gate::ry(q2, s + 1));
      gates.push_back(qsim::Gate::cnot(q1, q2));
      gates.push_back(qsim::Gate::cnot(q2, q1));
      s += 2;
    }
  }
  return {std::move(gates), s - next_slot};
}

CircuitTemplate build_mps(int n_qubits, BlockKind block) {
  if (n_qubits < 2) {
    throw std::invalid_argument("MPS needs at least 2 qubits");
  }
  Builder b(TopologyKind::Mps, n_qubits, block);
  for (int q = 0; q + 1 < n_qubits; ++q) {
    b.add_block(q, q + 1);
  }
  return b.finish(n_qubits - 1);
}

CircuitTemplate build_ttn(int n_qubits, BlockKind block) {
  if (n_qubits < 2 || !is_power_of_two(n_qubits)) {
    throw std::invalid_argument("TTN needs a power-of-two qubit count >= 2");
  }
  Builder b(TopologyKind::Ttn, n_qubits, block);
  std::vector<int> active(n_qubits);
  for (int q = 0; q < n_qubits; ++q) active[q] = q;
  while (active.size() > 1) {
    std::vector<int> survivors;
    for (std::size_t i = 0; i + 1 < active.size(); i += 2) {
      b.add_block(active[i], active[i + 1]);
      survivors.push_back(active[i + 1]);
    }
    active = std::move(survivors);
  }
  return b.finish(active.front());
}

CircuitTemplate build_mera(int n_qubits, BlockKind block) {
  if (n_qubits < 4 || !is_power_of_two(n_qubits)) {
    throw std::invalid_argument("MERA needs a power-of-two qubit count >= 4");
  }
  Builder b(TopologyKind::Mera, n_qubits, block);
  std::vector<int> active(n_qubits);
  for (int q = 0; q < n_qubits; ++q) active[q] = q;
  while (active.size() > 1) {
    const std::size_t m = active.size();
    // disentanglers between the coarse-graining pairs
    for (std::size_t i = 1; i + 2 <= m - 1; i += 2) {
      b.add_block(active[i], active[i + 1]);
    }
    std::vector<int> survivors;
    for (std::size_t i = 0; i + 1 < m; i += 2) {
      b.add_block(active[i], active[i + 1]);
      survivors.push_back(active[i + 1]);
    }
    active = std::move(survivors);
  }
  return b.finish(active.front());
}

CircuitTemplate build_topology(TopologyKind kind, int n_qubits, BlockKind block) {
  switch (kind) {
    case TopologyKind::Mps:
      return build_mps(n_qubits, block);
    case TopologyKind::Ttn:
      return build_ttn(n_qubits, block);
    case TopologyKind::Mera:
      return build_mera(n_qubits, block);
  }
  throw std::invalid_argument("unknown topology");
}

int param_count(const CircuitTemplate& t) { return t.seq.n_params; }

qsim::StateVector encode_patch(const Patch& p) {
  const int n = static_cast<int>(p.pixels.size());
  if (p.side < 1 || n != p.side * p.side) {
    throw std::invalid_argument("patch must hold side*side pixels");
  }
  if (n > qsim::kMaxQubits) {
    throw std::length_error("patch needs more qubits than supported");
  }
  for (int j = 0; j < n; ++j) {
    const double v = p.pixels[j];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("patch pixel " + std::to_string(j) +
                              " outside [0, 1]: " + std::to_string(v));
    }
  }
  // product state assembled directly: amplitude of basis k is the product
  // over wires of cos or sin(pi p_j / 2) depending on bit j of k
  Eigen::VectorXd c(n), s(n);
  for (int j = 0; j < n; ++j) {
    c[j] = std::cos(kPi * p.pixels[j] / 2.0);
    s[j] = std::sin(kPi * p.pixels[j] / 2.0);
  }
  qsim::StateVector state;
  state.n_qubits = n;
  state.amplitudes.resize(Eigen::Index{1} << n);
  for (Eigen::Index k = 0; k < state.amplitudes.size(); ++k) {
    double amp = 1.0;
    for (int j = 0; j < n; ++j) {
      amp *= ((k >> j) & 1) ? s[j] : c[j];
    }
    state.amplitudes[k] = amp;
  }
  return state;
}

std::string dump_template(const CircuitTemplate& t) {
  std::ostringstream out;
  out << "topology=" << to_string(t.topology.kind)
      << " block=" << to_string(t.block.type) << " layers=" << t.block.layers
      << " n_qubits=" << t.topology.n_qubits << " n_params=" << t.seq.n_params
      << " readout=" << t.readout_qubit << "\n";
  for (const auto& g : t.seq.gates) {
    if (g.kind == qsim::GateKind::Ry) {
      if (g.slot >= 0) {
        out << "ry q" << g.q0 << " s" << g.slot << "\n";
      } else {
        out << "ry q" << g.q0 << " fixed " << g.angle << "\n";
      }
    } else {
      out << "cnot q" << g.q0 << " q" << g.q1 << "\n";
    }
  }
  return out.str();
}

const char* to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::Mps:
      return "mps";
    case TopologyKind::Ttn:
      return "ttn";
    case TopologyKind::Mera:
      return "mera";
  }
  return "?";
}

const char* to_string(BlockType type) {
  return type == BlockType::Simple ? "simple" : "strong";
}

}  // namespace fedtn::qtn
