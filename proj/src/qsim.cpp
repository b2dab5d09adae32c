#include "fedtn/qsim.hpp"

#include <cmath>
#include <string>

namespace fedtn::qsim {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

void check_qubit(const StateVector& state, int qubit) {
  if (qubit < 0 || qubit >= state.n_qubits) {
    throw std::out_of_range("qubit index " + std::to_string(qubit) +
                            " out of range for " + std::to_string(state.n_qubits) +
                            "-qubit state");
  }
}

// Resolves the per-gate Ry angles once so shifted re-runs can perturb a
// single occurrence.
std::vector<double> resolve_angles(const GateSequence& seq,
                                   const Eigen::VectorXd& params) {
  if (params.size() != seq.n_params) {
    throw std::invalid_argument("parameter vector has " +
                                std::to_string(params.size()) + " entries, circuit expects " +
                                std::to_string(seq.n_params));
  }
  std::vector<double> angles(seq.gates.size(), 0.0);
  for (std::size_t i = 0; i < seq.gates.size(); ++i) {
    const Gate& g = seq.gates[i];
    if (g.kind != GateKind::Ry) continue;
    if (g.slot >= 0) {
      if (g.slot >= seq.n_params) {
        throw std::invalid_argument("gate references slot " + std::to_string(g.slot) +
                                    " beyond n_params");
      }
      angles[i] = params[g.slot];
    } else {
      angles[i] = g.angle;
    }
  }
  return angles;
}

void apply_gate(StateVector& state, const Gate& g, double angle) {
  if (g.kind == GateKind::Ry) {
    apply_ry_inplace(state, g.q0, angle);
  } else {
    apply_cnot_inplace(state, g.q0, g.q1);
  }
}

}  // namespace

StateVector new_zero_state(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw std::length_error("n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                            "], got " + std::to_string(n_qubits));
  }
  StateVector state;
  state.n_qubits = n_qubits;
  state.amplitudes = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
  state.amplitudes[0] = 1.0;
  return state;
}

void apply_ry_inplace(StateVector& state, int qubit, double angle) {
  check_qubit(state, qubit);
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  const Eigen::Index mask = Eigen::Index{1} << qubit;
  auto& a = state.amplitudes;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if ((i & mask) == 0) {
      const std::complex<double> a0 = a[i];
      const std::complex<double> a1 = a[i | mask];
      a[i] = c * a0 - s * a1;
      a[i | mask] = s * a0 + c * a1;
    }
  }
}

void apply_cnot_inplace(StateVector& state, int control, int target) {
  check_qubit(state, control);
  check_qubit(state, target);
  if (control == target) {
    throw std::out_of_range("CNOT control and target must differ");
  }
  const Eigen::Index cmask = Eigen::Index{1} << control;
  const Eigen::Index tmask = Eigen::Index{1} << target;
  auto& a = state.amplitudes;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    // visit each swapped pair once, from the target-bit-clear side
    if ((i & cmask) != 0 && (i & tmask) == 0) {
      std::swap(a[i], a[i | tmask]);
    }
  }
}

StateVector apply_ry(StateVector state, int qubit, double angle) {
  apply_ry_inplace(state, qubit, angle);
  return state;
}

StateVector apply_cnot(StateVector state, int control, int target) {
  apply_cnot_inplace(state, control, target);
  return state;
}

StateVector run_circuit(StateVector state, const GateSequence& seq,
                        const Eigen::VectorXd& params) {
  if (state.n_qubits != seq.n_qubits) {
    throw std::invalid_argument("state has " + std::to_string(state.n_qubits) +
                                " qubits, circuit expects " + std::to_string(seq.n_qubits));
  }
  const auto angles = resolve_angles(seq, params);
  for (std::size_t i = 0; i < seq.gates.size(); ++i) {
    apply_gate(state, seq.gates[i], angles[i]);
  }
  return state;
}

double expectation_z(const StateVector& state, int qubit) {
  check_qubit(state, qubit);
  const Eigen::Index mask = Eigen::Index{1} << qubit;
  double acc = 0.0;
  const auto& a = state.amplitudes;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double p = std::norm(a[i]);
    acc += ((i & mask) == 0) ? p : -p;
  }
  return acc;
}

std::pair<double, Eigen::VectorXd> readout_and_grad(const GateSequence& seq,
                                                    const Eigen::VectorXd& params,
                                                    const StateVector& input,
                                                    int readout_qubit) {
  if (input.n_qubits != seq.n_qubits) {
    throw std::invalid_argument("state/circuit qubit count mismatch");
  }
  check_qubit(input, readout_qubit);
  const auto angles = resolve_angles(seq, params);
  const std::size_t n_gates = seq.gates.size();

  // prefix[i] is the state after the first i gates
  std::vector<StateVector> prefix(n_gates + 1);
  prefix[0] = input;
  for (std::size_t i = 0; i < n_gates; ++i) {
    prefix[i + 1] = prefix[i];
    apply_gate(prefix[i + 1], seq.gates[i], angles[i]);
  }

  const double value = expectation_z(prefix[n_gates], readout_qubit);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(seq.n_params);
  StateVector scratch;
  for (std::size_t g = 0; g < n_gates; ++g) {
    const Gate& gate = seq.gates[g];
    if (gate.kind != GateKind::Ry || gate.slot < 0) continue;
    double shifted[2];
    for (int s = 0; s < 2; ++s) {
      const double delta = (s == 0) ? kHalfPi : -kHalfPi;
      scratch = prefix[g];
      apply_ry_inplace(scratch, gate.q0, angles[g] + delta);
      for (std::size_t j = g + 1; j < n_gates; ++j) {
        apply_gate(scratch, seq.gates[j], angles[j]);
      }
      shifted[s] = expectation_z(scratch, readout_qubit);
    }
    grad[gate.slot] += (shifted[0] - shifted[1]) / 2.0;
  }
  return {value, grad};
}

Eigen::VectorXd param_shift_grad(const GateSequence& seq,
                                 const Eigen::VectorXd& params,
                                 const StateVector& input, int readout_qubit) {
  return readout_and_grad(seq, params, input, readout_qubit).second;
}

}  // namespace fedtn::qsim
