#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "fedtn/errors.hpp"

namespace fedtn::qsim {

inline constexpr int kMaxQubits = 20;

// Pure n-qubit state. Basis indexing is little-endian: qubit 0 is the least
// significant bit of the amplitude index. The dense-matrix test oracle and
// the checkpoint format both assume this convention.
struct StateVector {
  int n_qubits = 0;
  Eigen::VectorXcd amplitudes;

  Eigen::Index dim() const { return amplitudes.size(); }
};

enum class GateKind { Ry, Cnot };

// Ry uses the half-angle convention
//   Ry(t) = [[cos(t/2), -sin(t/2)],
//            [sin(t/2),  cos(t/2)]]
// so that Ry(pi*p)|0> has amplitudes (cos(pi*p/2), sin(pi*p/2)).
//
// slot >= 0 reads the angle from a parameter vector; slot < 0 means the
// angle is fixed at `angle`.
struct Gate {
  GateKind kind;
  int q0 = 0;  // Ry wire, or CNOT control
  int q1 = -1; // CNOT target
  int slot = -1;
  double angle = 0.0;

  static Gate ry(int qubit, int slot) { return {GateKind::Ry, qubit, -1, slot, 0.0}; }
  static Gate ry_fixed(int qubit, double angle) {
    return {GateKind::Ry, qubit, -1, -1, angle};
  }
  static Gate cnot(int control, int target) {
    return {GateKind::Cnot, control, target, -1, 0.0};
  }
};

struct GateSequence {
  std::vector<Gate> gates;
  int n_qubits = 0;
  int n_params = 0;
};

// |0...0> on n_qubits wires. Throws std::length_error outside [1, 20].
StateVector new_zero_state(int n_qubits);

// Single-qubit Ry rotation on the given wire.
StateVector apply_ry(StateVector state, int qubit, double angle);

// CNOT: flips the target bit of every basis state whose control bit is set.
StateVector apply_cnot(StateVector state, int control, int target);

// Applies the gates in sequence order; slotted Ry gates read params[slot].
StateVector run_circuit(StateVector state, const GateSequence& seq,
                        const Eigen::VectorXd& params);

// <Z> on one wire: sum of |a_k|^2 signed +1 when the wire's bit is 0.
double expectation_z(const StateVector& state, int qubit);

// Exact gradient of expectation_z(run_circuit(...), readout_qubit) by the
// parameter-shift rule: component j is [E(slot j + pi/2) - E(slot j - pi/2)]/2,
// summed over every gate fed by slot j.
Eigen::VectorXd param_shift_grad(const GateSequence& seq,
                                 const Eigen::VectorXd& params,
                                 const StateVector& input, int readout_qubit);

// Expectation value and its full gradient from one prefix sweep. Bit-identical
// to calling run_circuit + expectation_z and param_shift_grad separately, but
// shifted evaluations reuse the state prefix before the shifted gate.
std::pair<double, Eigen::VectorXd> readout_and_grad(const GateSequence& seq,
                                                    const Eigen::VectorXd& params,
                                                    const StateVector& input,
                                                    int readout_qubit);

// In-place cores used by the pure wrappers and by hot loops.
void apply_ry_inplace(StateVector& state, int qubit, double angle);
void apply_cnot_inplace(StateVector& state, int control, int target);

}  // namespace fedtn::qsim
