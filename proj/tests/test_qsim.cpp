#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedtn/qsim.hpp"
#include "support/oracles.hpp"

using namespace fedtn;
using namespace fedtn::qsim;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("new_zero_state prepares |0...0>") {
  auto s1 = new_zero_state(1);
  CHECK(s1.amplitudes.size() == 2);
  CHECK(s1.amplitudes[0] == std::complex<double>(1.0, 0.0));
  CHECK(s1.amplitudes[1] == std::complex<double>(0.0, 0.0));

  auto s2 = new_zero_state(2);
  CHECK(s2.amplitudes.size() == 4);
  CHECK(s2.amplitudes[0] == std::complex<double>(1.0, 0.0));
  for (int k = 1; k < 4; ++k) CHECK(s2.amplitudes[k] == std::complex<double>(0.0, 0.0));

  CHECK_THROWS_AS(new_zero_state(21), std::length_error);
  CHECK_THROWS_AS(new_zero_state(0), std::length_error);
}

TEST_CASE("apply_ry basics") {
  // Ry(pi)|0> = |1>
  auto s = apply_ry(new_zero_state(1), 0, kPi);
  CHECK(std::abs(s.amplitudes[0]) < 1e-12);
  CHECK(std::abs(s.amplitudes[1] - 1.0) < 1e-12);

  // Ry(0) is the identity
  Rng rng(7);
  auto r = oracles::random_state(rng, 3);
  auto r2 = apply_ry(r, 1, 0.0);
  CHECK((r2.amplitudes - r.amplitudes).norm() < 1e-15);

  // Ry(pi/2)|0> = (0.70711, 0.70711)
  auto h = apply_ry(new_zero_state(1), 0, kPi / 2.0);
  CHECK(std::abs(h.amplitudes[0].real() - 0.70711) < 1e-5);
  CHECK(std::abs(h.amplitudes[1].real() - 0.70711) < 1e-5);

  CHECK_THROWS_AS(apply_ry(new_zero_state(2), 2, 1.0), std::out_of_range);
}

TEST_CASE("apply_cnot basics") {
  // |10> (qubit 0 set) -> |11>
  auto s = apply_ry(new_zero_state(2), 0, kPi);  // |01 index> = basis 1
  s = apply_cnot(std::move(s), 0, 1);
  CHECK(std::abs(s.amplitudes[3] - 1.0) < 1e-12);

  // control clear: |00> unchanged
  auto z = apply_cnot(new_zero_state(2), 0, 1);
  CHECK(std::abs(z.amplitudes[0] - 1.0) < 1e-12);

  // self-inverse on a random state
  Rng rng(3);
  auto r = oracles::random_state(rng, 3);
  auto twice = apply_cnot(apply_cnot(r, 2, 0), 2, 0);
  CHECK((twice.amplitudes - r.amplitudes).norm() < 1e-12);

  CHECK_THROWS_AS(apply_cnot(new_zero_state(2), 1, 1), std::out_of_range);
  CHECK_THROWS_AS(apply_cnot(new_zero_state(2), 0, 2), std::out_of_range);
}

TEST_CASE("run_circuit basics") {
  GateSequence empty;
  empty.n_qubits = 2;
  Rng rng(11);
  auto r = oracles::random_state(rng, 2);
  auto out = run_circuit(r, empty, Eigen::VectorXd{});
  CHECK((out.amplitudes - r.amplitudes).norm() == 0.0);

  GateSequence one;
  one.n_qubits = 1;
  one.n_params = 1;
  one.gates = {Gate::ry(0, 0)};
  Eigen::VectorXd theta(1);
  theta << kPi;
  auto flipped = run_circuit(new_zero_state(1), one, theta);
  CHECK(std::abs(flipped.amplitudes[1] - 1.0) < 1e-12);

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(run_circuit(new_zero_state(1), one, wrong), std::invalid_argument);
}

TEST_CASE("run_circuit matches the dense-matrix oracle") {
  Rng rng(2024);
  for (int n = 1; n <= 4; ++n) {
    for (int rep = 0; rep < 30; ++rep) {
      const int length = 1 + static_cast<int>(rng.next_below(12));
      auto seq = oracles::random_circuit(rng, n, length);
      auto params = oracles::random_params(rng, seq.n_params);
      auto input = oracles::random_state(rng, n);
      auto got = run_circuit(input, seq, params);
      Eigen::VectorXcd expected = oracles::dense_unitary(seq, params) * input.amplitudes;
      CHECK((got.amplitudes - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("norm preservation and reversibility") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    auto seq = oracles::random_circuit(rng, 4, 12);
    auto params = oracles::random_params(rng, seq.n_params);
    auto out = run_circuit(new_zero_state(4), seq, params);
    CHECK(std::abs(out.amplitudes.squaredNorm() - 1.0) <= 1e-10);
  }
  auto r = oracles::random_state(rng, 2);
  auto back = apply_ry(apply_ry(r, 1, 0.7321), 1, -0.7321);
  CHECK((back.amplitudes - r.amplitudes).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("expectation_z basics") {
  CHECK(expectation_z(new_zero_state(1), 0) == 1.0);
  auto one = apply_ry(new_zero_state(1), 0, kPi);
  CHECK(std::abs(expectation_z(one, 0) + 1.0) < 1e-12);
  auto plus = apply_ry(new_zero_state(1), 0, kPi / 2.0);
  CHECK(std::abs(expectation_z(plus, 0)) < 1e-12);
  CHECK_THROWS_AS(expectation_z(new_zero_state(1), 1), std::out_of_range);

  Rng rng(19);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = oracles::random_state(rng, 3);
    const double e = expectation_z(s, static_cast<int>(rng.next_below(3)));
    CHECK(e <= 1.0 + 1e-12);
    CHECK(e >= -1.0 - 1e-12);
  }
}

TEST_CASE("param_shift_grad on a single rotation") {
  GateSequence one;
  one.n_qubits = 1;
  one.n_params = 1;
  one.gates = {Gate::ry(0, 0)};

  Eigen::VectorXd theta(1);
  theta << kPi / 3.0;
  auto grad = param_shift_grad(one, theta, new_zero_state(1), 0);
  // E(theta) = cos(theta), so the gradient is -sin(pi/3)
  CHECK(std::abs(grad[0] + 0.86603) < 1e-5);
  auto fd = oracles::fd_circuit_grad(one, theta, new_zero_state(1), 0);
  CHECK(std::abs(grad[0] - fd[0]) < 1e-6);

  theta << 0.0;
  grad = param_shift_grad(one, theta, new_zero_state(1), 0);
  CHECK(std::abs(grad[0]) < 1e-15);
}

TEST_CASE("param_shift_grad matches finite differences on random circuits") {
  Rng rng(77);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_below(5));  // up to 6 qubits
    auto seq = oracles::random_circuit(rng, n, 20);
    auto params = oracles::random_params(rng, seq.n_params);
    auto input = oracles::random_state(rng, n);
    const int readout = static_cast<int>(rng.next_below(n));
    auto grad = param_shift_grad(seq, params, input, readout);
    auto fd = oracles::fd_circuit_grad(seq, params, input, readout);
    CHECK((grad - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("param_shift_grad sums contributions of a shared slot") {
  // Two rotations on the same wire fed by one slot: E = cos(2 theta),
  // dE/dtheta = -2 sin(2 theta).
  GateSequence seq;
  seq.n_qubits = 1;
  seq.n_params = 1;
  seq.gates = {Gate::ry(0, 0), Gate::ry(0, 0)};
  Eigen::VectorXd theta(1);
  theta << 0.4;
  auto grad = param_shift_grad(seq, theta, new_zero_state(1), 0);
  CHECK(std::abs(grad[0] + 2.0 * std::sin(0.8)) < 1e-12);
}

TEST_CASE("readout_and_grad agrees with the separate calls bit for bit") {
  Rng rng(123);
  auto seq = oracles::random_circuit(rng, 3, 10);
  auto params = oracles::random_params(rng, seq.n_params);
  auto input = oracles::random_state(rng, 3);
  auto [value, grad] = readout_and_grad(seq, params, input, 2);
  CHECK(value == expectation_z(run_circuit(input, seq, params), 2));
  auto grad2 = param_shift_grad(seq, params, input, 2);
  CHECK((grad - grad2).cwiseAbs().maxCoeff() == 0.0);
}
