#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qem/ising.hpp"
#include "qem/machine.hpp"
#include "qem/qmath.hpp"

namespace qem {

// Parameterized imperfection model for the simulated gate. Zero everywhere
// reproduces the ideal circuit exactly.
struct NoiseModel {
  double depolarizing_p = 0.0;    // two-qubit depolarizing weight after the CZ core
  double overrotation_eps = 0.0;  // Y-axis over-rotation (radians) after 1q gates
  double readout_flip_q = 0.0;    // classical flip probability on the ancilla outcome

  void validate() const;
  bool is_zero() const {
    return depolarizing_p == 0.0 && overrotation_eps == 0.0 && readout_flip_q == 0.0;
  }
  static NoiseModel defaults() { return {0.03, 0.02, 0.01}; }
};

enum class CircuitRoute { direct, decomposed };

// One element of the decomposed gate sequence, in application order.
// Single-qubit entries act on the second register of the physical layout.
struct GateOp {
  std::string label;
  CMatrix op;  // 2x2 for single-qubit gates, 4x4 for the CZ core
  bool two_qubit = false;
};

struct CircuitSpec {
  TransitionMatrix gamma;
  CircuitRoute route;
  // Composed two-qubit operator in the memory (x) ancilla convention with the
  // outcome carried by the ancilla. For the decomposed route this includes
  // the final register relabel that moves the physical outcome register onto
  // the ancilla slot.
  CMatrix unitary;
  std::vector<GateOp> gates;  // decomposed route only
  double decomposition_residual = 0.0;
};

// Controlled-unitary defined by U(|S_i>|0>) = sqrt(g_i0)|S_0>|0> +
// sqrt(g_i1)|S_1>|1>, completed to a full unitary by Gram-Schmidt over a
// fixed candidate order. Throws DegenerateStates when |S_0> = |S_1>.
CMatrix build_cu_direct(const TransitionMatrix& gamma);

// CZ-core realization: single-qubit rotations V0, V1 (X-Z plane) around a CZ,
// with the two free angles found by multi-start Nelder-Mead. Throws
// NoDecomposition when the best residual exceeds 1e-6.
CircuitSpec build_cu_decomposed(const TransitionMatrix& gamma, std::uint64_t seed = 7);

CircuitSpec make_circuit(const TransitionMatrix& gamma, CircuitRoute route,
                         std::uint64_t seed = 7);

// Noisy realization of the circuit as a CPTP two-qubit channel. The
// decomposed route interleaves the over-rotations gate by gate and puts the
// depolarizing channel after the CZ; the direct route applies depolarizing
// after the whole unitary and over-rotations on both qubits at the end.
QuantumChannel apply_noise(const CircuitSpec& spec, const NoiseModel& noise);

// Trace-decreasing conditional processes on the memory qubit, one per
// ancilla outcome; e0 + e1 is trace preserving.
struct ConditionalChannelPair {
  QuantumChannel e0;
  QuantumChannel e1;

  double completeness_defect() const;  // || sum_j sum_k K^dag K - I ||_F
};

// E_j(rho) = Tr_anc[(I (x) Pi_j) E(rho (x) |0><0|) (I (x) Pi_j)], with the
// readout-flip probability mixing the two projectors.
ConditionalChannelPair conditional_maps(const QuantumChannel& noisy, double flip_q);

// Convenience: ideal or noisy conditional pair straight from gamma.
ConditionalChannelPair conditional_pair(const TransitionMatrix& gamma, CircuitRoute route,
                                        const NoiseModel& noise, std::uint64_t seed = 7);

// Pure-state ensemble member used to realize a mixed input state.
struct EnsembleMember {
  CVector state;
  double weight = 0.0;
};

// Spectral decomposition of rho as an ensemble of at most two pure states.
std::vector<EnsembleMember> spectral_ensemble(const DensityMatrix& rho);

struct ShotCounts {
  long long n0 = 0;
  long long n1 = 0;
};

// Samples the ancilla outcome distribution of the pair on an input ensemble.
// Deterministic for a fixed seed; n0 + n1 == n.
ShotCounts run_shots(const std::vector<EnsembleMember>& ensemble,
                     const ConditionalChannelPair& pair, long long n, std::uint64_t seed);

// Classical epsilon-machine realization: Markov chain started from the
// stationary distribution (or a forced start state, for chains without a
// unique stationary one), emitting the visited states.
std::vector<int> classical_sample(const TransitionMatrix& gamma, long long n_steps,
                                  std::uint64_t seed, std::optional<int> start = {});

}  // namespace qem
