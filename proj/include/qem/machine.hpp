#pragma once

#include <array>
#include <optional>
#include <vector>

#include "qem/ising.hpp"
#include "qem/qmath.hpp"

namespace qem {

// The two-state classical epsilon-machine of the Ising process. `degenerate`
// marks the single-causal-state limit (both gamma rows coincide), where the
// machine needs no memory at all.
struct ClassicalMachine {
  TransitionMatrix gamma;
  StationaryDistribution p;
  bool degenerate;

  static ClassicalMachine build(const TransitionMatrix& gamma);
};

// Shannon entropy of the stationary distribution, in bits.
double shannon_entropy_bits(const StationaryDistribution& p);

// C_c: stored information of the classical machine. Zero for a degenerate
// (one-state) machine regardless of its formal stationary distribution.
double classical_complexity(const ClassicalMachine& m);

// Quantum causal states |S_i> = sqrt(gamma_i0)|0> + sqrt(gamma_i1)|1>.
// Amplitudes are real and non-negative by construction.
struct QuantumCausalStates {
  std::array<double, 2> s0;
  std::array<double, 2> s1;

  double overlap() const { return s0[0] * s1[0] + s0[1] * s1[1]; }
  CVector ket0() const { return CVector{cplx(s0[0]), cplx(s0[1])}; }
  CVector ket1() const { return CVector{cplx(s1[0]), cplx(s1[1])}; }
};

QuantumCausalStates quantum_causal_states(const TransitionMatrix& gamma);

// rho = p0 |S0><S0| + p1 |S1><S1|.
DensityMatrix stationary_quantum_state(const QuantumCausalStates& states,
                                       const StationaryDistribution& p);

// C_q: von Neumann entropy of the stationary state, in bits.
double quantum_complexity(const DensityMatrix& rho);

// Theory-side complexities for one gamma, with the degenerate single-state
// rule applied to both.
struct MachineComplexities {
  double c_c = 0.0;
  double c_q = 0.0;
};
MachineComplexities machine_complexities(const TransitionMatrix& gamma);

// Finite-window estimate E_L = I(X_0; X_1..X_L) of the excess entropy by
// exact enumeration of all words under the stationary Markov measure. An
// explicit initial distribution covers chains without a unique stationary
// one (both states absorbing).
struct ExcessEntropyEstimate {
  int window = 0;
  double value = 0.0;            // E at the requested window
  std::vector<double> sequence;  // E_1 .. E_window
};

ExcessEntropyEstimate excess_entropy(const TransitionMatrix& gamma, int window,
                                     std::optional<StationaryDistribution> p = {});

}  // namespace qem
