#include "qem/machine.hpp"

#include <cmath>
#include <cstdint>

namespace qem {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

double plogp_bits(double p) { return p > 0.0 ? -p * std::log(p) / kLog2 : 0.0; }

}  // namespace

ClassicalMachine ClassicalMachine::build(const TransitionMatrix& gamma) {
  ClassicalMachine m{gamma, stationary_distribution(gamma), gamma.degenerate()};
  return m;
}

double shannon_entropy_bits(const StationaryDistribution& p) {
  if (p.p0 < -1e-12 || p.p1 < -1e-12 || std::abs(p.p0 + p.p1 - 1.0) > 1e-10) {
    throw InvalidStateError("not a probability distribution");
  }
  return plogp_bits(p.p0) + plogp_bits(p.p1);
}

double classical_complexity(const ClassicalMachine& m) {
  if (m.degenerate) return 0.0;
  return shannon_entropy_bits(m.p);
}

QuantumCausalStates quantum_causal_states(const TransitionMatrix& gamma) {
  QuantumCausalStates s;
  s.s0 = {std::sqrt(gamma(0, 0)), std::sqrt(gamma(0, 1))};
  s.s1 = {std::sqrt(gamma(1, 0)), std::sqrt(gamma(1, 1))};
  return s;
}

DensityMatrix stationary_quantum_state(const QuantumCausalStates& states,
                                       const StationaryDistribution& p) {
  const CVector k0 = states.ket0();
  const CVector k1 = states.ket1();
  CMatrix rho = cplx(p.p0) * outer(k0, k0) + cplx(p.p1) * outer(k1, k1);
  return DensityMatrix(std::move(rho));
}

double quantum_complexity(const DensityMatrix& rho) { return von_neumann_entropy(rho); }

MachineComplexities machine_complexities(const TransitionMatrix& gamma) {
  if (gamma.degenerate()) return {0.0, 0.0};
  const ClassicalMachine cm = ClassicalMachine::build(gamma);
  const QuantumCausalStates qs = quantum_causal_states(gamma);
  return {classical_complexity(cm), quantum_complexity(stationary_quantum_state(qs, cm.p))};
}

ExcessEntropyEstimate excess_entropy(const TransitionMatrix& gamma, int window,
                                     std::optional<StationaryDistribution> p_opt) {
  if (window < 1) throw InvalidParamsError("window length must be at least 1");
  if (window > 16) throw TooLargeError("excess-entropy window capped at 16");

  const StationaryDistribution p = p_opt ? *p_opt : stationary_distribution(gamma);
  const double p_init[2] = {p.p0, p.p1};

  ExcessEntropyEstimate est;
  est.window = window;
  est.sequence.reserve(static_cast<std::size_t>(window));

  // For each L: enumerate words x_0..x_L; P(w) = p(x_0) prod gamma steps.
  // E_L = H(X_0) + H(X_1..X_L) - H(X_0..X_L).
  for (int len = 1; len <= window; ++len) {
    const int bits = len + 1;
    const std::uint32_t n_words = 1u << bits;
    double h_joint = 0.0;
    std::vector<double> marginal(1u << len, 0.0);  // over x_1..x_L
    for (std::uint32_t w = 0; w < n_words; ++w) {
      // Bit (bits-1-k) of w is symbol x_k, so the word reads left to right.
      const int x0 = static_cast<int>((w >> (bits - 1)) & 1u);
      double prob = p_init[x0];
      int prev = x0;
      for (int k = 1; k < bits; ++k) {
        const int xk = static_cast<int>((w >> (bits - 1 - k)) & 1u);
        prob *= gamma(prev, xk);
        prev = xk;
      }
      h_joint += plogp_bits(prob);
      marginal[w & ((1u << len) - 1u)] += prob;
    }
    double h_future = 0.0;
    for (double q : marginal) h_future += plogp_bits(q);
    const double h0 = plogp_bits(p.p0) + plogp_bits(p.p1);
    est.sequence.push_back(h0 + h_future - h_joint);
  }
  est.value = est.sequence.back();
  return est;
}

}  // namespace qem
