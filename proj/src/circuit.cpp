#include "qem/circuit.hpp"

#include <cmath>
#include <string>

#include "qem/neldermead.hpp"
#include "qem/rng.hpp"

namespace qem {

namespace {

CMatrix hadamard() {
  CMatrix h(2);
  const double s = 1.0 / std::sqrt(2.0);
  h(0, 0) = s;
  h(0, 1) = s;
  h(1, 0) = s;
  h(1, 1) = -s;
  return h;
}

CMatrix cz_gate() {
  CMatrix cz = CMatrix::identity(4);
  cz(3, 3) = -1.0;
  return cz;
}

CMatrix swap_gate() {
  CMatrix sw(4);
  sw(0, 0) = 1.0;
  sw(1, 2) = 1.0;
  sw(2, 1) = 1.0;
  sw(3, 3) = 1.0;
  return sw;
}

CMatrix rotation_y(double theta) {
  CMatrix r(2);
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  return r;
}

// The two defining input/output pairs of Eq.-style constraints in the
// memory (x) ancilla convention.
struct CuConstraints {
  CVector in0, in1;    // |S_i> (x) |0>
  CVector out0, out1;  // sqrt(g_i0)|S_0>|0> + sqrt(g_i1)|S_1>|1>
};

CuConstraints cu_constraints(const TransitionMatrix& gamma) {
  const QuantumCausalStates s = quantum_causal_states(gamma);
  const CVector anc0 = CVector::basis(2, 0);
  const CVector anc1 = CVector::basis(2, 1);
  CuConstraints c;
  c.in0 = kron(s.ket0(), anc0);
  c.in1 = kron(s.ket1(), anc0);
  c.out0 = cplx(std::sqrt(gamma(0, 0))) * kron(s.ket0(), anc0) +
           cplx(std::sqrt(gamma(0, 1))) * kron(s.ket1(), anc1);
  c.out1 = cplx(std::sqrt(gamma(1, 0))) * kron(s.ket0(), anc0) +
           cplx(std::sqrt(gamma(1, 1))) * kron(s.ket1(), anc1);
  return c;
}

double constraint_residual(const CMatrix& u, const CuConstraints& c) {
  const CVector r0 = u * c.in0 - c.out0;
  const CVector r1 = u * c.in1 - c.out1;
  return std::sqrt(r0.norm() * r0.norm() + r1.norm() * r1.norm());
}

// Gram-Schmidt extension of `basis` by candidates, keeping residuals above
// threshold, until the basis has `want` vectors.
void extend_orthonormal(std::vector<CVector>& basis, const std::vector<CVector>& candidates,
                        std::size_t want) {
  for (const CVector& cand : candidates) {
    if (basis.size() >= want) break;
    CVector v = cand;
    for (const CVector& b : basis) v -= inner(b, v) * b;
    const double n = v.norm();
    if (n > 1e-6) {
      v *= cplx(1.0 / n);
      basis.push_back(std::move(v));
    }
  }
  if (basis.size() < want) {
    throw InvalidStateError("orthonormal completion failed");
  }
}

}  // namespace

void NoiseModel::validate() const {
  if (depolarizing_p < 0.0 || depolarizing_p > 1.0) {
    throw InvalidParamsError("depolarizing weight outside [0,1]");
  }
  if (readout_flip_q < 0.0 || readout_flip_q > 0.5) {
    throw InvalidParamsError("readout flip outside [0,0.5]");
  }
  if (!std::isfinite(overrotation_eps)) {
    throw InvalidParamsError("over-rotation must be finite");
  }
}

CMatrix build_cu_direct(const TransitionMatrix& gamma) {
  if (gamma.degenerate()) {
    throw DegenerateStatesError("causal states coincide; controlled-unitary is singular");
  }
  const CuConstraints c = cu_constraints(gamma);

  // Orthonormalize the input pair; the same coefficients applied to the
  // outputs stay orthonormal because the map preserves inner products.
  const cplx ov = inner(c.in0, c.in1);
  CVector e1 = c.in0;
  CVector e2 = c.in1 - ov * c.in0;
  const double r = e2.norm();
  e2 *= cplx(1.0 / r);
  CVector f1 = c.out0;
  CVector f2 = c.out1 - ov * c.out0;
  f2 *= cplx(1.0 / r);

  // Fixed candidate order for the free columns.
  const std::vector<CVector> candidates = {CVector::basis(4, 1), CVector::basis(4, 3),
                                           CVector::basis(4, 0), CVector::basis(4, 2)};
  std::vector<CVector> ein = {e1, e2};
  std::vector<CVector> eout = {f1, f2};
  extend_orthonormal(ein, candidates, 4);
  extend_orthonormal(eout, candidates, 4);

  CMatrix u(4);
  for (std::size_t k = 0; k < 4; ++k) u += outer(eout[k], ein[k]);

  if (constraint_residual(u, c) > 1e-10) {
    throw InvalidStateError("controlled-unitary construction failed its defining equations");
  }
  return u;
}

CircuitSpec build_cu_decomposed(const TransitionMatrix& gamma, std::uint64_t seed) {
  if (gamma.degenerate()) {
    throw DegenerateStatesError("causal states coincide; controlled-unitary is singular");
  }
  const CuConstraints c = cu_constraints(gamma);
  const CMatrix eye2 = CMatrix::identity(2);
  const CMatrix h = hadamard();
  const CMatrix cz = cz_gate();
  const CMatrix relabel = swap_gate();

  // CU = relabel . (I(x)V0)(I(x)V1)(I(x)H) CZ (I(x)H)(I(x)V1^dag), where the
  // single-qubit gates act on the register that starts in |0> and ends up
  // carrying the next causal state. The relabel maps the physical layout
  // (outcome on the first register) onto the memory (x) ancilla convention.
  auto compose = [&](double theta0, double theta1) {
    const CMatrix v0 = rotation_y(theta0);
    const CMatrix v1 = rotation_y(theta1);
    CMatrix u = kron(eye2, v1.adjoint());
    u = cz * kron(eye2, h) * u;
    u = kron(eye2, v0) * kron(eye2, v1) * kron(eye2, h) * u;
    return relabel * u;
  };

  auto objective = [&](const std::vector<double>& x) {
    return constraint_residual(compose(x[0], x[1]), c);
  };

  NelderMeadResult best;
  best.fx = 1e300;
  Rng rng(derive_seed(seed, 0xdec0));
  constexpr int kStarts = 32;
  constexpr int kTotalBudget = 20000;
  for (int s = 0; s < kStarts; ++s) {
    std::vector<double> x0 = {rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI)};
    NelderMeadResult r = nelder_mead(objective, x0, 0.4, kTotalBudget / kStarts, 1e-14);
    if (r.fx < best.fx) best = r;
    if (best.fx < 1e-12) break;
  }

  if (best.fx > 1e-6) {
    throw NoDecompositionError("CZ-core decomposition residual " + std::to_string(best.fx) +
                               " exceeds 1e-6");
  }

  const double theta0 = best.x[0];
  const double theta1 = best.x[1];
  CircuitSpec spec{gamma, CircuitRoute::decomposed, compose(theta0, theta1), {}, best.fx};
  const CMatrix v0 = rotation_y(theta0);
  const CMatrix v1 = rotation_y(theta1);
  spec.gates = {
      {"V1_dag", v1.adjoint(), false}, {"H", h, false},  {"CZ", cz, true},
      {"H", h, false},                 {"V1", v1, false}, {"V0", v0, false},
  };
  return spec;
}

CircuitSpec make_circuit(const TransitionMatrix& gamma, CircuitRoute route, std::uint64_t seed) {
  if (route == CircuitRoute::decomposed) return build_cu_decomposed(gamma, seed);
  return CircuitSpec{gamma, CircuitRoute::direct, build_cu_direct(gamma), {}, 0.0};
}

QuantumChannel apply_noise(const CircuitSpec& spec, const NoiseModel& noise) {
  noise.validate();
  const CMatrix eye2 = CMatrix::identity(2);

  if (spec.route == CircuitRoute::direct || spec.gates.empty()) {
    QuantumChannel ch = QuantumChannel::unitary(spec.unitary);
    if (noise.depolarizing_p > 0.0) {
      ch = QuantumChannel::compose(QuantumChannel::depolarizing(noise.depolarizing_p, 4), ch);
    }
    if (noise.overrotation_eps != 0.0) {
      const CMatrix rot = rotation_y(noise.overrotation_eps);
      ch = QuantumChannel::compose(QuantumChannel::unitary(kron(rot, rot)), ch);
    }
    return ch;
  }

  QuantumChannel ch = QuantumChannel::identity(4);
  for (const GateOp& g : spec.gates) {
    const CMatrix full = g.two_qubit ? g.op : kron(eye2, g.op);
    ch = QuantumChannel::compose(QuantumChannel::unitary(full), ch);
    if (g.two_qubit) {
      if (noise.depolarizing_p > 0.0) {
        ch = QuantumChannel::compose(QuantumChannel::depolarizing(noise.depolarizing_p, 4), ch);
      }
    } else if (noise.overrotation_eps != 0.0) {
      const CMatrix rot = kron(eye2, rotation_y(noise.overrotation_eps));
      ch = QuantumChannel::compose(QuantumChannel::unitary(rot), ch);
    }
  }
  return QuantumChannel::compose(QuantumChannel::unitary(swap_gate()), ch);
}

double ConditionalChannelPair::completeness_defect() const {
  CMatrix s(e0.dim());
  for (const CMatrix& k : e0.kraus_ops()) s += k.adjoint() * k;
  for (const CMatrix& k : e1.kraus_ops()) s += k.adjoint() * k;
  s -= CMatrix::identity(e0.dim());
  return s.frobenius_norm();
}

ConditionalChannelPair conditional_maps(const QuantumChannel& noisy, double flip_q) {
  if (noisy.dim() != 4) throw DimensionMismatchError("conditional maps need a two-qubit channel");
  if (flip_q < 0.0 || flip_q > 0.5) throw InvalidParamsError("readout flip outside [0,0.5]");

  // Branch Kraus for true outcome j: K[r][c] = M[2r + j][2c + 0]; the flip
  // mixes the two true-outcome branches into each reported branch.
  auto slice = [&](int j) {
    std::vector<CMatrix> ops;
    for (const CMatrix& m : noisy.kraus_ops()) {
      CMatrix k(2);
      for (int r = 0; r < 2; ++r)
        for (int col = 0; col < 2; ++col) k(r, col) = m(2 * r + j, 2 * col);
      ops.push_back(std::move(k));
    }
    return ops;
  };

  auto branch = [&](int reported) {
    std::vector<CMatrix> ops;
    const double keep = 1.0 - flip_q;
    for (CMatrix& k : slice(reported)) {
      if (keep > 0.0) ops.push_back(std::sqrt(keep) * k);
    }
    if (flip_q > 0.0) {
      for (CMatrix& k : slice(1 - reported)) ops.push_back(std::sqrt(flip_q) * k);
    }
    QuantumChannel ch = QuantumChannel::from_kraus(std::move(ops));
    if (ch.kraus_ops().size() > 4) ch = ch.canonicalized();
    return ch;
  };

  return ConditionalChannelPair{branch(0), branch(1)};
}

ConditionalChannelPair conditional_pair(const TransitionMatrix& gamma, CircuitRoute route,
                                        const NoiseModel& noise, std::uint64_t seed) {
  const CircuitSpec spec = make_circuit(gamma, route, seed);
  return conditional_maps(apply_noise(spec, noise), noise.readout_flip_q);
}

std::vector<EnsembleMember> spectral_ensemble(const DensityMatrix& rho) {
  const EigenSystem es = hermitian_eigensolve(rho.matrix());
  std::vector<EnsembleMember> members;
  double total = 0.0;
  for (std::size_t k = 0; k < es.values.size(); ++k) {
    if (es.values[k] <= 1e-12) continue;
    CVector v(rho.dim());
    for (int r = 0; r < rho.dim(); ++r) v[r] = es.vectors(r, static_cast<int>(k));
    members.push_back({std::move(v), es.values[k]});
    total += es.values[k];
  }
  for (EnsembleMember& m : members) m.weight /= total;
  return members;
}

ShotCounts run_shots(const std::vector<EnsembleMember>& ensemble,
                     const ConditionalChannelPair& pair, long long n, std::uint64_t seed) {
  if (n < 1) throw InvalidParamsError("shot count must be at least 1");
  double wsum = 0.0;
  for (const EnsembleMember& m : ensemble) wsum += m.weight;
  if (std::abs(wsum - 1.0) > 1e-9) throw InvalidParamsError("ensemble weights must sum to 1");

  std::vector<double> p0(ensemble.size());
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    const CMatrix rho = outer(ensemble[k].state, ensemble[k].state);
    const double p = pair.e0.apply(rho).trace().real();
    p0[k] = std::min(1.0, std::max(0.0, p));
  }

  Rng rng(seed);
  ShotCounts counts;
  for (long long shot = 0; shot < n; ++shot) {
    double u = rng.uniform() * wsum;
    std::size_t k = 0;
    for (; k + 1 < ensemble.size(); ++k) {
      if (u < ensemble[k].weight) break;
      u -= ensemble[k].weight;
    }
    if (rng.uniform() < p0[k]) {
      ++counts.n0;
    } else {
      ++counts.n1;
    }
  }
  return counts;
}

std::vector<int> classical_sample(const TransitionMatrix& gamma, long long n_steps,
                                  std::uint64_t seed, std::optional<int> start) {
  Rng rng(seed);
  int state;
  if (start) {
    state = *start;
  } else {
    const StationaryDistribution p = stationary_distribution(gamma);
    state = rng.uniform() < p.p0 ? 0 : 1;
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  for (long long i = 0; i < n_steps; ++i) {
    state = rng.uniform() < gamma(state, 0) ? 0 : 1;
    out.push_back(state);
  }
  return out;
}

}  // namespace qem
