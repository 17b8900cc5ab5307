#include "qem/fixedpoint.hpp"

#include <cmath>
#include <vector>

#include "qem/machine.hpp"
#include "qem/neldermead.hpp"
#include "qem/rng.hpp"

namespace qem {

namespace {

// Logits are clamped so gamma entries stay strictly inside (0, 1) and the
// downstream (T, B) inversion never sees a boundary value.
constexpr double kLogitClamp = 36.0;

double sigmoid(double x) {
  const double c = std::min(kLogitClamp, std::max(-kLogitClamp, x));
  return 1.0 / (1.0 + std::exp(-c));
}

double logit(double p) {
  const double c = std::min(1.0 - 1e-15, std::max(1e-15, p));
  return std::log(c / (1.0 - c));
}

// Unconstrained 3-vector -> Bloch ball, radius through tanh.
BlochVector squash_to_ball(double u0, double u1, double u2) {
  const double n = std::sqrt(u0 * u0 + u1 * u1 + u2 * u2);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  const double r = std::tanh(n) / n;
  return {u0 * r, u1 * r, u2 * r};
}

std::array<double, 3> unsquash(const BlochVector& b) {
  const double n = std::min(b.norm(), 1.0 - 1e-9);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  const double scale = std::atanh(n) / b.norm();
  return {b.x * scale, b.y * scale, b.z * scale};
}

FixedPointCandidate decode(const std::vector<double>& x) {
  return FixedPointCandidate{
      bloch_to_density(squash_to_ball(x[0], x[1], x[2])),
      bloch_to_density(squash_to_ball(x[3], x[4], x[5])),
      TransitionMatrix::from_rows(sigmoid(x[6]), sigmoid(x[7])),
  };
}

std::vector<double> encode(const DensityMatrix& rho0, const DensityMatrix& rho1,
                           const TransitionMatrix& gamma) {
  const auto u0 = unsquash(density_to_bloch(rho0));
  const auto u1 = unsquash(density_to_bloch(rho1));
  return {u0[0], u0[1], u0[2], u1[0], u1[1], u1[2], logit(gamma(0, 0)), logit(gamma(1, 0))};
}

DensityMatrix pure_causal_state(const QuantumCausalStates& s, int which) {
  return DensityMatrix::pure(which == 0 ? s.ket0() : s.ket1());
}

// Branch probabilities on the computational basis; a serviceable stand-in for
// the nominal gamma when the caller has none.
TransitionMatrix probe_gamma(const ConditionalChannelPair& pair) {
  auto row = [&](int i) {
    const CMatrix rho = outer(CVector::basis(2, i), CVector::basis(2, i));
    const double p0 = pair.e0.apply(rho).trace().real();
    const double p1 = pair.e1.apply(rho).trace().real();
    return std::min(1.0 - 1e-9, std::max(1e-9, p0 / (p0 + p1)));
  };
  double g00 = row(0);
  double g10 = row(1);
  if (std::abs(g00 - g10) < 2e-9) g10 = g10 > g00 ? g00 + 2e-9 : g00 - 2e-9;
  return TransitionMatrix::from_rows(g00, g10);
}

}  // namespace

double fixed_point_objective(const FixedPointCandidate& candidate,
                             const ConditionalChannelPair& pair) {
  const DensityMatrix* rho[2] = {&candidate.rho0, &candidate.rho1};
  const QuantumChannel* maps[2] = {&pair.e0, &pair.e1};
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const CMatrix lhs = maps[j]->apply(*rho[i]);
      const CMatrix rhs = cplx(candidate.gamma(i, j)) * rho[j]->matrix();
      total += trace_distance(lhs, rhs);
    }
  }
  return total;
}

namespace {

// For a 2x2 Hermitian difference M with eigenvalues m +- h (m = tr M / 2,
// h = half eigenvalue gap), the trace distance is exactly max(|m|, h). The
// smoothed variant rounds both the |.| and the max with parameter mu; at
// mu = 0 it reproduces the objective value bit-for-bit up to rounding.
double smoothed_objective(const FixedPointCandidate& candidate,
                          const ConditionalChannelPair& pair, double mu) {
  const DensityMatrix* rho[2] = {&candidate.rho0, &candidate.rho1};
  const QuantumChannel* maps[2] = {&pair.e0, &pair.e1};
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CMatrix diff = maps[j]->apply(*rho[i]);
      diff -= cplx(candidate.gamma(i, j)) * rho[j]->matrix();
      const double m = 0.5 * (diff(0, 0).real() + diff(1, 1).real());
      const double half_gap_sq = 0.25 * (diff(0, 0).real() - diff(1, 1).real()) *
                                     (diff(0, 0).real() - diff(1, 1).real()) +
                                 std::norm(diff(0, 1));
      if (mu <= 0.0) {
        total += std::max(std::abs(m), std::sqrt(half_gap_sq));
      } else {
        const double a = std::sqrt(m * m + mu * mu);
        const double b = std::sqrt(half_gap_sq + mu * mu);
        const double hi = std::max(a, b);
        total += hi + mu * std::log1p(std::exp(-(2.0 * hi - a - b) / mu));
      }
    }
  }
  return total;
}

}  // namespace

nlohmann::json FixedPointSolution::to_json() const {
  auto bloch = [](const DensityMatrix& rho) {
    const BlochVector b = density_to_bloch(rho);
    return nlohmann::json{{"x", b.x}, {"y", b.y}, {"z", b.z}};
  };
  return nlohmann::json{
      {"rho0_bloch", bloch(rho0)},
      {"rho1_bloch", bloch(rho1)},
      {"gamma", {gamma_m(0, 0), gamma_m(0, 1), gamma_m(1, 0), gamma_m(1, 1)}},
      {"residual", residual},
      {"p", {p_m.p0, p_m.p1}},
      {"t", t_m},
      {"b", b_m},
      {"converged", converged},
  };
}

FixedPointSolution solve_fixed_points(const ConditionalChannelPair& pair,
                                      const OptimizerConfig& cfg, double j,
                                      std::optional<TransitionMatrix> nominal_gamma,
                                      std::optional<std::pair<double, double>> nominal_tb) {
  cfg.validate();
  const TransitionMatrix nominal = nominal_gamma ? *nominal_gamma : probe_gamma(pair);
  const QuantumCausalStates ideal = quantum_causal_states(nominal);

  auto objective_at = [&](double mu) {
    return [&pair, mu](const std::vector<double>& x) {
      return smoothed_objective(decode(x), pair, mu);
    };
  };

  const std::vector<double> warm =
      encode(pure_causal_state(ideal, 0), pure_causal_state(ideal, 1), nominal);

  // Multi-start exploration on a well-smoothed landscape. With the creases
  // rounded off, every start inside the winning basin settles onto the same
  // stage-one minimizer, which keeps the final answer seed-independent.
  const double mu0 = 1e-2;
  NelderMeadResult best;
  best.fx = 1e300;
  for (int start = 0; start < cfg.starts; ++start) {
    std::vector<double> x0;
    if (start == 0) {
      x0 = warm;
    } else {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(start)));
      x0.resize(8);
      for (int k = 0; k < 6; ++k) x0[static_cast<std::size_t>(k)] = rng.normal();
      x0[6] = rng.uniform(-3.0, 3.0);
      x0[7] = rng.uniform(-3.0, 3.0);
    }
    NelderMeadResult r = nelder_mead(objective_at(mu0), std::move(x0), 0.25, cfg.max_evals,
                                     1e-13);
    if (r.fx < best.fx) best = r;
  }

  // Anneal the smoothing away; each stage is smooth, so the simplex tracks
  // the minimizer path tightly. Finish on the exact objective with a
  // deterministic compass descent for the last (kinked) stretch.
  for (double mu : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
    auto f = objective_at(mu);
    best.fx = f(best.x);  // re-evaluate the incumbent at the new smoothing level
    for (double step : {0.02, 0.004}) {
      NelderMeadResult r = nelder_mead(f, best.x, step, cfg.max_evals, 1e-14);
      if (r.fx < best.fx) {
        r.converged = r.converged || best.converged;
        best = r;
      }
    }
  }
  {
    auto f0 = objective_at(0.0);
    best.fx = f0(best.x);
    for (double step : {0.01, 0.002}) {
      NelderMeadResult r = nelder_mead(f0, best.x, step, cfg.max_evals, cfg.tolerance * 1e-6);
      if (r.fx < best.fx) {
        r.converged = r.converged || best.converged;
        best = r;
      }
    }
    NelderMeadResult ps = pattern_search(f0, best.x, 0.002, 1e-10, 2 * cfg.max_evals);
    if (ps.fx <= best.fx) {
      ps.converged = ps.converged || best.converged;
      best = ps;
    }
    // Monotone-improvement guard: never return anything above the noiseless
    // candidate's objective.
    if (best.fx > f0(warm)) {
      NelderMeadResult ws = pattern_search(f0, warm, 0.01, 1e-10, 2 * cfg.max_evals);
      if (ws.fx < best.fx) best = ws;
    }
  }

  FixedPointCandidate found = decode(best.x);

  // The objective is invariant under the full state+gamma relabeling only for
  // outcome-symmetric pairs; break that tie deterministically by keeping
  // rho0 the state closer to the noiseless |S_0><S_0|.
  const FixedPointCandidate twin{found.rho1, found.rho0,
                                 TransitionMatrix::from_rows(found.gamma(1, 1),
                                                             found.gamma(0, 1))};
  const double f_found = fixed_point_objective(found, pair);
  const double f_twin = fixed_point_objective(twin, pair);
  bool use_twin = f_twin < f_found - 1e-12;
  if (std::abs(f_twin - f_found) <= 1e-12) {
    const DensityMatrix s0 = pure_causal_state(ideal, 0);
    const double d_found = trace_distance(found.rho0, s0);
    const double d_twin = trace_distance(twin.rho0, s0);
    if (d_twin < d_found - 1e-12) {
      use_twin = true;
    } else if (std::abs(d_twin - d_found) <= 1e-12) {
      use_twin = twin.rho0.matrix()(0, 0).real() > found.rho0.matrix()(0, 0).real();
    }
  }
  if (use_twin) found = twin;

  FixedPointSolution sol{
      found.rho0,
      found.rho1,
      found.gamma,
      fixed_point_objective(found, pair),
      stationary_distribution(found.gamma),
      0.0,
      0.0,
      DensityMatrix::maximally_mixed(2),
      best.converged,
  };
  sol.rho_m = DensityMatrix(cplx(sol.p_m.p0) * sol.rho0.matrix() +
                            cplx(sol.p_m.p1) * sol.rho1.matrix());
  const InversionResult inv = invert_parameters(sol.gamma_m, j, nominal_tb, cfg.seed);
  sol.t_m = inv.t;
  sol.b_m = inv.b;
  return sol;
}

}  // namespace qem
