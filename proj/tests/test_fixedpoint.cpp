#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qem/fixedpoint.hpp"
#include "qem/machine.hpp"
#include "qem/tomography.hpp"
#include "test_util.hpp"

using namespace qem;
using namespace qem::test;

namespace {

const TransitionMatrix& nominal_gamma() {
  static const TransitionMatrix g = transition_probabilities({1.0, 0.3, 2.0});
  return g;
}

FixedPointCandidate ideal_candidate(const TransitionMatrix& g) {
  const QuantumCausalStates s = quantum_causal_states(g);
  return FixedPointCandidate{DensityMatrix::pure(s.ket0()), DensityMatrix::pure(s.ket1()), g};
}

double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

}  // namespace

TEST_SUITE("fixedpoint") {

TEST_CASE("objective: ideal circuit makes the causal states exact fixed points") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair = conditional_pair(g, CircuitRoute::direct, NoiseModel{});
  CHECK(fixed_point_objective(ideal_candidate(g), pair) < 1e-10);

  // Wrong state assignment is detected.
  FixedPointCandidate swapped = ideal_candidate(g);
  std::swap(swapped.rho0, swapped.rho1);
  CHECK(fixed_point_objective(swapped, pair) > 0.1);
}

TEST_CASE("objective: label consistency under the full relabeling") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair =
      conditional_pair(g, CircuitRoute::decomposed, NoiseModel::defaults());
  Rng rng(17);
  const FixedPointCandidate cand{random_density(rng, 2), random_density(rng, 2),
                                 random_gamma(rng)};
  const FixedPointCandidate relabeled{
      cand.rho1, cand.rho0,
      TransitionMatrix::from_rows(cand.gamma(1, 1), cand.gamma(0, 1))};
  const ConditionalChannelPair swapped_pair{pair.e1, pair.e0};
  // Swapping states and gamma alone changes the value (the physical outcome
  // index pins the labels)...
  CHECK(std::abs(fixed_point_objective(cand, pair) -
                 fixed_point_objective(relabeled, pair)) > 1e-6);
  // ...but together with the channel swap it is an exact symmetry.
  CHECK(std::abs(fixed_point_objective(cand, pair) -
                 fixed_point_objective(relabeled, swapped_pair)) < 1e-12);
}

TEST_CASE("solve: zero-noise pair recovers the ideal machine") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair =
      conditional_pair(g, CircuitRoute::decomposed, NoiseModel{});
  OptimizerConfig cfg;
  const FixedPointSolution sol = solve_fixed_points(pair, cfg, 1.0, g, std::pair{2.0, 0.3});
  CHECK(sol.residual < 1e-8);
  const QuantumCausalStates s = quantum_causal_states(g);
  CHECK(trace_distance(sol.rho0, DensityMatrix::pure(s.ket0())) < 1e-6);
  CHECK(trace_distance(sol.rho1, DensityMatrix::pure(s.ket1())) < 1e-6);
  CHECK(std::abs(sol.t_m - 2.0) < 1e-4);
  CHECK(std::abs(sol.b_m - 0.3) < 1e-4);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(sol.gamma_m(i, j) - g(i, j)) < 1e-6);
    }
  }
}

TEST_CASE("solve: depolarizing noise yields mixed fixed-point states") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair =
      conditional_pair(g, CircuitRoute::direct, NoiseModel{0.05, 0.0, 0.0});
  OptimizerConfig cfg;
  cfg.seed = 101;
  const FixedPointSolution sol = solve_fixed_points(pair, cfg, 1.0, g, std::pair{2.0, 0.3});
  CHECK(purity(sol.rho0) < 1.0 - 1e-4);
  CHECK(purity(sol.rho1) < 1.0 - 1e-4);
  // Regression anchor for the default solver configuration.
  CHECK(std::abs(sol.residual - 1.00768e-2) < 1e-4);
}

TEST_CASE("solve: independent solver seeds agree") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair =
      conditional_pair(g, CircuitRoute::decomposed, NoiseModel::defaults());
  OptimizerConfig c1;
  c1.seed = 101;
  OptimizerConfig c2;
  c2.seed = 707;
  const FixedPointSolution a = solve_fixed_points(pair, c1, 1.0, g, std::pair{2.0, 0.3});
  const FixedPointSolution b = solve_fixed_points(pair, c2, 1.0, g, std::pair{2.0, 0.3});
  CHECK(std::abs(a.residual - b.residual) < 1e-6);
  CHECK(trace_distance(a.rho0, b.rho0) < 1e-4);
  CHECK(trace_distance(a.rho1, b.rho1) < 1e-4);
}

TEST_CASE("solve: never worse than the noiseless candidate") {
  const TransitionMatrix g = nominal_gamma();
  const NoiseModel noises[] = {
      {0.03, 0.02, 0.01}, {0.1, 0.0, 0.0}, {0.0, 0.15, 0.0}, {0.0, 0.0, 0.2}};
  for (const NoiseModel& noise : noises) {
    const ConditionalChannelPair pair = conditional_pair(g, CircuitRoute::decomposed, noise);
    OptimizerConfig cfg;
    const FixedPointSolution sol = solve_fixed_points(pair, cfg, 1.0, g, std::pair{2.0, 0.3});
    CHECK(sol.residual <= fixed_point_objective(ideal_candidate(g), pair) + 1e-12);
    // At any real noise level the optimizer strictly beats the noiseless seed.
    if (!noise.is_zero()) {
      CHECK(sol.residual < fixed_point_objective(ideal_candidate(g), pair));
    }
  }
}

TEST_CASE("solve: solution invariants hold") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair =
      conditional_pair(g, CircuitRoute::decomposed, NoiseModel::defaults());
  OptimizerConfig cfg;
  const FixedPointSolution sol = solve_fixed_points(pair, cfg, 1.0, g, std::pair{2.0, 0.3});

  CHECK(std::abs(sol.gamma_m(0, 0) + sol.gamma_m(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(sol.gamma_m(1, 0) + sol.gamma_m(1, 1) - 1.0) < 1e-15);

  const StationaryDistribution p = stationary_distribution(sol.gamma_m);
  CHECK(sol.p_m.p0 == doctest::Approx(p.p0).epsilon(1e-12));

  CMatrix mix = cplx(sol.p_m.p0) * sol.rho0.matrix() + cplx(sol.p_m.p1) * sol.rho1.matrix();
  CHECK(trace_distance(mix, sol.rho_m.matrix()) < 1e-12);

  const FixedPointCandidate cand{sol.rho0, sol.rho1, sol.gamma_m};
  CHECK(std::abs(fixed_point_objective(cand, pair) - sol.residual) < 1e-10);
  CHECK(sol.converged);
}

TEST_CASE("solve: works from a tomography-reconstructed pair") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair truth =
      conditional_pair(g, CircuitRoute::decomposed, NoiseModel::defaults());
  const ReconstructionResult rec = reconstruct_channels(generate_tomography_data_exact(truth));
  const ConditionalChannelPair reconstructed{rec.e0_hat, rec.e1_hat};
  OptimizerConfig cfg;
  const FixedPointSolution a = solve_fixed_points(truth, cfg, 1.0, g, std::pair{2.0, 0.3});
  const FixedPointSolution b =
      solve_fixed_points(reconstructed, cfg, 1.0, g, std::pair{2.0, 0.3});
  CHECK(std::abs(a.residual - b.residual) < 1e-6);
  CHECK(trace_distance(a.rho0, b.rho0) < 1e-4);
  CHECK(std::abs(a.t_m - b.t_m) < 1e-3);
}

TEST_CASE("solution serializes to JSON") {
  const TransitionMatrix g = nominal_gamma();
  const ConditionalChannelPair pair = conditional_pair(g, CircuitRoute::direct, NoiseModel{});
  OptimizerConfig cfg;
  cfg.starts = 4;
  const FixedPointSolution sol = solve_fixed_points(pair, cfg, 1.0, g, std::pair{2.0, 0.3});
  const nlohmann::json j = sol.to_json();
  CHECK(j.contains("rho0_bloch"));
  CHECK(j.contains("rho1_bloch"));
  CHECK(j.at("gamma").size() == 4);
  CHECK(j.at("t").get<double>() == doctest::Approx(sol.t_m));
  CHECK(j.at("b").get<double>() == doctest::Approx(sol.b_m));
  CHECK(j.at("p").at(0).get<double>() == doctest::Approx(sol.p_m.p0));
  CHECK(j.at("residual").get<double>() == sol.residual);
}

}  // TEST_SUITE
