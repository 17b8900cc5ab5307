#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "qem/circuit.hpp"
#include "qem/ising.hpp"
#include "qem/qmath.hpp"

#include "json.hpp"

namespace qem {

// One point in the search space of the fixed-point minimization.
struct FixedPointCandidate {
  DensityMatrix rho0;
  DensityMatrix rho1;
  TransitionMatrix gamma;
};

// Sum over (i, j) of the trace distance between E_j(rho_i) and gamma_ij rho_j.
// Zero exactly when the candidate satisfies the fixed-point relations.
double fixed_point_objective(const FixedPointCandidate& candidate,
                             const ConditionalChannelPair& pair);

struct OptimizerConfig {
  int starts = 32;
  int max_evals = 20000;  // per start
  double tolerance = 1e-8;  // Nelder-Mead objective-spread tolerance
  std::uint64_t seed = 1;

  void validate() const {
    if (starts < 1) throw InvalidParamsError("optimizer needs at least one start");
    if (!(tolerance > 0.0)) throw InvalidParamsError("tolerance must be positive");
  }
};

struct FixedPointSolution {
  DensityMatrix rho0;
  DensityMatrix rho1;
  TransitionMatrix gamma_m;
  double residual = 0.0;
  StationaryDistribution p_m;
  double t_m = 0.0;
  double b_m = 0.0;
  DensityMatrix rho_m;
  bool converged = false;  // simplex spread met the tolerance on the best start

  nlohmann::json to_json() const;
};

// Minimizes the Eq.-style objective over (rho0, rho1, gamma) with Bloch-ball
// and logit parameterizations, multi-start Nelder-Mead, warm-started at the
// noiseless candidate built from `nominal_gamma` (estimated from the channel
// pair when absent). `nominal_tb` seeds the (T, B) inversion of gamma_m.
FixedPointSolution solve_fixed_points(const ConditionalChannelPair& pair,
                                      const OptimizerConfig& cfg, double j,
                                      std::optional<TransitionMatrix> nominal_gamma = {},
                                      std::optional<std::pair<double, double>> nominal_tb = {});

}  // namespace qem
