#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "qem/errors.hpp"

namespace qem {

// Nearest-neighbour chain parameters. Natural units: k_B = 1, |J| is the
// energy unit, so B and T are dimensionless.
struct IsingParams {
  double j = 1.0;
  double b = 0.0;
  double t = 1.0;
  void validate() const {
    if (!(t > 0.0)) throw InvalidParamsError("temperature must be positive");
    if (j == 0.0) throw InvalidParamsError("coupling must be nonzero");
  }
};

// Row-stochastic 2x2 matrix: gamma(i, j) is the probability of emitting j and
// moving to causal state S_j from S_i. Spin +1 maps to index 0 so that S_0 is
// the field-aligned state for B > 0.
class TransitionMatrix {
public:
  TransitionMatrix(double g00, double g01, double g10, double g11);
  // Rows sum to 1 by construction.
  static TransitionMatrix from_rows(double g00, double g10) {
    return TransitionMatrix(g00, 1.0 - g00, g10, 1.0 - g10);
  }

  double operator()(int i, int j) const { return g_[static_cast<std::size_t>(2 * i + j)]; }

  // Single-causal-state process: both rows coincide within tolerance.
  bool degenerate(double tol = 1e-9) const;

private:
  std::array<double, 4> g_;
};

struct StationaryDistribution {
  double p0 = 0.5;
  double p1 = 0.5;
};

// Symmetric positive transfer matrix V[x,x'] = exp(beta (J x x' + B(x+x')/2)),
// rescaled by its largest entry (the conditionals are scale-invariant and the
// rescaling keeps low-T exponentials in range).
struct TransferMatrix {
  std::array<double, 4> v;
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(2 * i + j)]; }
};

TransferMatrix transfer_matrix(const IsingParams& params);

// Gamma from the Perron eigenpair of the transfer matrix:
// gamma(i,j) = V(i,j) phi(j) / (lambda phi(i)).
TransitionMatrix transition_probabilities(const IsingParams& params);

// Literal Boltzmann enumeration over all 2^L open-chain configurations;
// returns the conditional spin distribution at the two central sites.
// Independent of the transfer-matrix route, used to cross-validate it.
TransitionMatrix brute_force_gamma(const IsingParams& params, int chain_length);

StationaryDistribution stationary_distribution(const TransitionMatrix& gamma);

struct InversionResult {
  double t = 0.0;
  double b = 0.0;
  double residual = 0.0;  // sqrt of the squared residual on (gamma01, gamma10)
  bool converged = false;
};

// Recover (T, B) from gamma at a fixed coupling. Damped Newton on (log T, B)
// seeded at `initial_guess` (or the caller's nominal point), with random
// restarts as fallback. Throws NotAchievable when the best residual exceeds
// 1e-4 and NoConvergence when the iteration budget runs out before that can
// be decided.
InversionResult invert_parameters(const TransitionMatrix& gamma, double j,
                                  std::optional<std::pair<double, double>> initial_guess = {},
                                  std::uint64_t restart_seed = 1);

}  // namespace qem
