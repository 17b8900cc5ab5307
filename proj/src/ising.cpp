#include "qem/ising.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qem/rng.hpp"

namespace qem {

TransitionMatrix::TransitionMatrix(double g00, double g01, double g10, double g11)
    : g_{g00, g01, g10, g11} {
  for (double g : g_) {
    if (!(g >= 0.0 && g <= 1.0)) {
      throw InvalidParamsError("transition probability outside [0,1]");
    }
  }
  if (std::abs(g00 + g01 - 1.0) > 1e-12 || std::abs(g10 + g11 - 1.0) > 1e-12) {
    throw InvalidParamsError("transition matrix rows must sum to 1");
  }
}

bool TransitionMatrix::degenerate(double tol) const {
  return std::abs((*this)(0, 0) - (*this)(1, 0)) < tol;
}

TransferMatrix transfer_matrix(const IsingParams& params) {
  params.validate();
  const double beta = 1.0 / params.t;
  // Spin values by index: x(0) = +1, x(1) = -1.
  auto expo = [&](int i, int k) {
    const double xi = i == 0 ? 1.0 : -1.0;
    const double xk = k == 0 ? 1.0 : -1.0;
    return beta * (params.j * xi * xk + params.b * (xi + xk) / 2.0);
  };
  double emax = expo(0, 0);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) emax = std::max(emax, expo(i, k));
  TransferMatrix v{};
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) v.v[static_cast<std::size_t>(2 * i + k)] = std::exp(expo(i, k) - emax);
  return v;
}

TransitionMatrix transition_probabilities(const IsingParams& params) {
  const TransferMatrix v = transfer_matrix(params);
  // gamma_ij = V_ij phi_j / (lambda phi_i) with (lambda, phi) the Perron
  // eigenpair. Row-normalizing leaves only the component ratio
  // q = phi_1/phi_0 = tan(theta): row_i is proportional to (V_i0, V_i1 q).
  // Branch on q vs 1 so neither division can blow up when the eigenvector
  // collapses onto one component at extreme parameters.
  const double a = v(0, 0);
  const double c = v(0, 1);
  const double d = v(1, 1);
  const double theta = 0.5 * std::atan2(2.0 * c, a - d);
  const double q = std::tan(theta);

  double row[2][2];
  if (q <= 1.0) {
    row[0][0] = a;
    row[0][1] = c * q;
    row[1][0] = c;
    row[1][1] = d * q;
  } else {
    const double r = 1.0 / q;
    row[0][0] = a * r;
    row[0][1] = c;
    row[1][0] = c * r;
    row[1][1] = d;
  }
  double g[2][2];
  for (int i = 0; i < 2; ++i) {
    const double sum = row[i][0] + row[i][1];
    if (sum > 0.0 && std::isfinite(sum)) {
      g[i][0] = row[i][0] / sum;
      g[i][1] = row[i][1] / sum;
    } else {
      // Entire row underflowed. In that regime the Perron vector has
      // collapsed onto one component and every state hops there next.
      g[i][0] = q <= 1.0 ? 1.0 : 0.0;
      g[i][1] = q <= 1.0 ? 0.0 : 1.0;
    }
  }
  return TransitionMatrix(g[0][0], g[0][1], g[1][0], g[1][1]);
}

TransitionMatrix brute_force_gamma(const IsingParams& params, int chain_length) {
  params.validate();
  if (chain_length < 8) throw InvalidParamsError("chain length must be at least 8");
  if (chain_length > 28) throw TooLargeError("enumeration bound is 2^28 configurations");

  const int len = chain_length;
  const double beta = 1.0 / params.t;
  // Open chain; bit 0 of the mask is site 0, bit value 1 means spin -1.
  // H = -J sum x_k x_{k+1} - B sum x_k, so with f = #antialigned bonds and
  // m = #down spins the Boltzmann weight factorizes into two power tables.
  // Both tables are normalized against configuration 0 (all spins up).
  const double wa = std::exp(-2.0 * beta * params.j);  // per antialigned bond
  const double wb = std::exp(-2.0 * beta * params.b);  // per down spin
  std::vector<double> pow_a(static_cast<std::size_t>(len), 1.0);
  std::vector<double> pow_b(static_cast<std::size_t>(len) + 1, 1.0);
  for (std::size_t i = 1; i < pow_a.size(); ++i) pow_a[i] = pow_a[i - 1] * wa;
  for (std::size_t i = 1; i < pow_b.size(); ++i) pow_b[i] = pow_b[i - 1] * wb;

  const std::uint32_t n_configs = 1u << len;
  const std::uint32_t bond_mask = (1u << (len - 1)) - 1u;
  const int k0 = len / 2 - 1;  // central pair (k0, k0 + 1)
  double z[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (std::uint32_t s = 0; s < n_configs; ++s) {
    const int flips = std::popcount((s ^ (s >> 1)) & bond_mask);
    const int downs = std::popcount(s);
    const double w = pow_a[static_cast<std::size_t>(flips)] * pow_b[static_cast<std::size_t>(downs)];
    z[(s >> k0) & 1u][(s >> (k0 + 1)) & 1u] += w;
  }
  const double r0 = z[0][0] + z[0][1];
  const double r1 = z[1][0] + z[1][1];
  return TransitionMatrix(z[0][0] / r0, z[0][1] / r0, z[1][0] / r1, z[1][1] / r1);
}

StationaryDistribution stationary_distribution(const TransitionMatrix& gamma) {
  const double g01 = gamma(0, 1);
  const double g10 = gamma(1, 0);
  if (g01 + g10 <= 0.0) {
    throw DegenerateError("both causal states absorbing; no unique stationary distribution");
  }
  StationaryDistribution p;
  p.p0 = g10 / (g10 + g01);
  p.p1 = 1.0 - p.p0;
  return p;
}

namespace {

// Squared residual on the two independent entries (gamma01, gamma10).
double inversion_residual2(const TransitionMatrix& target, double j, double log_t, double b) {
  const double t = std::exp(log_t);
  // Keep Newton probes inside a sane domain; anything outside is hopeless
  // anyway and extreme exponents degrade the transfer matrix.
  if (!(t > 1e-9) || !(t < 1e15) || !std::isfinite(b) || std::abs(b) > 1e6) return 1e100;
  TransitionMatrix g = transition_probabilities({j, b, t});
  const double d01 = g(0, 1) - target(0, 1);
  const double d10 = g(1, 0) - target(1, 0);
  return d01 * d01 + d10 * d10;
}

struct NewtonOutcome {
  double log_t;
  double b;
  double res2;
  bool stalled;  // hit the iteration budget without the step converging
};

NewtonOutcome damped_newton(const TransitionMatrix& target, double j, double log_t, double b) {
  double res2 = inversion_residual2(target, j, log_t, b);
  bool stalled = true;
  for (int iter = 0; iter < 100; ++iter) {
    if (res2 < 1e-24) {
      stalled = false;
      break;
    }
    // Central-difference Jacobian of (gamma01, gamma10) w.r.t. (log T, B).
    const double h = 1e-6;
    auto entries = [&](double lt, double bb) {
      TransitionMatrix g = transition_probabilities({j, bb, std::exp(lt)});
      return std::array<double, 2>{g(0, 1), g(1, 0)};
    };
    const auto fp = entries(log_t, b);
    const auto fxp = entries(log_t + h, b);
    const auto fxm = entries(log_t - h, b);
    const auto fyp = entries(log_t, b + h);
    const auto fym = entries(log_t, b - h);
    const double j00 = (fxp[0] - fxm[0]) / (2 * h);
    const double j01 = (fyp[0] - fym[0]) / (2 * h);
    const double j10 = (fxp[1] - fxm[1]) / (2 * h);
    const double j11 = (fyp[1] - fym[1]) / (2 * h);
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-18) break;
    const double r0 = fp[0] - target(0, 1);
    const double r1 = fp[1] - target(1, 0);
    const double step_lt = -(j11 * r0 - j01 * r1) / det;
    const double step_b = -(-j10 * r0 + j00 * r1) / det;

    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt) {
      const double cand2 = inversion_residual2(target, j, log_t + scale * step_lt,
                                               b + scale * step_b);
      if (cand2 < res2) {
        log_t += scale * step_lt;
        b += scale * step_b;
        res2 = cand2;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      stalled = false;  // locally converged: no descent direction left
      break;
    }
    if (std::hypot(scale * step_lt, scale * step_b) < 1e-14) {
      stalled = false;
      break;
    }
  }
  return {log_t, b, res2, stalled};
}

}  // namespace

InversionResult invert_parameters(const TransitionMatrix& gamma, double j,
                                  std::optional<std::pair<double, double>> initial_guess,
                                  std::uint64_t restart_seed) {
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      if (gamma(i, k) <= 0.0 || gamma(i, k) >= 1.0) {
        throw InvalidParamsError("inversion requires gamma strictly inside the simplex");
      }
    }

  const double t0 = initial_guess ? initial_guess->first : 2.0;
  const double b0 = initial_guess ? initial_guess->second : 0.0;
  NewtonOutcome best = damped_newton(gamma, j, std::log(t0), b0);

  bool budget_exhausted = best.stalled;
  if (best.res2 >= 1e-24) {
    Rng rng(derive_seed(restart_seed, 0x15e7));
    for (int start = 0; start < 64 && best.res2 >= 1e-24; ++start) {
      const double lt = rng.uniform(std::log(0.1), std::log(100.0));
      const double bb = rng.uniform(-3.0, 3.0);
      NewtonOutcome cand = damped_newton(gamma, j, lt, bb);
      if (cand.res2 < best.res2) best = cand;
      budget_exhausted = budget_exhausted && cand.stalled;
    }
  }

  const double residual = std::sqrt(best.res2);
  if (residual > 1e-4) {
    throw NotAchievableError("no (T,B) reproduces gamma=[" + std::to_string(gamma(0, 0)) + " " +
                             std::to_string(gamma(0, 1)) + "; " + std::to_string(gamma(1, 0)) +
                             " " + std::to_string(gamma(1, 1)) + "] at J=" + std::to_string(j) +
                             "; best residual " + std::to_string(residual));
  }
  if (budget_exhausted && residual > 1e-9) {
    throw NoConvergenceError("parameter inversion exhausted its iteration budget; residual " +
                             std::to_string(residual));
  }

  InversionResult r;
  r.t = std::exp(best.log_t);
  r.b = best.b;
  r.residual = residual;
  r.converged = residual < 1e-9;
  return r;
}

}  // namespace qem
