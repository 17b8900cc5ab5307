#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/qmath.hpp"

#include "json.hpp"

namespace qem {

enum class PauliBasis { x, y, z };

// Fixed tomographic input set, in this order.
enum class ProbeInput { zero = 0, one = 1, plus = 2, plus_i = 3 };
CVector probe_state(ProbeInput input);

struct TomoConfigCounts {
  ProbeInput input;
  int outcome = 0;  // ancilla outcome the branch is conditioned on
  PauliBasis basis;
  // Real-valued so the exact-probability mode can store probabilities
  // directly; in sampling mode these are integer counts.
  double n_plus = 0.0;
  double n_minus = 0.0;
};

struct TomographyDataset {
  std::vector<TomoConfigCounts> configs;  // 4 inputs x 2 outcomes x 3 bases
  double shots_per_config = 0.0;          // 1.0 in exact mode
  bool exact = false;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TomographyDataset from_json(const nlohmann::json& j);
};

// Measures the conditional pair on the four probe inputs in all three Pauli
// bases, splitting each configuration's shots across the ancilla outcomes.
// Multinomial sampling, deterministic per seed.
TomographyDataset generate_tomography_data(const ConditionalChannelPair& pair, long long shots,
                                           std::uint64_t seed);

// Exact-probability mode: counts hold the analytic cell probabilities.
TomographyDataset generate_tomography_data_exact(const ConditionalChannelPair& pair);

// Clamp negative Choi eigenvalues to zero and rescale to the pre-projection
// trace (clipped to [0, 2]).
CMatrix cp_project(const CMatrix& choi_like);

struct BranchStateEstimate {
  ProbeInput input;
  int outcome = 0;
  double branch_probability = 0.0;
  DensityMatrix state;  // normalized conditional output
};

struct ReconstructionResult {
  QuantumChannel e0_hat;
  QuantumChannel e1_hat;
  std::vector<BranchStateEstimate> state_hats;
  double fit_residual = 0.0;  // rms misfit of reconstructed vs observed frequencies
};

// Linear inversion from frequencies to the two branch Choi matrices in the
// fixed convention, followed by cp_project. Exact inputs are reconstructed
// exactly; finite counts shrink toward the truth like 1/sqrt(shots).
ReconstructionResult reconstruct_channels(const TomographyDataset& data);

struct BasisCounts {
  double n_plus = 0.0;
  double n_minus = 0.0;
};

struct StateTomographyCounts {
  std::optional<BasisCounts> x;
  std::optional<BasisCounts> y;
  std::optional<BasisCounts> z;
};

// Single-qubit state from Pauli expectation values, with the Bloch vector
// clipped to the unit ball.
DensityMatrix reconstruct_state(const StateTomographyCounts& counts);

}  // namespace qem
