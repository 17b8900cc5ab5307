#include "qem/tomography.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>

#include "qem/rng.hpp"

namespace qem {

namespace {

const char* input_label(ProbeInput in) {
  switch (in) {
    case ProbeInput::zero: return "0";
    case ProbeInput::one: return "1";
    case ProbeInput::plus: return "+";
    default: return "+i";
  }
}

const char* basis_label(PauliBasis b) {
  switch (b) {
    case PauliBasis::x: return "X";
    case PauliBasis::y: return "Y";
    default: return "Z";
  }
}

ProbeInput input_from_label(const std::string& s) {
  if (s == "0") return ProbeInput::zero;
  if (s == "1") return ProbeInput::one;
  if (s == "+") return ProbeInput::plus;
  if (s == "+i") return ProbeInput::plus_i;
  throw IncompleteDataError("unknown probe input label: " + s);
}

PauliBasis basis_from_label(const std::string& s) {
  if (s == "X") return PauliBasis::x;
  if (s == "Y") return PauliBasis::y;
  if (s == "Z") return PauliBasis::z;
  throw IncompleteDataError("unknown basis label: " + s);
}

CMatrix pauli(PauliBasis b) {
  switch (b) {
    case PauliBasis::x: return pauli_x();
    case PauliBasis::y: return pauli_y();
    default: return pauli_z();
  }
}

// P(outcome j, readout +/-) for one (input, basis) configuration.
struct CellProbs {
  double p[2][2];  // [outcome][0:+, 1:-]
};

CellProbs cell_probabilities(const ConditionalChannelPair& pair, ProbeInput input,
                             PauliBasis basis) {
  const CVector psi = probe_state(input);
  const CMatrix rho = outer(psi, psi);
  const CMatrix sigma[2] = {pair.e0.apply(rho), pair.e1.apply(rho)};
  const CMatrix pb = pauli(basis);
  CellProbs out{};
  for (int j = 0; j < 2; ++j) {
    const double tr = sigma[j].trace().real();
    const double ev = (pb * sigma[j]).trace().real();
    out.p[j][0] = std::max(0.0, 0.5 * (tr + ev));
    out.p[j][1] = std::max(0.0, 0.5 * (tr - ev));
  }
  return out;
}

constexpr std::array<ProbeInput, 4> kInputs = {ProbeInput::zero, ProbeInput::one,
                                               ProbeInput::plus, ProbeInput::plus_i};
constexpr std::array<PauliBasis, 3> kBases = {PauliBasis::x, PauliBasis::y, PauliBasis::z};

}  // namespace

CVector probe_state(ProbeInput input) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (input) {
    case ProbeInput::zero: return CVector::basis(2, 0);
    case ProbeInput::one: return CVector::basis(2, 1);
    case ProbeInput::plus: return CVector{cplx(s), cplx(s)};
    default: return CVector{cplx(s), cplx(0.0, s)};
  }
}

nlohmann::json TomographyDataset::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const TomoConfigCounts& c : configs) {
    rows.push_back({{"input", input_label(c.input)},
                    {"outcome", c.outcome},
                    {"basis", basis_label(c.basis)},
                    {"n_plus", c.n_plus},
                    {"n_minus", c.n_minus}});
  }
  return nlohmann::json{
      {"shots", shots_per_config}, {"seed", seed}, {"exact", exact}, {"configs", rows}};
}

TomographyDataset TomographyDataset::from_json(const nlohmann::json& j) {
  TomographyDataset d;
  d.shots_per_config = j.at("shots").get<double>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.exact = j.at("exact").get<bool>();
  for (const nlohmann::json& row : j.at("configs")) {
    d.configs.push_back({input_from_label(row.at("input").get<std::string>()),
                         row.at("outcome").get<int>(),
                         basis_from_label(row.at("basis").get<std::string>()),
                         row.at("n_plus").get<double>(), row.at("n_minus").get<double>()});
  }
  return d;
}

TomographyDataset generate_tomography_data(const ConditionalChannelPair& pair, long long shots,
                                           std::uint64_t seed) {
  if (shots < 100) throw InvalidParamsError("tomography needs at least 100 shots per config");
  TomographyDataset data;
  data.shots_per_config = static_cast<double>(shots);
  data.exact = false;
  data.seed = seed;
  int stream = 0;
  for (ProbeInput input : kInputs) {
    for (PauliBasis basis : kBases) {
      const CellProbs probs = cell_probabilities(pair, input, basis);
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(stream++)));
      // One multinomial draw over the four (outcome, readout) cells.
      double counts[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      const double total = probs.p[0][0] + probs.p[0][1] + probs.p[1][0] + probs.p[1][1];
      for (long long s = 0; s < shots; ++s) {
        double u = rng.uniform() * total;
        int cell = 3;
        for (int c = 0; c < 3; ++c) {
          const double p = probs.p[c / 2][c % 2];
          if (u < p) {
            cell = c;
            break;
          }
          u -= p;
        }
        counts[cell / 2][cell % 2] += 1.0;
      }
      for (int j = 0; j < 2; ++j) {
        data.configs.push_back({input, j, basis, counts[j][0], counts[j][1]});
      }
    }
  }
  return data;
}

TomographyDataset generate_tomography_data_exact(const ConditionalChannelPair& pair) {
  TomographyDataset data;
  data.shots_per_config = 1.0;
  data.exact = true;
  data.seed = 0;
  for (ProbeInput input : kInputs) {
    for (PauliBasis basis : kBases) {
      const CellProbs probs = cell_probabilities(pair, input, basis);
      for (int j = 0; j < 2; ++j) {
        data.configs.push_back({input, j, basis, probs.p[j][0], probs.p[j][1]});
      }
    }
  }
  return data;
}

CMatrix cp_project(const CMatrix& choi_like) {
  if (choi_like.hermiticity_defect() > 1e-10) {
    throw NotHermitianError("cp_project expects a Hermitian matrix");
  }
  const double target_trace =
      std::min(2.0, std::max(0.0, choi_like.trace().real()));
  const EigenSystem es = hermitian_eigensolve(choi_like);
  CMatrix out(choi_like.dim());
  double clamped_trace = 0.0;
  for (std::size_t k = 0; k < es.values.size(); ++k) {
    if (es.values[k] <= 0.0) continue;
    clamped_trace += es.values[k];
  }
  if (clamped_trace <= 0.0) return out;  // nothing positive left: the zero map
  const double rescale = target_trace / clamped_trace;
  for (std::size_t k = 0; k < es.values.size(); ++k) {
    if (es.values[k] <= 0.0) continue;
    CVector v(choi_like.dim());
    for (int r = 0; r < choi_like.dim(); ++r) v[r] = es.vectors(r, static_cast<int>(k));
    out += cplx(es.values[k] * rescale) * outer(v, v);
  }
  return out;
}

namespace {

// Unnormalized branch output sigma_j(input) from the dataset frequencies.
CMatrix estimate_branch_output(const TomographyDataset& data, ProbeInput input, int outcome) {
  double bloch[3] = {0.0, 0.0, 0.0};
  double trace_sum = 0.0;
  int found = 0;
  for (const TomoConfigCounts& c : data.configs) {
    if (c.input != input || c.outcome != outcome) continue;
    const double np = c.n_plus / data.shots_per_config;
    const double nm = c.n_minus / data.shots_per_config;
    bloch[static_cast<int>(c.basis)] = np - nm;
    trace_sum += np + nm;
    ++found;
  }
  if (found != 3) throw IncompleteDataError("missing basis configuration in dataset");
  const double trace = trace_sum / 3.0;
  CMatrix sigma(2);
  sigma += cplx(0.5 * trace) * CMatrix::identity(2);
  sigma += cplx(0.5 * bloch[0]) * pauli_x();
  sigma += cplx(0.5 * bloch[1]) * pauli_y();
  sigma += cplx(0.5 * bloch[2]) * pauli_z();
  return sigma;
}

// E on the matrix units from its action on the four probe states:
//   E(|0><1|) = E(rho_+) + i E(rho_{+i}) - (1+i)/2 (E(rho_0) + E(rho_1)).
CMatrix choi_from_probe_actions(const std::array<CMatrix, 4>& sig) {
  const CMatrix sum01 = sig[0] + sig[1];
  const cplx half_1pi(0.5, 0.5);
  const cplx half_1mi(0.5, -0.5);
  CMatrix e01 = sig[2] + cplx(0.0, 1.0) * sig[3] - half_1pi * sum01;
  CMatrix e10 = sig[2] - cplx(0.0, 1.0) * sig[3] - half_1mi * sum01;
  CMatrix choi(4);
  const CMatrix* blocks[2][2] = {{&sig[0], &e01}, {&e10, &sig[1]}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) choi(a * 2 + i, b * 2 + j) = (*blocks[a][b])(i, j);
  return choi;
}

}  // namespace

ReconstructionResult reconstruct_channels(const TomographyDataset& data) {
  if (data.shots_per_config <= 0.0) throw IncompleteDataError("dataset has no shots");
  {
    // Completeness: every (input, outcome, basis) cell exactly once.
    std::map<std::tuple<int, int, int>, int> seen;
    for (const TomoConfigCounts& c : data.configs) {
      seen[{static_cast<int>(c.input), c.outcome, static_cast<int>(c.basis)}] += 1;
    }
    if (seen.size() != 24) throw IncompleteDataError("dataset must cover 4x2x3 configurations");
    for (const auto& [key, n] : seen) {
      if (n != 1) throw IncompleteDataError("duplicate configuration in dataset");
    }
  }

  std::array<QuantumChannel, 2> hats = {QuantumChannel::identity(2),
                                        QuantumChannel::identity(2)};
  std::vector<BranchStateEstimate> states;
  for (int outcome = 0; outcome < 2; ++outcome) {
    std::array<CMatrix, 4> sig;
    for (int i = 0; i < 4; ++i) {
      sig[static_cast<std::size_t>(i)] =
          estimate_branch_output(data, static_cast<ProbeInput>(i), outcome);
    }
    hats[static_cast<std::size_t>(outcome)] =
        QuantumChannel::from_choi(cp_project(choi_from_probe_actions(sig)));
    for (int i = 0; i < 4; ++i) {
      const CMatrix& s = sig[static_cast<std::size_t>(i)];
      const double prob = s.trace().real();
      BranchStateEstimate est{static_cast<ProbeInput>(i), outcome, prob,
                              DensityMatrix::maximally_mixed(2)};
      if (prob > 1e-9) {
        // Normalize, then clip the Bloch vector into the physical ball.
        CMatrix n = cplx(1.0 / prob) * s;
        BlochVector b{2.0 * n(1, 0).real(), 2.0 * n(1, 0).imag(),
                      (n(0, 0) - n(1, 1)).real()};
        const double r = b.norm();
        if (r > 1.0) {
          b.x /= r;
          b.y /= r;
          b.z /= r;
        }
        est.state = bloch_to_density(b);
      }
      states.push_back(std::move(est));
    }
  }

  ReconstructionResult result{hats[0], hats[1], std::move(states), 0.0};

  // rms misfit between the reconstructed channels' predictions and the data.
  double ss = 0.0;
  int cells = 0;
  for (const TomoConfigCounts& c : data.configs) {
    const CVector psi = probe_state(c.input);
    const CMatrix rho = outer(psi, psi);
    const QuantumChannel& ch = c.outcome == 0 ? result.e0_hat : result.e1_hat;
    const CMatrix sigma = ch.apply(rho);
    const double tr = sigma.trace().real();
    const double ev = (pauli(c.basis) * sigma).trace().real();
    const double pred_p = 0.5 * (tr + ev);
    const double pred_m = 0.5 * (tr - ev);
    const double obs_p = c.n_plus / data.shots_per_config;
    const double obs_m = c.n_minus / data.shots_per_config;
    ss += (pred_p - obs_p) * (pred_p - obs_p) + (pred_m - obs_m) * (pred_m - obs_m);
    cells += 2;
  }
  result.fit_residual = std::sqrt(ss / cells);
  return result;
}

DensityMatrix reconstruct_state(const StateTomographyCounts& counts) {
  if (!counts.x || !counts.y || !counts.z) {
    throw IncompleteDataError("state tomography needs all three Pauli bases");
  }
  auto expectation = [](const BasisCounts& c) {
    const double total = c.n_plus + c.n_minus;
    if (total <= 0.0) throw IncompleteDataError("empty basis counts");
    return (c.n_plus - c.n_minus) / total;
  };
  BlochVector b{expectation(*counts.x), expectation(*counts.y), expectation(*counts.z)};
  const double r = b.norm();
  if (r > 1.0) {
    b.x /= r;
    b.y /= r;
    b.z /= r;
  }
  return bloch_to_density(b);
}

}  // namespace qem
