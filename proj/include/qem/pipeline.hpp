#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/ising.hpp"

#include "json.hpp"

namespace qem {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  double j = 1.0;
  double b_nominal = 0.3;
  std::vector<double> t_grid = paper_t_grid();
  NoiseModel noise = NoiseModel::defaults();
  long long shots = 100000;
  long long tomography_shots = 100000;
  // Solve fixed points from tomographically reconstructed channels instead
  // of the analytic ones.
  bool tomography_route = false;
  bool exact = false;  // infinite-shot mode: exact probabilities everywhere
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  bool svg = false;

  static std::vector<double> paper_t_grid();
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

// One temperature of the sweep. The s-columns come from finite-shot
// statistics of the fixed-point states run through the noisy circuit; in
// exact mode they are the analytic branch probabilities.
struct SweepRecord {
  double t_nominal = 0.0;
  double b_nominal = 0.0;
  double j = 1.0;
  std::array<double, 4> gamma{};    // row-major nominal gamma
  double c_c = 0.0;
  double c_q = 0.0;
  double t_m = 0.0;
  double b_m = 0.0;
  double c_q_m = 0.0;
  double t_s = 0.0;
  double b_s = 0.0;
  double c_q_s = 0.0;
  std::array<double, 4> gamma_s{};  // empirical transition frequencies
  double p_s0 = 0.0;
  double residual = 0.0;            // fixed-point objective at the solution
  long long shots = 0;
  std::uint64_t seed = 0;           // per-record derived seed
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

// Full sweep over the configured temperature grid. Grid points run as
// independent concurrent tasks with per-index derived seeds; record order
// follows the grid. Failures are recorded in `status`, never dropped.
std::vector<SweepRecord> complexity_sweep(const RunConfig& cfg);

struct ConsistencyCell {
  double t1 = 0.0;
  double t2 = 0.0;
  double r = 0.0;
  double k = 0.0;
  bool defined = false;  // false when the classical difference vanishes
};

// r = dC_q/dC_c between two processes; K = sign(r) min(|r|, 1/|r|).
ConsistencyCell consistency(double c_c1, double c_q1, double c_c2, double c_q2);

enum class ComplexitySource { theory, m, s };
ComplexitySource source_from_string(const std::string& s);

struct AmbiguityMap {
  std::vector<double> temperatures;
  std::vector<ConsistencyCell> cells;  // n x n, row-major; diagonal undefined

  const ConsistencyCell& at(std::size_t i, std::size_t j) const {
    return cells[i * temperatures.size() + j];
  }
};

AmbiguityMap ambiguity_map(const std::vector<SweepRecord>& records, ComplexitySource source);

struct TheoryBandPoint {
  double t = 0.0;
  double c_q_low = 0.0;
  double c_q_mid = 0.0;
  double c_q_high = 0.0;
};

struct TheoryBand {
  double slope = 0.0;
  double intercept = 0.0;
  double width = 0.0;  // residual standard deviation of the B^m(T^m) fit
  std::vector<TheoryBandPoint> points;

  bool covers(double t, double c_q) const;
};

// Linear fit of b_m against t_m over the healthy records, then the predicted
// C_q band at each record's t_m. Throws InsufficientData below 3 points.
TheoryBand theory_band(const std::vector<SweepRecord>& records, double j);

struct OutputPaths {
  std::string sweep_csv;
  std::string manifest_json;
  std::string ambiguity_csv;
  std::string svg;  // empty: skip the heatmap
};

OutputPaths default_output_paths(const std::string& out_dir, bool svg);

// Writes sweep CSV, run manifest JSON, ambiguity CSV and the optional SVG
// heatmap. Identical inputs produce byte-identical files.
void emit_outputs(const std::vector<SweepRecord>& records, const AmbiguityMap& map,
                  const std::optional<TheoryBand>& band, const RunConfig& cfg,
                  const OutputPaths& paths);

// Round-trip helpers for the sweep CSV (used by the `ambiguity` subcommand).
std::string sweep_csv_text(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_sweep_csv(const std::string& text);
std::string ambiguity_csv_text(const AmbiguityMap& map);
std::string ambiguity_svg_text(const AmbiguityMap& map);

}  // namespace qem
