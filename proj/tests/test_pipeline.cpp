#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qem/fixedpoint.hpp"
#include "qem/machine.hpp"
#include "qem/pipeline.hpp"
#include "test_util.hpp"

using namespace qem;
using namespace qem::test;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig golden_config() {
  RunConfig cfg;
  cfg.t_grid = {1.0, 2.0, 3.0};
  cfg.noise = NoiseModel{};
  cfg.exact = true;
  cfg.seed = 42;
  cfg.svg = true;
  return cfg;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("consistency: anchors and degenerate denominator") {
  // Equal quantum and classical differences.
  const ConsistencyCell one = consistency(0.8, 0.5, 0.6, 0.3);
  CHECK(one.defined);
  CHECK(one.k == doctest::Approx(1.0).epsilon(1e-12));

  // Opposite signs: ambiguity.
  const ConsistencyCell neg = consistency(0.8, 0.3, 0.6, 0.5);
  CHECK(neg.defined);
  CHECK(neg.k < 0.0);
  CHECK(neg.k >= -1.0);

  // Degenerate classical difference.
  const ConsistencyCell undef = consistency(0.7, 0.2, 0.7, 0.4);
  CHECK_FALSE(undef.defined);

  // Zero quantum difference.
  const ConsistencyCell zero = consistency(0.8, 0.4, 0.6, 0.4);
  CHECK(zero.defined);
  CHECK(zero.k == 0.0);
}

TEST_CASE("consistency: |K| <= 1, sign matches r, swap invariance") {
  Rng rng(3);
  for (int n = 0; n < 300; ++n) {
    const double c1 = rng.uniform(0, 1), q1 = rng.uniform(0, 1);
    const double c2 = rng.uniform(0, 1), q2 = rng.uniform(0, 1);
    const ConsistencyCell a = consistency(c1, q1, c2, q2);
    if (!a.defined) continue;
    CHECK(std::abs(a.k) <= 1.0 + 1e-12);
    if (a.r != 0.0) CHECK(a.k * a.r > 0.0);
    const ConsistencyCell b = consistency(c2, q2, c1, q1);
    CHECK(a.k == doctest::Approx(b.k).epsilon(1e-12));
  }
}

TEST_CASE("ambiguity map on the paper grid has both signs") {
  RunConfig cfg;  // defaults: paper grid, default noise
  std::vector<SweepRecord> records;
  for (double t : cfg.t_grid) {
    SweepRecord r;
    r.t_nominal = t;
    const MachineComplexities mc =
        machine_complexities(transition_probabilities({cfg.j, cfg.b_nominal, t}));
    r.c_c = mc.c_c;
    r.c_q = mc.c_q;
    records.push_back(r);
  }
  const AmbiguityMap map = ambiguity_map(records, ComplexitySource::theory);
  REQUIRE(map.cells.size() == records.size() * records.size());
  int pos = 0, neg = 0;
  for (const ConsistencyCell& c : map.cells) {
    if (!c.defined) continue;
    CHECK(std::abs(c.k) <= 1.0);
    if (c.k > 0) ++pos;
    if (c.k < 0) ++neg;
  }
  CHECK(pos > 0);
  CHECK(neg > 0);
  // Diagonal undefined; K symmetric across the diagonal.
  const std::size_t n = records.size();
  for (std::size_t i = 0; i < n; ++i) {
    CHECK_FALSE(map.at(i, i).defined);
    for (std::size_t j = 0; j < n; ++j) {
      if (map.at(i, j).defined) {
        CHECK(map.at(i, j).k == doctest::Approx(map.at(j, i).k).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("zero-noise infinite-shot sweep collapses all complexity columns") {
  RunConfig cfg;
  cfg.t_grid = {1.0, 2.0, 5.0, 14.0};
  cfg.noise = NoiseModel{};
  cfg.exact = true;
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  for (const SweepRecord& r : records) {
    REQUIRE(r.ok());
    CHECK(std::abs(r.c_q_m - r.c_q) < 1e-6);
    CHECK(std::abs(r.c_q_s - r.c_q) < 1e-6);
    CHECK(std::abs(r.t_m - r.t_nominal) < 1e-4);
    CHECK(std::abs(r.b_m - r.b_nominal) < 1e-4);
    CHECK(std::abs(r.t_s - r.t_nominal) < 1e-4);
    CHECK(std::abs(r.b_s - r.b_nominal) < 1e-4);
    CHECK(r.c_q <= r.c_c + 1e-8);
  }
}

TEST_CASE("sweep records keep complexities in range") {
  RunConfig cfg;
  cfg.t_grid = {0.75, 2.0, 8.0};
  cfg.shots = 20000;
  for (const SweepRecord& r : complexity_sweep(cfg)) {
    REQUIRE(r.ok());
    for (double v : {r.c_c, r.c_q, r.c_q_m, r.c_q_s}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    CHECK(std::abs(r.gamma_s[0] + r.gamma_s[1] - 1.0) < 1e-15);
    CHECK(std::abs(r.gamma_s[2] + r.gamma_s[3] - 1.0) < 1e-15);
    CHECK(r.c_q <= r.c_c + 1e-8);
  }
}

TEST_CASE("tomography route: exact reconstruction collapses onto the analytic route") {
  RunConfig analytic;
  analytic.t_grid = {1.0, 3.0};
  analytic.exact = true;
  RunConfig tomo = analytic;
  tomo.tomography_route = true;
  const std::vector<SweepRecord> a = complexity_sweep(analytic);
  const std::vector<SweepRecord> b = complexity_sweep(tomo);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    REQUIRE(a[k].ok());
    REQUIRE(b[k].ok());
    CHECK(std::abs(a[k].c_q_m - b[k].c_q_m) < 1e-6);
    CHECK(std::abs(a[k].t_m - b[k].t_m) < 1e-3);
    CHECK(std::abs(a[k].b_m - b[k].b_m) < 1e-3);
    CHECK(std::abs(a[k].residual - b[k].residual) < 1e-6);
  }
}

TEST_CASE("statistics route: shot noise within bootstrap bars, bias bounded") {
  // Direct decomposition of the spec's |c_q_s - c_q_m| check: the sampled
  // value scatters around its infinite-shot mean within bootstrap error bars,
  // while the deterministic mean itself sits within a recorded bias of
  // c_q_m (the optimizer trades probability fit against state fit).
  const long long shots = 100000;
  for (double t : {0.75, 2.25, 14.0}) {
    const TransitionMatrix g = transition_probabilities({1.0, 0.3, t});
    const ConditionalChannelPair pair =
        conditional_pair(g, CircuitRoute::decomposed, NoiseModel::defaults());
    OptimizerConfig ocfg;
    const FixedPointSolution fp = solve_fixed_points(pair, ocfg, 1.0, g, std::pair{t, 0.3});

    auto c_q_from_rows = [&](double g00, double g10) {
      const TransitionMatrix gs = TransitionMatrix::from_rows(g00, g10);
      const StationaryDistribution p = stationary_distribution(gs);
      const DensityMatrix rho(cplx(p.p0) * fp.rho0.matrix() + cplx(p.p1) * fp.rho1.matrix());
      return quantum_complexity(rho);
    };

    const double p00 = pair.e0.apply(fp.rho0).trace().real();
    const double p10 = pair.e0.apply(fp.rho1).trace().real();
    const double c_q_s_inf = c_q_from_rows(p00, p10);
    const double c_q_m = quantum_complexity(fp.rho_m);
    CHECK(std::abs(c_q_s_inf - c_q_m) < 0.03);  // deterministic bias anchor

    const ShotCounts c0 = run_shots(spectral_ensemble(fp.rho0), pair, shots, 11);
    const ShotCounts c1 = run_shots(spectral_ensemble(fp.rho1), pair, shots, 12);
    const double f00 = static_cast<double>(c0.n0) / shots;
    const double f10 = static_cast<double>(c1.n0) / shots;
    const double c_q_s = c_q_from_rows(f00, f10);

    // Bootstrap the two binomials, 200 resamples.
    Rng rng(99);
    std::vector<double> resampled;
    for (int b = 0; b < 200; ++b) {
      long long n0 = 0, n1 = 0;
      for (long long s = 0; s < shots; ++s) {
        if (rng.uniform() < f00) ++n0;
        if (rng.uniform() < f10) ++n1;
      }
      resampled.push_back(
          c_q_from_rows(static_cast<double>(n0) / shots, static_cast<double>(n1) / shots));
    }
    double mean = 0.0;
    for (double v : resampled) mean += v / resampled.size();
    double var = 0.0;
    for (double v : resampled) var += (v - mean) * (v - mean) / resampled.size();
    const double sigma = std::sqrt(var);
    CHECK(std::abs(c_q_s - c_q_s_inf) < 5.0 * sigma + 1e-9);
  }
}

TEST_CASE("theory band: zero noise collapses onto the nominal curve") {
  RunConfig cfg;
  cfg.t_grid = {1.0, 2.0, 3.0, 5.0};
  cfg.noise = NoiseModel{};
  cfg.exact = true;
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  const TheoryBand band = theory_band(records, 1.0);
  CHECK(band.width < 1e-6);
  for (const TheoryBandPoint& p : band.points) {
    CHECK(std::abs(p.c_q_high - p.c_q_low) < 1e-5);
  }
  for (const SweepRecord& r : records) {
    CHECK(std::abs(band.intercept + band.slope * r.t_m - 0.3) < 1e-4);
  }
}

TEST_CASE("theory band: constant offset reproduces the offset curve exactly") {
  std::vector<SweepRecord> records;
  for (double t : {1.0, 2.0, 4.0, 8.0}) {
    SweepRecord r;
    r.t_nominal = t;
    r.t_m = t;
    r.b_m = 0.29;
    records.push_back(r);
  }
  const TheoryBand band = theory_band(records, 1.0);
  CHECK(band.width < 1e-12);
  for (const TheoryBandPoint& p : band.points) {
    const double expected =
        machine_complexities(transition_probabilities({1.0, 0.29, p.t})).c_q;
    CHECK(p.c_q_mid == doctest::Approx(expected).epsilon(1e-12));
  }
  std::vector<SweepRecord> two(records.begin(), records.begin() + 2);
  CHECK_THROWS_AS(theory_band(two, 1.0), InsufficientDataError);
}

TEST_CASE("theory band: covers c_q_m under coherent-only noise") {
  // The band predicts the entropy of *pure* causal states at the drifted
  // (T^m, B^m); it can describe the data only when the noise keeps the
  // fixed-point states near pure, i.e. coherent over-rotations. Incoherent
  // noise (depolarizing/readout) adds mixedness the pure-state curve cannot
  // track, and coverage collapses (measured 1/15 at the default mix).
  RunConfig cfg;
  cfg.noise = NoiseModel{0.0, 0.02, 0.0};
  cfg.exact = true;
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  const TheoryBand band = theory_band(records, 1.0);
  int covered = 0, total = 0;
  for (const SweepRecord& r : records) {
    if (!r.ok()) continue;
    ++total;
    if (band.covers(r.t_m, r.c_q_m)) ++covered;
  }
  REQUIRE(total >= 10);
  CHECK(static_cast<double>(covered) >= 0.8 * static_cast<double>(total));
}

TEST_CASE("emit_outputs: empty record list yields a header-only CSV") {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "qem_empty_out";
  std::filesystem::create_directories(dir);
  const std::string csv = sweep_csv_text({});
  CHECK(count_occurrences(csv, "\n") == 1);
  CHECK(csv.rfind("t_nominal,b_nominal,j,", 0) == 0);
}

TEST_CASE("emit_outputs: deterministic bytes and golden files") {
  const RunConfig cfg = golden_config();
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  const AmbiguityMap map = ambiguity_map(records, ComplexitySource::theory);
  const TheoryBand band = theory_band(records, cfg.j);

  const std::filesystem::path dir1 = std::filesystem::temp_directory_path() / "qem_gold_1";
  const std::filesystem::path dir2 = std::filesystem::temp_directory_path() / "qem_gold_2";
  std::filesystem::create_directories(dir1);
  std::filesystem::create_directories(dir2);
  emit_outputs(records, map, band, cfg, default_output_paths(dir1.string(), true));
  emit_outputs(records, map, band, cfg, default_output_paths(dir2.string(), true));

  for (const char* name : {"sweep.csv", "manifest.json", "ambiguity.csv", "ambiguity.svg"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    const std::filesystem::path golden = std::filesystem::path(QEM_GOLDEN_DIR) / name;
    CHECK(slurp(dir1 / name) == slurp(golden));
  }
}

TEST_CASE("sweep CSV round trip") {
  const RunConfig cfg = golden_config();
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  const std::vector<SweepRecord> back = parse_sweep_csv(sweep_csv_text(records));
  REQUIRE(back.size() == records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    CHECK(back[k].t_nominal == records[k].t_nominal);
    CHECK(back[k].c_c == records[k].c_c);
    CHECK(back[k].c_q == records[k].c_q);
    CHECK(back[k].c_q_m == records[k].c_q_m);
    CHECK(back[k].c_q_s == records[k].c_q_s);
    CHECK(back[k].seed == records[k].seed);
    CHECK(back[k].status == records[k].status);
  }
}

TEST_CASE("ambiguity CSV: undefined cells stay empty") {
  std::vector<SweepRecord> records(2);
  records[0].t_nominal = 1.0;
  records[0].c_c = 0.5;
  records[0].c_q = 0.2;
  records[1].t_nominal = 2.0;
  records[1].c_c = 0.5;  // equal c_c: the off-diagonal cells are undefined too
  records[1].c_q = 0.4;
  const AmbiguityMap map = ambiguity_map(records, ComplexitySource::theory);
  for (const ConsistencyCell& c : map.cells) CHECK_FALSE(c.defined);
  const std::string csv = ambiguity_csv_text(map);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t1,t2,r,k");
  while (std::getline(in, line)) {
    CHECK(line.substr(line.size() - 1) == ",");
  }
}

TEST_CASE("SVG heatmap: well-formed, one rect per cell, palette anchored") {
  const RunConfig cfg = golden_config();
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  const AmbiguityMap map = ambiguity_map(records, ComplexitySource::theory);
  const std::string svg = ambiguity_svg_text(map);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(count_occurrences(svg, "<svg") == 1);
  CHECK(count_occurrences(svg, "</svg>") == 1);
  CHECK(count_occurrences(svg, "<rect") ==
        static_cast<int>(map.temperatures.size() * map.temperatures.size()));
  CHECK(count_occurrences(svg, "#bbbbbb") >= static_cast<int>(map.temperatures.size()));
}

TEST_CASE("run config: JSON round trip, paper keyword, validation") {
  RunConfig cfg;
  cfg.j = 1.5;
  cfg.b_nominal = -0.2;
  cfg.t_grid = {0.5, 1.5};
  cfg.noise = NoiseModel{0.01, 0.002, 0.003};
  cfg.shots = 777;
  cfg.seed = 99;
  const RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back.j == cfg.j);
  CHECK(back.b_nominal == cfg.b_nominal);
  CHECK(back.t_grid == cfg.t_grid);
  CHECK(back.noise.depolarizing_p == cfg.noise.depolarizing_p);
  CHECK(back.shots == cfg.shots);
  CHECK(back.seed == cfg.seed);

  const RunConfig paper = RunConfig::from_json(nlohmann::json{{"t_grid", "paper"}});
  CHECK(paper.t_grid == RunConfig::paper_t_grid());
  CHECK(paper.t_grid.size() == 15);
  CHECK(paper.t_grid.front() == 0.75);
  CHECK(paper.t_grid.back() == 14.0);

  RunConfig bad;
  bad.t_grid = {2.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidParamsError);
  bad.t_grid = {1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidParamsError);
  bad.t_grid = {-1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidParamsError);
}

}  // TEST_SUITE
