// Command-line front end: build Ising machines, sweep temperatures, run
// tomography and fixed-point extraction, emit CSV/JSON/SVG artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qem/fixedpoint.hpp"
#include "qem/machine.hpp"
#include "qem/pipeline.hpp"
#include "qem/rng.hpp"
#include "qem/tomography.hpp"

namespace {

using namespace qem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<double> parse_t_grid(const std::string& text) {
  if (text == "paper") return RunConfig::paper_t_grid();
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    grid.push_back(std::stod(item));
  }
  if (grid.empty()) throw InvalidParamsError("empty temperature grid: " + text);
  return grid;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags shared by the circuit-facing subcommands.
struct CircuitOpts {
  double j = 1.0;
  double b = 0.3;
  double t = 2.0;
  NoiseModel noise = NoiseModel::defaults();
  std::uint64_t seed = 1;
  bool exact = false;

  void attach(CLI::App* cmd, bool with_t) {
    cmd->add_option("--j", j, "Ising coupling J");
    cmd->add_option("--b", b, "magnetic field B");
    if (with_t) {
      cmd->add_option("--t", t, "temperature T")->required()->check(CLI::PositiveNumber);
    }
    cmd->add_option("--noise-p", noise.depolarizing_p, "two-qubit depolarizing weight");
    cmd->add_option("--noise-eps", noise.overrotation_eps, "per-gate Y over-rotation (rad)");
    cmd->add_option("--noise-q", noise.readout_flip_q, "readout flip probability");
    cmd->add_option("--seed", seed, "master RNG seed");
    cmd->add_flag("--exact", exact, "infinite-shot mode (exact probabilities)");
  }
};

int run_gamma(const CircuitOpts& o) {
  const TransitionMatrix g = transition_probabilities({o.j, o.b, o.t});
  std::cout << fmt(g(0, 0)) << ' ' << fmt(g(0, 1)) << '\n'
            << fmt(g(1, 0)) << ' ' << fmt(g(1, 1)) << '\n';
  return 0;
}

int run_oracle(const CircuitOpts& o, int chain_length) {
  const TransitionMatrix exact = transition_probabilities({o.j, o.b, o.t});
  const TransitionMatrix brute = brute_force_gamma({o.j, o.b, o.t}, chain_length);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(exact(i, k) - brute(i, k)));
  std::cout << "transfer:   " << fmt(exact(0, 0)) << ' ' << fmt(exact(0, 1)) << ' '
            << fmt(exact(1, 0)) << ' ' << fmt(exact(1, 1)) << '\n';
  std::cout << "enumerated: " << fmt(brute(0, 0)) << ' ' << fmt(brute(0, 1)) << ' '
            << fmt(brute(1, 0)) << ' ' << fmt(brute(1, 1)) << " (L=" << chain_length << ")\n";
  std::cout << "max |diff|: " << fmt(worst) << '\n';
  return 0;
}

ConditionalChannelPair build_pair(const CircuitOpts& o, const TransitionMatrix& g) {
  return conditional_pair(g, CircuitRoute::decomposed, o.noise, derive_seed(o.seed, 0xc1));
}

int run_tomography(const CircuitOpts& o, long long tomo_shots, const std::string& out_dir) {
  const TransitionMatrix g = transition_probabilities({o.j, o.b, o.t});
  const ConditionalChannelPair pair = build_pair(o, g);
  const TomographyDataset data = o.exact
                                     ? generate_tomography_data_exact(pair)
                                     : generate_tomography_data(pair, tomo_shots, o.seed);
  const ReconstructionResult rec = reconstruct_channels(data);
  const nlohmann::json report{
      {"choi_distance_e0", trace_distance(rec.e0_hat.choi(), pair.e0.choi())},
      {"choi_distance_e1", trace_distance(rec.e1_hat.choi(), pair.e1.choi())},
      {"fit_residual", rec.fit_residual},
      {"exact", o.exact},
      {"shots", o.exact ? 0 : tomo_shots},
      {"seed", o.seed},
  };
  std::cout << report.dump(2) << '\n';
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir + "/tomography_dataset.json", data.to_json().dump(2) + "\n");
    write_text(out_dir + "/tomography_report.json", report.dump(2) + "\n");
  }
  return 0;
}

int run_fixed_point(const CircuitOpts& o, bool from_tomography, long long tomo_shots,
                    const std::string& out_dir) {
  const TransitionMatrix g = transition_probabilities({o.j, o.b, o.t});
  ConditionalChannelPair pair = build_pair(o, g);
  if (from_tomography) {
    const TomographyDataset data = o.exact
                                       ? generate_tomography_data_exact(pair)
                                       : generate_tomography_data(pair, tomo_shots, o.seed);
    const ReconstructionResult rec = reconstruct_channels(data);
    pair = ConditionalChannelPair{rec.e0_hat, rec.e1_hat};
  }
  OptimizerConfig cfg;
  cfg.seed = derive_seed(o.seed, 0xf1);
  const FixedPointSolution sol = solve_fixed_points(pair, cfg, o.j, g, std::pair{o.t, o.b});
  nlohmann::json out = sol.to_json();
  out["channel_source"] = from_tomography ? "tomography" : "analytic";
  out["c_q_m"] = quantum_complexity(sol.rho_m);
  std::cout << out.dump(2) << '\n';
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir + "/fixed_point.json", out.dump(2) + "\n");
  }
  return 0;
}

int run_sweep(const RunConfig& cfg, const std::string& source) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const std::vector<SweepRecord> records = complexity_sweep(cfg);
  const AmbiguityMap map = ambiguity_map(records, source_from_string(source));

  std::optional<TheoryBand> band;
  int healthy = 0;
  for (const SweepRecord& r : records) healthy += r.ok() ? 1 : 0;
  if (healthy >= 3) band = theory_band(records, cfg.j);

  const OutputPaths paths = default_output_paths(cfg.out_dir, cfg.svg);
  emit_outputs(records, map, band, cfg, paths);
  std::cout << "wrote " << paths.sweep_csv << '\n';
  std::cout << "wrote " << paths.manifest_json << '\n';
  std::cout << "wrote " << paths.ambiguity_csv << '\n';
  if (!paths.svg.empty()) std::cout << "wrote " << paths.svg << '\n';

  int failures = 0;
  for (const SweepRecord& r : records) {
    if (!r.ok()) {
      ++failures;
      std::cerr << "record T=" << fmt(r.t_nominal) << " failed: " << r.status << '\n';
    }
  }
  return failures == 0 ? 0 : 2;
}

int run_ambiguity(const std::string& input, const std::string& source,
                  const std::string& out_dir, bool svg) {
  const std::vector<SweepRecord> records = parse_sweep_csv(read_text(input));
  const AmbiguityMap map = ambiguity_map(records, source_from_string(source));
  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/ambiguity.csv";
  write_text(csv_path, ambiguity_csv_text(map));
  std::cout << "wrote " << csv_path << '\n';
  if (svg) {
    const std::string svg_path = out_dir + "/ambiguity.svg";
    write_text(svg_path, ambiguity_svg_text(map));
    std::cout << "wrote " << svg_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"classical and quantum epsilon-machines for the 1D Ising chain"};
  app.require_subcommand(1);

  CircuitOpts gamma_opts;
  CLI::App* gamma_cmd = app.add_subcommand("gamma", "print the transition matrix for (J, B, T)");
  gamma_opts.attach(gamma_cmd, true);

  CircuitOpts oracle_opts;
  int chain_length = 24;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "cross-check gamma against Boltzmann enumeration");
  oracle_opts.attach(oracle_cmd, true);
  oracle_cmd->add_option("--chain-length", chain_length, "open-chain length (8..28)");

  CircuitOpts tomo_opts;
  long long tomo_shots = 100000;
  std::string tomo_out;
  CLI::App* tomo_cmd =
      app.add_subcommand("tomography", "simulate process tomography and reconstruct the maps");
  tomo_opts.attach(tomo_cmd, true);
  tomo_cmd->add_option("--tomo-shots", tomo_shots, "shots per tomography configuration");
  tomo_cmd->add_option("--out-dir", tomo_out, "directory for dataset/report JSON");

  CircuitOpts fp_opts;
  bool fp_tomo = false;
  long long fp_tomo_shots = 100000;
  std::string fp_out;
  CLI::App* fp_cmd =
      app.add_subcommand("fixed-point", "solve for the fixed-point states of the noisy maps");
  fp_opts.attach(fp_cmd, true);
  fp_cmd->add_flag("--tomo", fp_tomo, "use tomographically reconstructed channels");
  fp_cmd->add_option("--tomo-shots", fp_tomo_shots, "shots per tomography configuration");
  fp_cmd->add_option("--out-dir", fp_out, "directory for the solution JSON");

  std::string config_path;
  std::string t_grid_text;
  std::string sweep_source = "theory";
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "full pipeline over a temperature grid");
  auto* opt_config = sweep_cmd->add_option("--config", config_path, "JSON config file");
  auto* opt_j = sweep_cmd->add_option("--j", "Ising coupling J");
  auto* opt_b = sweep_cmd->add_option("--b", "magnetic field B");
  auto* opt_grid =
      sweep_cmd->add_option("--t-grid", t_grid_text, "comma list of temperatures or 'paper'");
  auto* opt_p = sweep_cmd->add_option("--noise-p", "two-qubit depolarizing weight");
  auto* opt_eps = sweep_cmd->add_option("--noise-eps", "per-gate Y over-rotation (rad)");
  auto* opt_q = sweep_cmd->add_option("--noise-q", "readout flip probability");
  auto* opt_shots = sweep_cmd->add_option("--shots", "shots per statistics run");
  auto* opt_tshots = sweep_cmd->add_option("--tomo-shots", "shots per tomography configuration");
  auto* opt_troute = sweep_cmd->add_flag("--tomo-route",
                                         "solve fixed points from reconstructed channels");
  auto* opt_seed = sweep_cmd->add_option("--seed", "master RNG seed");
  auto* opt_exact = sweep_cmd->add_flag("--exact", "infinite-shot mode");
  auto* opt_out = sweep_cmd->add_option("--out-dir", "output directory");
  auto* opt_svg = sweep_cmd->add_flag("--svg", "also write the SVG heatmap");
  sweep_cmd->add_option("--source", sweep_source, "ambiguity source column: theory|m|s");

  std::string amb_input;
  std::string amb_source = "theory";
  std::string amb_out = ".";
  bool amb_svg = false;
  CLI::App* amb_cmd = app.add_subcommand("ambiguity", "consistency map from a sweep CSV");
  amb_cmd->add_option("--input", amb_input, "sweep CSV path")->required();
  amb_cmd->add_option("--source", amb_source, "source column: theory|m|s");
  amb_cmd->add_option("--out-dir", amb_out, "output directory");
  amb_cmd->add_flag("--svg", amb_svg, "also write the SVG heatmap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gamma_cmd->parsed()) return run_gamma(gamma_opts);
    if (oracle_cmd->parsed()) return run_oracle(oracle_opts, chain_length);
    if (tomo_cmd->parsed()) return run_tomography(tomo_opts, tomo_shots, tomo_out);
    if (fp_cmd->parsed()) return run_fixed_point(fp_opts, fp_tomo, fp_tomo_shots, fp_out);
    if (amb_cmd->parsed()) return run_ambiguity(amb_input, amb_source, amb_out, amb_svg);
    if (sweep_cmd->parsed()) {
      RunConfig cfg;
      if (opt_config->count() > 0) {
        cfg = RunConfig::from_json(nlohmann::json::parse(read_text(config_path)));
      }
      if (opt_j->count() > 0) cfg.j = opt_j->as<double>();
      if (opt_b->count() > 0) cfg.b_nominal = opt_b->as<double>();
      if (opt_grid->count() > 0) cfg.t_grid = parse_t_grid(t_grid_text);
      if (opt_p->count() > 0) cfg.noise.depolarizing_p = opt_p->as<double>();
      if (opt_eps->count() > 0) cfg.noise.overrotation_eps = opt_eps->as<double>();
      if (opt_q->count() > 0) cfg.noise.readout_flip_q = opt_q->as<double>();
      if (opt_shots->count() > 0) cfg.shots = opt_shots->as<long long>();
      if (opt_tshots->count() > 0) cfg.tomography_shots = opt_tshots->as<long long>();
      if (opt_troute->count() > 0) cfg.tomography_route = true;
      if (opt_seed->count() > 0) cfg.seed = opt_seed->as<std::uint64_t>();
      if (opt_exact->count() > 0) cfg.exact = true;
      if (opt_out->count() > 0) cfg.out_dir = opt_out->as<std::string>();
      if (opt_svg->count() > 0) cfg.svg = true;
      return run_sweep(cfg, sweep_source);
    }
  } catch (const qem::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
