#include "qem/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <utility>

#include "qem/fixedpoint.hpp"
#include "qem/machine.hpp"
#include "qem/rng.hpp"
#include "qem/tomography.hpp"

namespace qem {

namespace {

// Shortest round-trip decimal text; NaN renders as an empty CSV field.
std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw IoError("bad numeric field: " + s);
  return v;
}

std::string sanitize_status(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

double theory_c_q(double j, double b, double t) {
  return machine_complexities(transition_probabilities({j, b, t})).c_q;
}

constexpr const char* kSweepHeader =
    "t_nominal,b_nominal,j,gamma00,gamma01,gamma10,gamma11,c_c,c_q,t_m,b_m,c_q_m,"
    "t_s,b_s,c_q_s,residual,shots,seed,status";

SweepRecord run_grid_point(const RunConfig& cfg, std::size_t idx) {
  const double t = cfg.t_grid[idx];
  const std::uint64_t point_seed = derive_seed(cfg.seed, idx);

  SweepRecord rec;
  rec.t_nominal = t;
  rec.b_nominal = cfg.b_nominal;
  rec.j = cfg.j;
  rec.shots = cfg.exact ? 0 : cfg.shots;
  rec.seed = point_seed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.t_m = rec.b_m = rec.c_q_m = rec.t_s = rec.b_s = rec.c_q_s = rec.residual = nan;

  try {
    const TransitionMatrix gamma = transition_probabilities({cfg.j, cfg.b_nominal, t});
    rec.gamma = {gamma(0, 0), gamma(0, 1), gamma(1, 0), gamma(1, 1)};
    const MachineComplexities theory = machine_complexities(gamma);
    rec.c_c = theory.c_c;
    rec.c_q = theory.c_q;

    ConditionalChannelPair pair = conditional_pair(
        gamma, CircuitRoute::decomposed, cfg.noise, derive_seed(point_seed, 0));
    if (cfg.tomography_route) {
      const TomographyDataset data =
          cfg.exact ? generate_tomography_data_exact(pair)
                    : generate_tomography_data(pair, cfg.tomography_shots,
                                               derive_seed(point_seed, 4));
      const ReconstructionResult rec = reconstruct_channels(data);
      pair = ConditionalChannelPair{rec.e0_hat, rec.e1_hat};
    }

    OptimizerConfig opt;
    opt.seed = derive_seed(point_seed, 1);
    const FixedPointSolution fp =
        solve_fixed_points(pair, opt, cfg.j, gamma, std::pair{t, cfg.b_nominal});
    rec.t_m = fp.t_m;
    rec.b_m = fp.b_m;
    rec.c_q_m = quantum_complexity(fp.rho_m);
    rec.residual = fp.residual;

    // Statistics route: outcome frequencies of the fixed-point states fed
    // back through the noisy circuit.
    double g_row0;
    double g_row1;
    if (cfg.exact) {
      auto branch_row = [&](const DensityMatrix& rho) {
        const double p0 = pair.e0.apply(rho).trace().real();
        const double p1 = pair.e1.apply(rho).trace().real();
        return p0 / (p0 + p1);
      };
      g_row0 = branch_row(fp.rho0);
      g_row1 = branch_row(fp.rho1);
    } else {
      const ShotCounts c0 = run_shots(spectral_ensemble(fp.rho0), pair, cfg.shots,
                                      derive_seed(point_seed, 2));
      const ShotCounts c1 = run_shots(spectral_ensemble(fp.rho1), pair, cfg.shots,
                                      derive_seed(point_seed, 3));
      g_row0 = static_cast<double>(c0.n0) / static_cast<double>(cfg.shots);
      g_row1 = static_cast<double>(c1.n0) / static_cast<double>(cfg.shots);
    }
    const TransitionMatrix gamma_s = TransitionMatrix::from_rows(g_row0, g_row1);
    rec.gamma_s = {gamma_s(0, 0), gamma_s(0, 1), gamma_s(1, 0), gamma_s(1, 1)};
    const StationaryDistribution p_s = stationary_distribution(gamma_s);
    rec.p_s0 = p_s.p0;
    const DensityMatrix rho_s(cplx(p_s.p0) * fp.rho0.matrix() +
                              cplx(p_s.p1) * fp.rho1.matrix());
    rec.c_q_s = quantum_complexity(rho_s);
    const InversionResult inv =
        invert_parameters(gamma_s, cfg.j, std::pair{fp.t_m, fp.b_m}, point_seed);
    rec.t_s = inv.t;
    rec.b_s = inv.b;
  } catch (const std::exception& e) {
    rec.status = sanitize_status(std::string("error: ") + e.what());
  }
  return rec;
}

}  // namespace

std::vector<double> RunConfig::paper_t_grid() {
  return {0.75, 1.0, 1.25, 1.5, 1.75, 2.25, 2.75, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0};
}

void RunConfig::validate() const {
  if (t_grid.empty()) throw InvalidParamsError("temperature grid is empty");
  double prev = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw InvalidParamsError("temperatures must be positive");
    if (t <= prev) throw InvalidParamsError("temperature grid must be strictly increasing");
    prev = t;
  }
  noise.validate();
  if (!exact && shots < 1) throw InvalidParamsError("shot count must be at least 1");
  if (j == 0.0) throw InvalidParamsError("coupling must be nonzero");
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  if (j.contains("j")) cfg.j = j.at("j").get<double>();
  if (j.contains("b")) cfg.b_nominal = j.at("b").get<double>();
  if (j.contains("t_grid")) {
    if (j.at("t_grid").is_string() && j.at("t_grid").get<std::string>() == "paper") {
      cfg.t_grid = paper_t_grid();
    } else {
      cfg.t_grid = j.at("t_grid").get<std::vector<double>>();
    }
  }
  if (j.contains("noise")) {
    const nlohmann::json& n = j.at("noise");
    if (n.contains("p")) cfg.noise.depolarizing_p = n.at("p").get<double>();
    if (n.contains("eps")) cfg.noise.overrotation_eps = n.at("eps").get<double>();
    if (n.contains("q")) cfg.noise.readout_flip_q = n.at("q").get<double>();
  }
  if (j.contains("shots")) cfg.shots = j.at("shots").get<long long>();
  if (j.contains("tomo_shots")) cfg.tomography_shots = j.at("tomo_shots").get<long long>();
  if (j.contains("tomo_route")) cfg.tomography_route = j.at("tomo_route").get<bool>();
  if (j.contains("exact")) cfg.exact = j.at("exact").get<bool>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("svg")) cfg.svg = j.at("svg").get<bool>();
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{
      {"j", j},
      {"b", b_nominal},
      {"t_grid", t_grid},
      {"noise",
       {{"p", noise.depolarizing_p}, {"eps", noise.overrotation_eps},
        {"q", noise.readout_flip_q}}},
      {"shots", shots},
      {"tomo_shots", tomography_shots},
      {"tomo_route", tomography_route},
      {"exact", exact},
      {"seed", seed},
      {"out_dir", out_dir},
      {"svg", svg},
  };
}

std::vector<SweepRecord> complexity_sweep(const RunConfig& cfg) {
  cfg.validate();
  std::vector<std::future<SweepRecord>> futures;
  futures.reserve(cfg.t_grid.size());
  for (std::size_t idx = 0; idx < cfg.t_grid.size(); ++idx) {
    futures.push_back(
        std::async(std::launch::async, [&cfg, idx] { return run_grid_point(cfg, idx); }));
  }
  std::vector<SweepRecord> records;
  records.reserve(futures.size());
  for (std::future<SweepRecord>& f : futures) records.push_back(f.get());
  return records;
}

ConsistencyCell consistency(double c_c1, double c_q1, double c_c2, double c_q2) {
  ConsistencyCell cell;
  const double dc = c_c1 - c_c2;
  const double dq = c_q1 - c_q2;
  if (!std::isfinite(dc) || !std::isfinite(dq) || std::abs(dc) < 1e-12) {
    cell.r = std::numeric_limits<double>::quiet_NaN();
    cell.k = std::numeric_limits<double>::quiet_NaN();
    cell.defined = false;
    return cell;
  }
  cell.r = dq / dc;
  if (cell.r == 0.0) {
    cell.k = 0.0;
  } else {
    const double mag = std::min(std::abs(cell.r), 1.0 / std::abs(cell.r));
    cell.k = cell.r > 0.0 ? mag : -mag;
  }
  cell.defined = true;
  return cell;
}

ComplexitySource source_from_string(const std::string& s) {
  if (s == "theory") return ComplexitySource::theory;
  if (s == "m") return ComplexitySource::m;
  if (s == "s") return ComplexitySource::s;
  throw InvalidParamsError("unknown complexity source: " + s);
}

AmbiguityMap ambiguity_map(const std::vector<SweepRecord>& records, ComplexitySource source) {
  if (records.size() < 2) throw InsufficientDataError("ambiguity map needs at least 2 records");
  auto c_q_of = [&](const SweepRecord& r) {
    switch (source) {
      case ComplexitySource::theory: return r.c_q;
      case ComplexitySource::m: return r.c_q_m;
      default: return r.c_q_s;
    }
  };
  AmbiguityMap map;
  map.temperatures.reserve(records.size());
  for (const SweepRecord& r : records) map.temperatures.push_back(r.t_nominal);
  const std::size_t n = records.size();
  map.cells.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      ConsistencyCell cell =
          consistency(records[i].c_c, c_q_of(records[i]), records[j].c_c, c_q_of(records[j]));
      cell.t1 = records[i].t_nominal;
      cell.t2 = records[j].t_nominal;
      map.cells[i * n + j] = cell;
    }
  }
  return map;
}

bool TheoryBand::covers(double t, double c_q) const {
  const TheoryBandPoint* nearest = nullptr;
  double best = 1e300;
  for (const TheoryBandPoint& p : points) {
    const double d = std::abs(p.t - t);
    if (d < best) {
      best = d;
      nearest = &p;
    }
  }
  if (nearest == nullptr || best > 1e-9) return false;
  const double lo = std::min(nearest->c_q_low, nearest->c_q_high) - 1e-12;
  const double hi = std::max(nearest->c_q_low, nearest->c_q_high) + 1e-12;
  return c_q >= lo && c_q <= hi;
}

TheoryBand theory_band(const std::vector<SweepRecord>& records, double j) {
  std::vector<std::pair<double, double>> pts;  // (t_m, b_m)
  for (const SweepRecord& r : records) {
    if (r.ok() && std::isfinite(r.t_m) && std::isfinite(r.b_m)) pts.push_back({r.t_m, r.b_m});
  }
  if (pts.size() < 3) throw InsufficientDataError("theory band needs at least 3 records");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double denom = n * sxx - sx * sx;
  TheoryBand band;
  if (std::abs(denom) < 1e-14) {
    band.slope = 0.0;
    band.intercept = sy / n;
  } else {
    band.slope = (n * sxy - sx * sy) / denom;
    band.intercept = (sy - band.slope * sx) / n;
  }
  double ss = 0.0;
  for (const auto& [x, y] : pts) {
    const double r = y - (band.intercept + band.slope * x);
    ss += r * r;
  }
  band.width = std::sqrt(ss / n);

  std::sort(pts.begin(), pts.end());
  for (const auto& [t, b_unused] : pts) {
    const double b_fit = band.intercept + band.slope * t;
    TheoryBandPoint p;
    p.t = t;
    p.c_q_mid = theory_c_q(j, b_fit, t);
    p.c_q_low = theory_c_q(j, b_fit - band.width, t);
    p.c_q_high = theory_c_q(j, b_fit + band.width, t);
    band.points.push_back(p);
  }
  return band;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

std::string sweep_csv_text(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << kSweepHeader << '\n';
  for (const SweepRecord& r : records) {
    out << format_double(r.t_nominal) << ',' << format_double(r.b_nominal) << ','
        << format_double(r.j) << ',' << format_double(r.gamma[0]) << ','
        << format_double(r.gamma[1]) << ',' << format_double(r.gamma[2]) << ','
        << format_double(r.gamma[3]) << ',' << format_double(r.c_c) << ','
        << format_double(r.c_q) << ',' << format_double(r.t_m) << ','
        << format_double(r.b_m) << ',' << format_double(r.c_q_m) << ','
        << format_double(r.t_s) << ',' << format_double(r.b_s) << ','
        << format_double(r.c_q_s) << ',' << format_double(r.residual) << ','
        << r.shots << ',' << r.seed << ',' << r.status << '\n';
  }
  return out.str();
}

std::vector<SweepRecord> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty sweep CSV");
  if (line != kSweepHeader) throw IoError("unexpected sweep CSV header");
  std::vector<SweepRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 19) throw IoError("sweep CSV row has wrong arity");
    SweepRecord r;
    r.t_nominal = parse_double_field(fields[0]);
    r.b_nominal = parse_double_field(fields[1]);
    r.j = parse_double_field(fields[2]);
    for (int g = 0; g < 4; ++g)
      r.gamma[static_cast<std::size_t>(g)] = parse_double_field(fields[3 + static_cast<std::size_t>(g)]);
    r.c_c = parse_double_field(fields[7]);
    r.c_q = parse_double_field(fields[8]);
    r.t_m = parse_double_field(fields[9]);
    r.b_m = parse_double_field(fields[10]);
    r.c_q_m = parse_double_field(fields[11]);
    r.t_s = parse_double_field(fields[12]);
    r.b_s = parse_double_field(fields[13]);
    r.c_q_s = parse_double_field(fields[14]);
    r.residual = parse_double_field(fields[15]);
    r.shots = fields[16].empty() ? 0 : std::stoll(fields[16]);
    r.seed = fields[17].empty() ? 0 : std::stoull(fields[17]);
    r.status = fields[18];
    records.push_back(std::move(r));
  }
  return records;
}

std::string ambiguity_csv_text(const AmbiguityMap& map) {
  std::ostringstream out;
  out << "t1,t2,r,k\n";
  for (const ConsistencyCell& c : map.cells) {
    out << format_double(c.t1) << ',' << format_double(c.t2) << ',';
    if (c.defined) {
      out << format_double(c.r) << ',' << format_double(c.k);
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::string heat_color(const ConsistencyCell& cell) {
  if (!cell.defined) return "#bbbbbb";
  // Diverging palette: K=-1 red, 0 white, +1 blue, linear in K.
  const double k = std::min(1.0, std::max(-1.0, cell.k));
  int r, g, b;
  if (k < 0.0) {
    const double w = -k;
    r = static_cast<int>(std::lround(255 + (178 - 255) * w));
    g = static_cast<int>(std::lround(255 + (24 - 255) * w));
    b = static_cast<int>(std::lround(255 + (43 - 255) * w));
  } else {
    const double w = k;
    r = static_cast<int>(std::lround(255 + (33 - 255) * w));
    g = static_cast<int>(std::lround(255 + (102 - 255) * w));
    b = static_cast<int>(std::lround(255 + (172 - 255) * w));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string ambiguity_svg_text(const AmbiguityMap& map) {
  const std::size_t n = map.temperatures.size();
  const int cell = 24;
  const int margin = 48;
  const int size = margin + static_cast<int>(n) * cell + 8;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" style=\"background:#ffffff\">\n";
  out << "  <title>consistency map K(T1, T2)</title>\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const ConsistencyCell& c = map.at(i, j);
      const int x = margin + static_cast<int>(j) * cell;
      const int y = margin + static_cast<int>(i) * cell;
      out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"" << heat_color(c) << "\" stroke=\"#888888\" stroke-width=\"0.5\""
          << "><desc>t1=" << format_double(c.t1) << " t2=" << format_double(c.t2);
      if (c.defined) out << " k=" << format_double(c.k);
      out << "</desc></rect>\n";
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int x = margin + static_cast<int>(i) * cell + cell / 2;
    const int y = margin + static_cast<int>(i) * cell + cell / 2;
    out << "  <text x=\"" << x << "\" y=\"" << margin - 6
        << "\" font-size=\"7\" text-anchor=\"middle\">" << format_double(map.temperatures[i])
        << "</text>\n";
    out << "  <text x=\"" << margin - 6 << "\" y=\"" << y + 3
        << "\" font-size=\"7\" text-anchor=\"end\">" << format_double(map.temperatures[i])
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

OutputPaths default_output_paths(const std::string& out_dir, bool svg) {
  OutputPaths p;
  p.sweep_csv = out_dir + "/sweep.csv";
  p.manifest_json = out_dir + "/manifest.json";
  p.ambiguity_csv = out_dir + "/ambiguity.csv";
  p.svg = svg ? out_dir + "/ambiguity.svg" : "";
  return p;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void emit_outputs(const std::vector<SweepRecord>& records, const AmbiguityMap& map,
                  const std::optional<TheoryBand>& band, const RunConfig& cfg,
                  const OutputPaths& paths) {
  write_file(paths.sweep_csv, sweep_csv_text(records));

  nlohmann::json manifest{
      {"version", kVersion},
      {"config", cfg.to_json()},
      {"records", records.size()},
  };
  if (band) {
    nlohmann::json pts = nlohmann::json::array();
    for (const TheoryBandPoint& p : band->points) {
      pts.push_back({{"t", p.t}, {"c_q_low", p.c_q_low}, {"c_q_mid", p.c_q_mid},
                     {"c_q_high", p.c_q_high}});
    }
    manifest["band"] = {{"slope", band->slope},
                        {"intercept", band->intercept},
                        {"width", band->width},
                        {"points", pts}};
  } else {
    manifest["band"] = nullptr;
  }
  write_file(paths.manifest_json, manifest.dump(2) + "\n");

  write_file(paths.ambiguity_csv, ambiguity_csv_text(map));
  if (!paths.svg.empty()) write_file(paths.svg, ambiguity_svg_text(map));
}

}  // namespace qem
