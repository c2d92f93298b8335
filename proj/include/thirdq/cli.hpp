// cli.hpp — command-line front end. run() is the whole program, so tests drive it directly.
//
//   thirdq spectrum  --model m.json [--max-order 3]
//   thirdq ness      --model m.json --sector "+1,-1"
//   thirdq evolve    --model m.json [--initial fock:0/x+] [--observable sx] [--method spectral]
//   thirdq dump      --model m.json
//   thirdq reproduce fig1|fig2|fig3
//
// Exit codes: 0 success, 1 model error, 2 numerical failure, 64 usage error.

#pragma once

#include "thirdq/io.hpp"
#include "thirdq/ivp.hpp"
#include "thirdq/oracle.hpp"
#include "thirdq/reproduce.hpp"
#include "thirdq/solver.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace thirdq::cli {

inline constexpr int kExitModel = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string model_path;
  int cutoff = kDefaultCutoff;
  int trunc = kDefaultTrunc;
  double tmax = 10.0;
  int npoints = 200;
  std::string out = "-";
  std::string format;  // empty: from the --out extension, else the command default

  // evolve
  std::string initial = "fock:0/x+";
  std::string observable = "sx";
  std::string method = "spectral";
  std::string integrator = "expm";
  double rtol = 1e-9;
  double atol = 1e-11;

  // ness / spectrum / reproduce
  std::string sector;
  int max_order = 3;
  std::string figure;
  int trunc_max = 24;
};

// ---------------------------------------------------------------- argument grammars

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (...) {
  }
  throw UsageError("cannot read " + what + " from '" + s + "'");
}

inline Sector parse_sector(const ModelSpec& spec, const std::string& text) {
  std::vector<double> labels;
  for (const auto& p : split(text, ',')) labels.push_back(parse_number(p, "sector label"));
  if (labels.size() != static_cast<std::size_t>(2 * spec.n))
    throw UsageError("sector needs " + std::to_string(2 * spec.n) + " comma-separated eigenvalues, left then right");
  return find_sector(spec, labels);
}

inline CMat spin_site_state(const std::vector<double>& spectrum, const std::string& label) {
  const auto d = static_cast<Eigen::Index>(spectrum.size());
  if (label.rfind("s:", 0) == 0) {
    const auto k = static_cast<Eigen::Index>(parse_number(label.substr(2), "spin basis index"));
    if (k < 0 || k >= d) throw UsageError("spin basis index out of range in '" + label + "'");
    CMat p = CMat::Zero(d, d);
    p(k, k) = 1.0;
    return p;
  }
  if (label.size() != 2 || (label[1] != '+' && label[1] != '-'))
    throw UsageError("unknown spin state '" + label + "' (x+, x-, y+, y-, z+, z-, s:K)");
  if (d != 2) throw UsageError("spin state '" + label + "' needs a two-level site; use s:K");
  const double sign = label[1] == '+' ? 1.0 : -1.0;
  CVec v(2);
  switch (label[0]) {
    case 'x': v << 1.0, sign; break;
    case 'y': v << 1.0, sign * kI; break;
    case 'z': {
      const double target = sign;
      Eigen::Index k = -1;
      for (Eigen::Index i = 0; i < 2; ++i)
        if (std::abs(spectrum[static_cast<std::size_t>(i)] - target) < 1e-12) k = i;
      if (k < 0) throw UsageError("spin state '" + label + "' needs the eigenvalue " + format_double(target));
      v = CVec::Zero(2);
      v[k] = 1.0;
      break;
    }
    default: throw UsageError("unknown spin state '" + label + "'");
  }
  return v * v.adjoint() / v.squaredNorm();
}

inline InitialState parse_initial(const ModelSpec& spec, const FockRep& rep, const std::string& text) {
  if (!text.empty() && text[0] == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw ModelError("cannot open initial-state file " + text.substr(1));
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ModelError(std::string("initial-state file: ") + e.what());
    }
    const auto D = static_cast<Eigen::Index>(rep.dim());
    if (j.contains("rho")) return InitialState::explicit_matrix(matrix_from_json(j["rho"], D, D, "rho"));
    if (j.contains("boson") && j.contains("spin")) {
      const auto db = static_cast<Eigen::Index>(rep.dim_b), ds = static_cast<Eigen::Index>(rep.dim_s);
      return InitialState::product(matrix_from_json(j["boson"], db, db, "boson"), matrix_from_json(j["spin"], ds, ds, "spin"));
    }
    throw ModelError("initial-state file needs 'rho' or both 'boson' and 'spin'");
  }
  const auto parts = split(text, '/');
  if (parts.size() != 2) throw UsageError("initial state must read BOSON/SPIN, e.g. fock:0/x+");
  CMat boson;
  const auto b = split(parts[0], ':');
  if (b.size() == 1 && b[0] == "vacuum") {
    boson = InitialState::fock(0, rep.cutoff, spec.n);
  } else if (b.size() == 2 && b[0] == "fock") {
    boson = InitialState::fock(static_cast<int>(parse_number(b[1], "Fock occupation")), rep.cutoff, spec.n);
  } else if ((b.size() == 2 || b.size() == 3) && b[0] == "coherent") {
    const cplx alpha(parse_number(b[1], "coherent amplitude"), b.size() == 3 ? parse_number(b[2], "coherent amplitude") : 0.0);
    boson = InitialState::coherent(alpha, rep.cutoff, spec.n);
  } else {
    throw UsageError("unknown boson state '" + parts[0] + "' (vacuum, fock:K, coherent:RE[:IM])");
  }
  auto labels = split(parts[1], ',');
  if (labels.size() == 1) labels.assign(static_cast<std::size_t>(spec.n), labels[0]);
  if (labels.size() != static_cast<std::size_t>(spec.n)) throw UsageError("give one spin state or one per site");
  CMat spin = CMat::Identity(1, 1);
  for (int j = 0; j < spec.n; ++j)
    spin = Eigen::kroneckerProduct(spin, spin_site_state(spec.spin_spectra[static_cast<std::size_t>(j)], labels[static_cast<std::size_t>(j)])).eval();
  return InitialState::product(boson, spin);
}

struct ObservableChoice {
  std::string name;
  int index = 0;
  CMat matrix;
};

inline ObservableChoice parse_observable(const ModelSpec& spec, const FockRep& rep, const std::string& text) {
  const auto parts = split(text, ':');
  ObservableChoice o;
  o.name = parts[0];
  if (parts.size() > 2) throw UsageError("observable must read NAME[:INDEX]");
  if (parts.size() == 2) o.index = static_cast<int>(parse_number(parts[1], "observable index"));
  if (o.index < 0 || o.index >= spec.n) throw UsageError("observable index out of range");
  if (o.name == "sx") o.matrix = sigma_x(rep, spec, o.index);
  else if (o.name == "sy") o.matrix = sigma_y(rep, spec, o.index);
  else if (o.name == "sz") o.matrix = sigma_z(rep, spec, o.index);
  else if (o.name == "n") o.matrix = number_operator(rep, o.index);
  else if (o.name == "identity") o.matrix = identity_observable(rep);
  else throw UsageError("unknown observable '" + text + "' (sx, sy, sz, n, identity)");
  return o;
}

// n = 1, H = K = Ω = 0, one jump a + z₁σᶻ and any number of pure dephasing jumps.
struct ExampleMatch {
  bool ok = false;
  cplx z1 = 0.0;
  double z2_abs2 = 0.0;
};

inline ExampleMatch match_example(const ModelSpec& spec) {
  ExampleMatch m;
  if (spec.n != 1 || spec.spin_spectra[0] != std::vector<double>{1.0, -1.0}) return m;
  if (max_abs(spec.H) > 0 || max_abs(spec.K) > 0 || max_abs(spec.Omega) > 0) return m;
  int damping = 0;
  for (const auto& j : spec.jumps) {
    if (j.k[0] != cplx(0.0)) return m;
    if (j.l[0] == cplx(0.0)) {
      m.z2_abs2 += std::norm(j.w[0]);
    } else if (j.l[0] == cplx(1.0)) {
      m.z1 = j.w[0];
      ++damping;
    } else {
      return m;
    }
  }
  m.ok = damping == 1;
  return m;
}

// ---------------------------------------------------------------- output

inline void emit(RunConfig& cfg, std::ostream& out, const std::string& default_format, const std::function<void(std::ostream&, const std::string&)>& body) {
  std::string format = cfg.format;
  std::string path = cfg.out;
  if (format.empty()) {
    const auto ext = std::filesystem::path(path).extension().string();
    format = path != "-" && (ext == ".json" || ext == ".csv") ? ext.substr(1) : default_format;
  }
  if (path != "-" && std::filesystem::path(path).extension().empty()) path += "." + format;
  if (path == "-") {
    body(out, format);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ModelError("cannot write " + path);
  body(f, format);
}

inline void emit_table(RunConfig& cfg, std::ostream& out, const Table& t) {
  emit(cfg, out, "csv", [&](std::ostream& os, const std::string& format) {
    if (format == "json") os << table_to_json(t).dump(2) << '\n';
    else write_csv(os, t);
  });
}

inline void emit_json(RunConfig& cfg, std::ostream& out, const json& j, const std::function<Table()>& as_table = {}) {
  emit(cfg, out, "json", [&](std::ostream& os, const std::string& format) {
    if (format == "csv") {
      if (!as_table) throw UsageError(cfg.command + " only writes json");
      write_csv(os, as_table());
    } else {
      os << j.dump(2) << '\n';
    }
  });
}

// ---------------------------------------------------------------- commands

inline std::vector<std::vector<int>> ladder_indices(int length, int max_order) {
  std::vector<std::vector<int>> out;
  for (int total = 0; total <= max_order; ++total)
    for (const auto& m : multi_indices(length, total + 1)) {
      int s = 0;
      for (int x : m) s += x;
      if (s == total) out.push_back(m);
    }
  return out;
}

inline int cmd_spectrum(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto spec = load_model(cfg.model_path);
  const auto sm = build_structure_matrices(spec);
  const auto qf = build_quadratic_form(sm, spec);
  const auto sd = compute_spectral(qf);
  const auto idx = ladder_indices(2 * spec.n, cfg.max_order);

  json j;
  j["n"] = spec.n;
  j["betas"] = to_json(sd.betas);
  j["stable"] = sd.stable;
  j["marginal"] = sd.marginal;
  j["trace_X"] = to_json(qf.X.trace());
  j["ladder"] = json::array();
  for (const auto& m : idx) j["ladder"].push_back({{"m", m}, {"lambda", to_json(mode_eigenvalue(sd.betas, m))}});
  // Per-sector decay rates are λ_m − offset.
  j["sectors"] = json::array();
  try {
    for (const auto& sec : enumerate_sectors(spec)) {
      const auto sh = sector_shift(qf, sec);
      j["sectors"].push_back({{"sector", sec.label()}, {"S0", to_json(sh.S0)}, {"offset", to_json(sh.normal_constant)}});
    }
  } catch (const SingularS& e) {
    j["sectors"] = nullptr;
    err << "warning: " << e.what() << "; sector offsets omitted\n";
  }
  if (!sd.stable) err << "warning: rapidities with negative real part\n";
  emit_json(cfg, out, j, [&] {
    Table t;
    for (int r = 0; r < 2 * spec.n; ++r) t.columns.push_back("m" + std::to_string(r));
    t.columns.insert(t.columns.end(), {"lambda_re", "lambda_im"});
    for (const auto& m : idx) {
      std::vector<Table::Cell> row;
      for (int x : m) row.emplace_back(static_cast<long long>(x));
      const cplx l = mode_eigenvalue(sd.betas, m);
      row.emplace_back(l.real());
      row.emplace_back(l.imag());
      t.add(std::move(row));
    }
    return t;
  });
  return 0;
}

inline int cmd_ness(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto spec = load_model(cfg.model_path);
  if (cfg.sector.empty()) throw UsageError("ness needs --sector");
  const Sector sec = parse_sector(spec, cfg.sector);
  const auto solver = Solver::build(spec, cfg.cutoff);
  const auto basis = solver.basis(solver.sector_position(sec));
  if (ambiguous_kernel(basis))
    err << "warning: kernel of dimension " << basis.kernel_dim << " in sector " << sec.label() << "; first basis vector returned\n";
  const CMat m = sector_vector_to_matrix(solver.rep, basis.ness_vec);

  json j;
  j["sector"] = sec.label();
  j["cutoff"] = cfg.cutoff;
  j["n"] = spec.n;
  j["dim_b"] = solver.rep.dim_b;
  j["normalization"] = "unit Frobenius norm, largest entry real and positive";
  j["kernel_dim"] = basis.kernel_dim;
  j["kernel_singular_value"] = basis.kernel_sv;
  j["gap_singular_value"] = basis.gap_sv;
  j["matrix"] = to_json(m);
  emit_json(cfg, out, j, [&] {
    Table t;
    t.columns = {"i", "j", "re", "im"};
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        t.add({static_cast<long long>(r), static_cast<long long>(c), m(r, c).real(), m(r, c).imag()});
    return t;
  });
  return 0;
}

inline int cmd_dump(RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto spec = load_model(cfg.model_path);
  const auto sm = build_structure_matrices(spec);
  const auto qf = build_quadratic_form(sm, spec);
  const auto sd = compute_spectral(qf);
  std::vector<SectorShift> shifts;
  for (const auto& sec : enumerate_sectors(spec)) shifts.push_back(sector_shift(qf, sec));
  json j = quadratic_form_to_json(qf, sd, shifts);
  j["model"] = model_to_json(spec);
  emit_json(cfg, out, j);
  return 0;
}

inline int cmd_evolve(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto spec = load_model(cfg.model_path);
  const auto rep = build_fock_rep(spec, cfg.cutoff);
  const InitialState rho0 = parse_initial(spec, rep, cfg.initial);
  require_valid(rho0, rep);
  const auto obs = parse_observable(spec, rep, cfg.observable);
  const auto times = default_time_grid(cfg.tmax, cfg.npoints);

  std::vector<std::string> methods;
  if (cfg.method == "all") methods = {"spectral", "oracle", "closed_form", "small_z_approx"};
  else if (cfg.method == "spectral" || cfg.method == "oracle" || cfg.method == "closed_form" || cfg.method == "small_z_approx")
    methods = {cfg.method};
  else throw UsageError("unknown method '" + cfg.method + "'");

  // Closed forms hold for the single-mode example with the boson initially in vacuum.
  const auto match = match_example(spec);
  bool vacuum = true;
  for (Eigen::Index i = 0; i < rho0.rho.rows(); ++i)
    for (Eigen::Index k = 0; k < rho0.rho.cols(); ++k)
      if ((i >= 2 || k >= 2) && std::abs(rho0.rho(i, k)) > kStateTolerance) vacuum = false;
  auto closed_form_reason = [&](bool need_no_dephasing) -> std::string {
    if (!match.ok) return "the model is not a + z1 sz damping plus sz dephasing";
    if (need_no_dephasing && match.z2_abs2 > 0) return "the slowest-mode approximation has no dephasing channel";
    if (!vacuum) return "the boson must start in the vacuum";
    if (obs.name != "sx") return "only sx has a closed form";
    return "";
  };
  const double sx0 = vacuum && match.ok ? (rho0.rho(0, 1) + rho0.rho(1, 0)).real() : 0.0;

  Table t;
  t.columns = {"t", "value", "method"};
  for (const auto& method : methods) {
    if (method == "spectral") {
      const auto solver = Solver::build(spec, cfg.cutoff);
      const auto ex = solve_coefficients(solver, project_initial_state(rho0, spec, solver.rep), cfg.trunc);
      for (const auto& w : ex.warnings) err << "warning: ill-conditioned fit, " << w << '\n';
      const auto r = evolve_observable(ex, obs.matrix, times);
      double im = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        t.add({times[k], r.value[k].real(), method});
        im = std::max(im, std::abs(r.value[k].imag()));
      }
      if (im > 1e-8) err << "warning: spectral expectation has imaginary part up to " << im << '\n';
    } else if (method == "oracle") {
      IntegratorConfig ic;
      ic.cutoff = cfg.cutoff;
      ic.rtol = cfg.rtol;
      ic.atol = cfg.atol;
      if (cfg.integrator == "rk") ic.method = IntegratorMethod::AdaptiveRK;
      else if (cfg.integrator != "expm") throw UsageError("unknown integrator '" + cfg.integrator + "' (expm, rk)");
      const auto states = integrate_master_equation(spec, rho0, times, ic);
      for (std::size_t k = 0; k < times.size(); ++k) t.add({times[k], expectation(states[k], obs.matrix).real(), method});
    } else {
      const bool approx = method == "small_z_approx";
      const auto reason = closed_form_reason(approx);
      if (!reason.empty()) {
        if (cfg.method == "all") {
          err << "note: skipping " << method << ": " << reason << '\n';
          continue;
        }
        throw ModelError(method + " does not apply: " + reason);
      }
      for (double tk : times)
        t.add({tk, approx ? sx0 * small_z_sigma_x(match.z1, tk) : closed_form_sigma_x(match.z1, std::sqrt(match.z2_abs2), tk, sx0), method});
    }
  }
  emit_table(cfg, out, t);
  return 0;
}

inline std::string companion_path(const std::string& out, const std::string& suffix, const std::string& format) {
  std::filesystem::path p(out);
  const std::string ext = p.extension().empty() ? "." + format : p.extension().string();
  return (p.parent_path() / (p.stem().string() + suffix + ext)).string();
}

inline int cmd_reproduce(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.figure == "fig1") {
    emit_table(cfg, out, fig1_dataset({0.2, 1.0}, cfg.cutoff, cfg.trunc_max));
  } else if (cfg.figure == "fig2") {
    auto data = fig2_dataset(0.2, cfg.cutoff, cfg.trunc, default_time_grid(cfg.tmax, cfg.npoints), cfg.trunc_max);
    emit_table(cfg, out, data.curves);
    if (cfg.out == "-") {
      err << "note: discrepancy-vs-trunc table written only with --out\n";
    } else {
      RunConfig side = cfg;
      std::string fmt = cfg.format;
      if (fmt.empty()) fmt = std::filesystem::path(cfg.out).extension() == ".json" ? "json" : "csv";
      side.format = fmt;
      side.out = companion_path(cfg.out, "_discrepancy", fmt);
      emit_table(side, out, data.discrepancy);
    }
  } else if (cfg.figure == "fig3") {
    emit_table(cfg, out, fig3_dataset(0.2, {0.0, 0.1, 0.2, 0.4}, default_time_grid(cfg.tmax, cfg.npoints), cfg.cutoff));
  } else {
    throw UsageError("unknown figure '" + cfg.figure + "' (fig1, fig2, fig3)");
  }
  return 0;
}

// ---------------------------------------------------------------- entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Lindblad boson-spin solver by third quantization", "thirdq"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--model", cfg.model_path, "model JSON file");
  app.add_option("--cutoff", cfg.cutoff, "Fock states per mode")->check(CLI::Range(2, 1000));
  app.add_option("--trunc", cfg.trunc, "per-index cap of the decay-mode fit")->check(CLI::PositiveNumber);
  app.add_option("--tmax", cfg.tmax, "end of the time grid")->check(CLI::PositiveNumber);
  app.add_option("--npoints", cfg.npoints, "log-spaced points after t = 0")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "output path, - for stdout");
  app.add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* spectrum = app.add_subcommand("spectrum", "rapidities and the decay ladder");
  spectrum->add_option("--max-order", cfg.max_order, "largest |m| in the ladder")->check(CLI::NonNegativeNumber);
  auto* ness = app.add_subcommand("ness", "steady state of one sector");
  ness->add_option("--sector", cfg.sector, "left then right eigenvalues, e.g. +1,-1");
  auto* evolve = app.add_subcommand("evolve", "time evolution of an observable");
  evolve->add_option("--initial", cfg.initial, "BOSON/SPIN, e.g. fock:0/x+, coherent:0.3:0/z-, or @file.json");
  evolve->add_option("--observable", cfg.observable, "sx, sy, sz, n, identity, optionally :INDEX");
  evolve->add_option("--method", cfg.method, "spectral, oracle, closed_form, small_z_approx or all");
  evolve->add_option("--integrator", cfg.integrator, "oracle integrator: expm or rk");
  evolve->add_option("--rtol", cfg.rtol, "oracle relative tolerance")->check(CLI::PositiveNumber);
  evolve->add_option("--atol", cfg.atol, "oracle absolute tolerance")->check(CLI::PositiveNumber);
  app.add_subcommand("dump", "quadratic form, shifts and constants per sector");
  auto* reproduce = app.add_subcommand("reproduce", "figure datasets of the worked example");
  reproduce->add_option("figure", cfg.figure, "fig1, fig2 or fig3")->required();
  reproduce->add_option("--trunc-max", cfg.trunc_max, "largest trunc in the convergence sweeps")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  try {
    if (cfg.command != "reproduce" && cfg.model_path.empty()) throw UsageError(cfg.command + " needs --model");
    if (cfg.command == "spectrum") return cmd_spectrum(cfg, out, err);
    if (cfg.command == "ness") return cmd_ness(cfg, out, err);
    if (cfg.command == "evolve") return cmd_evolve(cfg, out, err);
    if (cfg.command == "dump") return cmd_dump(cfg, out, err);
    return cmd_reproduce(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  }
}

}  // namespace thirdq::cli
