// Copyright 2026 The qgl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qgl: holonomy, Stokes verification, brachistochrone shooting and the
// geometric-limit sweep from one binary. Exit codes: 0 success, 2 input
// error, 3 convergence failure.

#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qgl/fixtures.hpp"
#include "qgl/io.hpp"

namespace {

using namespace qgl;
namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_convergence = 3;
constexpr const char* qgl_version = "0.1.0";

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LineIntegrator parse_integrator(const std::string& s) {
  if (s == "midpoint") return LineIntegrator::midpoint;
  if (s == "magnus4") return LineIntegrator::magnus4;
  throw InputError("unknown integrator '" + s + "' (midpoint, magnus4)");
}

fs::path prepare_out(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

std::string toml_value(const json& v) {
  if (v.is_string()) return json(v.get<std::string>()).dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string s = "[";
    for (size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + toml_value(v[k]);
    return s + "]";
  }
  return v.dump();
}

/// `config` keys are the flag names, so the file feeds straight back into
/// --config.
void write_run_files(const fs::path& out, const std::string& command, const json& config) {
  json run = {{"command", command},
              {"config", config},
              {"versions",
               {{"qgl", qgl_version},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"compiler", __VERSION__}}}};
  write_text_file((out / "run.json").string(), run.dump(2) + "\n");
  std::string toml = "[" + command + "]\n";
  for (const auto& [key, value] : config.items()) toml += key + "=" + toml_value(value) + "\n";
  write_text_file((out / "run.toml").string(), toml);
}

// ---- holonomy ------------------------------------------------------------------

struct HolonomyArgs {
  std::string model = "spin_half";
  std::string loop = "equator";
  std::string contour;
  bool closed = false;
  int segments = 512;
  int substeps = 1;
  std::string integrator = "magnus4";
  std::string target;
  double phi = 0.0;
  double refine_tol = 0.0;
  std::string out = "qgl_holonomy";
};

int cmd_holonomy(const HolonomyArgs& a) {
  const GaugeModel model = model_by_name(a.model);
  WilsonLineOptions wopt{parse_integrator(a.integrator), true, a.substeps};
  if (a.segments < 1 || a.substeps < 1) throw InputError("segments and substeps must be positive");

  Contour contour;
  std::optional<ParametricPath> path;
  if (!a.contour.empty()) {
    contour = contour_from_csv(read_text_file(a.contour), a.closed);
  } else {
    path = builtin_loop(a.loop, model.d);
    contour = path->sample(static_cast<size_t>(a.segments));
  }
  if (contour.dim() != model.d)
    throw InputError("contour has " + std::to_string(contour.dim()) + " coordinates, model " + model.name + " has " +
                     std::to_string(model.d));
  contour.validate(model.periods);

  const fs::path out = prepare_out(a.out);
  const UnitaryGate u = wilson_line(model, contour, wopt);
  json report = {{"model", model.name},
                 {"source", a.contour.empty() ? "loop:" + a.loop : a.contour},
                 {"closed", contour.closed},
                 {"samples", contour.size()},
                 {"gate", to_json(u.matrix())},
                 {"theta", gate_magnitude(u)},
                 {"mt_angle", mt_angle(u)},
                 {"det_phase", std::arg(u.matrix().determinant())}};
  // phase in (-pi, pi]; -pi from rounding is reported as +pi
  double phase = std::arg(u.matrix()(0, 0));
  if (phase <= -pi + 1e-12) phase += 2 * pi;
  if (model.n == 1) report["phase"] = phase;
  if (!a.target.empty()) {
    const UnitaryGate target = parse_target_gate(a.target, a.phi, model.n);
    report["fidelity"] = fidelity(target, u);
    report["infidelity"] = 1.0 - fidelity(target, u);
  }

  int code = exit_ok;
  if (a.refine_tol > 0.0) {
    std::string table = "segments,difference\n";
    json refinement;
    if (path) {
      RefinementOptions ro;
      ro.wilson = wopt;
      try {
        const RefinementResult r = refine_until_converged(model, *path, a.refine_tol, ro);
        for (const auto& [n, diff] : r.history) table += std::to_string(n) + "," + format_double(diff) + "\n";
        refinement = {{"converged", true}, {"segments", r.segments}, {"order", r.achieved_order},
                      {"gate", to_json(r.gate.matrix())}, {"theta", gate_magnitude(r.gate)}};
      } catch (const ConvergenceError& e) {
        refinement = {{"converged", false}, {"message", e.what()}};
        code = exit_convergence;
      }
    } else {
      // a sampled contour is refined by splitting every segment
      WilsonLineOptions w = wopt;
      CMatrix prev = u.matrix();
      bool done = false;
      for (int k = 0; k < 14 && !done; ++k) {
        w.substeps *= 2;
        const CMatrix next = wilson_line(model, contour, w).matrix();
        const double diff = hs_norm(CMatrix(next - prev));
        table += std::to_string(static_cast<long long>(contour.size() - 1) * w.substeps) + "," + format_double(diff) +
                 "\n";
        prev = next;
        done = diff < a.refine_tol;
      }
      refinement = {{"converged", done}, {"substeps", w.substeps}};
      if (!done) code = exit_convergence;
    }
    write_text_file((out / "refinement.csv").string(), table);
    report["refinement"] = refinement;
    std::cout << table;
  }
  write_text_file((out / "holonomy.json").string(), report.dump(2) + "\n");
  write_run_files(out, "holonomy", {{"model", a.model}, {"loop", a.loop}, {"contour", a.contour}, {"closed", a.closed},
                                   {"segments", a.segments}, {"substeps", a.substeps}, {"integrator", a.integrator},
                                   {"target", a.target}, {"phi", a.phi}, {"refine-tol", a.refine_tol}, {"out", a.out}});
  std::printf("theta %.17g\n", gate_magnitude(u));
  if (model.n == 1) std::printf("phase %.17g\n", phase);
  if (report.contains("fidelity")) std::printf("fidelity %.17g\n", report["fidelity"].get<double>());
  return code;
}

// ---- stokes-verify -------------------------------------------------------------

struct StokesArgs {
  std::string model = "tripod";
  std::string loop = "tripod_fixture";
  std::string contour;
  std::string surface;
  std::vector<int> grids{32, 64, 128, 256};
  std::vector<double> apex;
  int reference_segments = 20000;
  std::string out = "qgl_stokes";
};

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (size_t k = 0; k < h.size(); ++k) {
    if (!(err[k] > 0.0)) continue;
    const double x = std::log(h[k]), y = std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

int cmd_stokes(const StokesArgs& a) {
  const GaugeModel model = model_by_name(a.model);
  StokesOptions sopt;
  sopt.integrator = LineIntegrator::magnus4;
  const fs::path out = prepare_out(a.out);
  json report = {{"model", model.name}};

  if (!a.surface.empty()) {
    Surface surf;
    try {
      surf = surface_from_json(json::parse(read_text_file(a.surface)));
    } catch (const json::exception& e) {
      throw InputError("surface file: " + std::string(e.what()));
    }
    surf.validate();
    Contour contour = surf.boundary();
    if (!a.contour.empty()) {
      contour = contour_from_csv(read_text_file(a.contour), true);
      contour.validate(model.periods);
      const Contour b = surf.boundary();
      if (b.size() != contour.size() || b.dim() != contour.dim())
        throw InputError("surface boundary has " + std::to_string(b.size()) + " nodes, contour has " +
                         std::to_string(contour.size()));
      for (size_t k = 0; k < b.size(); ++k)
        if ((b.points[k] - contour.points[k]).cwiseAbs().maxCoeff() > 1e-9)
          throw InputError("surface boundary does not match the contour at node " + std::to_string(k));
    }
    const UnitaryGate u = wilson_line(model, contour, {LineIntegrator::magnus4, true, 16});
    const StripGenerator gen = strip_generator(model, surf, sopt);
    const UnitaryGate v = stokes_evolve(gen);
    const AbelianReduction red = abelian_reduction_check(gen);
    report["deviation"] = hs_norm(CMatrix(v.matrix() - u.matrix()));
    report["theta"] = gate_magnitude(u);
    report["commuting"] = red.commuting;
    report["abelian_deviation"] = red.deviation;
    report["max_commutator"] = red.max_commutator;
    std::printf("deviation %.6e\n", report["deviation"].get<double>());
  } else {
    const ParametricPath path = builtin_loop(a.loop, model.d);
    std::optional<ControlPoint> apex;
    if (!a.apex.empty()) apex = Eigen::Map<const RVector>(a.apex.data(), static_cast<Eigen::Index>(a.apex.size()));
    Contour ref = path.sample(static_cast<size_t>(a.reference_segments));
    const UnitaryGate u = wilson_line(model, ref, {LineIntegrator::magnus4, true, 1});
    std::string table = "n,h,deviation,abelian_deviation,max_commutator\n";
    std::vector<double> hs, errs;
    for (int n : a.grids) {
      if (n < 4) throw InputError("grid sizes must be at least 4");
      const Surface surf = builtin_surface(a.loop, model.d, n, n, apex);
      surf.validate();
      const StripGenerator gen = strip_generator(model, surf, sopt);
      const UnitaryGate v = stokes_evolve(gen);
      const AbelianReduction red = abelian_reduction_check(gen);
      const double dev = hs_norm(CMatrix(v.matrix() - u.matrix()));
      hs.push_back(1.0 / n);
      errs.push_back(dev);
      table += std::to_string(n) + "," + format_double(1.0 / n) + "," + format_double(dev) + "," +
               format_double(red.commuting ? red.deviation : std::numeric_limits<double>::quiet_NaN()) + "," +
               format_double(red.max_commutator) + "\n";
      std::printf("n %4d  deviation %.6e%s\n", n, dev,
                  red.commuting ? ("  abelian " + format_double(red.deviation)).c_str() : "");
    }
    report["theta"] = gate_magnitude(u);
    report["fitted_order"] = fitted_order(hs, errs);
    report["finest_deviation"] = errs.empty() ? 0.0 : errs.back();
    write_text_file((out / "stokes.csv").string(), table);
    std::printf("fitted order %.4f\n", report["fitted_order"].get<double>());
  }
  write_text_file((out / "stokes.json").string(), report.dump(2) + "\n");
  write_run_files(out, "stokes-verify",
                 {{"model", a.model}, {"loop", a.loop}, {"contour", a.contour}, {"surface", a.surface},
                  {"grids", a.grids}, {"apex", a.apex}, {"reference-segments", a.reference_segments}, {"out", a.out}});
  return exit_ok;
}

// ---- brachistochrone ------------------------------------------------------------

struct BrachArgs {
  std::string model = "tripod";
  std::string target = "sy";
  double phi = pi / 3;
  std::string mode = "closed";
  int seeds = 32;
  std::uint64_t seed = 1;
  int jobs = 1;
  int steps = 2000;
  std::string out = "qgl_brachistochrone";
};

int cmd_brachistochrone(const BrachArgs& a) {
  const GaugeModel model = model_by_name(a.model);
  if (a.mode != "open" && a.mode != "closed") throw InputError("mode must be open or closed");
  const ShootingMode mode = a.mode == "open" ? ShootingMode::open : ShootingMode::closed;
  const UnitaryGate target = parse_target_gate(a.target, a.phi, model.n);
  ShootingConfig cfg = model.name == "tripod" ? tripod_shooting_config(mode) : ShootingConfig{};
  cfg.mode = mode;
  cfg.seeds = a.seeds;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  cfg.n_steps = a.steps;
  if (a.seeds < 1 || a.steps < 10) throw InputError("need at least one seed and ten steps");

  const ShootingReport rep = shoot(model, target, cfg);
  const fs::path out = prepare_out(a.out);
  const ShootingSolution& best = rep.best;
  write_text_file((out / "trajectory.csv").string(), contour_to_csv(best.contour, coordinate_names(model)));
  json sol = to_json(best, "trajectory.csv");
  sol["target"] = to_json(target.matrix());
  sol["converged_seeds"] = rep.converged_count;
  write_text_file((out / "solution.json").string(), sol.dump(2) + "\n");
  std::string runs = "seed,converged,fs_length,duration,fidelity_error,closure_error,residual_norm\n";
  for (const auto& r : rep.runs)
    runs += std::to_string(r.seed) + "," + (r.converged ? "1" : "0") + "," + format_double(r.fs_length) + "," +
            format_double(r.duration) + "," + format_double(r.fidelity_error) + "," + format_double(r.closure_error) +
            "," + format_double(r.residual_norm) + "\n";
  write_text_file((out / "runs.csv").string(), runs);
  write_run_files(out, "brachistochrone",
                 {{"model", a.model}, {"target", a.target}, {"phi", a.phi}, {"mode", a.mode}, {"seeds", a.seeds},
                  {"seed", a.seed}, {"jobs", a.jobs}, {"steps", a.steps}, {"out", a.out}});
  std::printf("converged %d/%d  length %.6f  T %.6f  infidelity %.3e\n", rep.converged_count, a.seeds,
              best.fs_length, best.duration, best.fidelity_error);
  return rep.converged_count > 0 ? exit_ok : exit_convergence;
}

// ---- qgl-sweep --------------------------------------------------------------------

struct SweepArgs {
  std::string model = "tripod";
  double flux = pi / 4;
  std::vector<double> alphas;
  int seeds = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  int n1 = 64, n2 = 64;
  int max_iterations = SweepConfig{}.relax.max_iterations;
  std::string out = "qgl_sweep";
};

int cmd_sweep(const SweepArgs& a) {
  const GaugeModel model = model_by_name(a.model);
  if (model.n != 2) throw InputError("the sweep uses SU(2) targets; model " + model.name + " is not two-fold degenerate");
  SweepConfig cfg;
  cfg.flux = a.flux;
  cfg.alphas = a.alphas;
  cfg.seeds = a.seeds;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  cfg.n1 = a.n1;
  cfg.n2 = a.n2;
  cfg.relax.max_iterations = a.max_iterations;
  if (a.seeds < 1 || a.n1 < 8 || a.n2 < 4 || !(a.flux > 0.0)) throw InputError("bad sweep dimensions or flux");
  if (model.name != "tripod") cfg.shooting = ShootingConfig{};

  const SweepResult res = alpha_sweep(model, cfg, true);

  // single collector: every file is written here, after the workers joined
  const fs::path out = prepare_out(a.out);
  const fs::path cells = out / "cells";
  fs::create_directories(cells);
  const std::vector<double> alphas = cfg.alphas.empty() ? default_alphas() : cfg.alphas;
  int converged = 0;
  for (size_t k = 0; k < res.cells.size(); ++k) {
    const SweepCell& c = res.cells[k];
    if (!c.converged) continue;
    ++converged;
    char stem[64];
    std::snprintf(stem, sizeof stem, "a%02zu_s%02d", k / static_cast<size_t>(cfg.seeds), c.seed);
    json b = to_json(c.bounds);
    b["alpha"] = c.alpha;
    b["seed"] = c.seed;
    b["contour_length"] = c.contour_length;
    b["alignment_mean"] = c.alignment_mean;
    b["relax_iterations"] = c.relax_iterations;
    write_text_file((cells / (std::string(stem) + "_bounds.json")).string(), b.dump(2) + "\n");
    if (c.surface) {
      write_text_file((cells / (std::string(stem) + "_surface.json")).string(), to_json(*c.surface).dump() + "\n");
      write_text_file((cells / (std::string(stem) + "_alignment.csv")).string(),
                      alignment_to_csv(*c.surface, abelianity_field(model, *c.surface)));
    }
    if (c.contour)
      write_text_file((cells / (std::string(stem) + "_contour.csv")).string(),
                      contour_to_csv(*c.contour, coordinate_names(model)));
  }
  write_text_file((out / "sweep.csv").string(), sweep_to_csv(res));
  write_text_file((out / "sweep_summary.csv").string(), sweep_summary_to_csv(res));
  write_text_file((out / "failures.csv").string(), sweep_failures_to_csv(res));
  write_run_files(out, "qgl-sweep",
                 {{"model", a.model}, {"flux", a.flux}, {"alphas", alphas}, {"seeds", a.seeds}, {"seed", a.seed},
                  {"n1", a.n1}, {"n2", a.n2}, {"max-iterations", a.max_iterations}, {"jobs", a.jobs}, {"out", a.out}});
  for (const auto& s : res.summary)
    std::printf("alpha %.4f  converged %2d  eta_min %.5f  eta_median %.5f  eta_std %.5f  alignment %.4f\n", s.alpha,
                s.converged, s.eta_min, s.eta_median, s.eta_dispersion, s.alignment_mean);
  const double frac = static_cast<double>(converged) / static_cast<double>(res.cells.size());
  std::printf("converged cells %d/%zu\n", converged, res.cells.size());
  return frac >= 0.8 ? exit_ok : exit_convergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum geometric limit toolkit"};
  app.set_config("--config", "", "TOML/INI file with option values (flags override it)");
  app.require_subcommand(1);

  HolonomyArgs ha;
  auto* hol = app.add_subcommand("holonomy", "Wilson loop of a contour");
  hol->add_option("--model", ha.model, "tripod, spin_half, flat, zero or custom:<file>")->capture_default_str();
  hol->add_option("--loop", ha.loop, "built-in loop: equator, latitude:<theta>, circle:<r>, tripod_fixture")
      ->capture_default_str();
  hol->add_option("--contour", ha.contour, "contour CSV (t, coordinates...)");
  hol->add_flag("--closed", ha.closed, "treat the contour file as a closed loop");
  hol->add_option("--segments", ha.segments, "samples of a built-in loop")->capture_default_str();
  hol->add_option("--substeps", ha.substeps, "sub-segments per contour segment")->capture_default_str();
  hol->add_option("--integrator", ha.integrator, "midpoint or magnus4")->capture_default_str();
  hol->add_option("--target", ha.target, "gate to compare against: identity, sx, sy, sz, axis:a,b,c, matrix:<file>");
  hol->add_option("--phi", ha.phi, "rotation angle of the target")->capture_default_str();
  hol->add_option("--refine-tol", ha.refine_tol, "refine until successive holonomies agree to this");
  hol->add_option("--out", ha.out, "output directory")->capture_default_str();

  StokesArgs sa;
  auto* sto = app.add_subcommand("stokes-verify", "surface-ordered evolution against the Wilson loop");
  sto->add_option("--model", sa.model)->capture_default_str();
  sto->add_option("--loop", sa.loop, "built-in loop (cone or polar cap surface)")->capture_default_str();
  sto->add_option("--contour", sa.contour, "closed contour CSV to check against --surface");
  sto->add_option("--surface", sa.surface, "surface JSON");
  sto->add_option("--grids", sa.grids, "grid sizes n (n x n) for the convergence study")->capture_default_str();
  sto->add_option("--apex", sa.apex, "cone apex")->expected(-1);
  sto->add_option("--reference-segments", sa.reference_segments)->capture_default_str();
  sto->add_option("--out", sa.out, "output directory")->capture_default_str();

  BrachArgs ba;
  auto* bra = app.add_subcommand("brachistochrone", "driven-geodesic shooting for a target gate");
  bra->add_option("--model", ba.model)->capture_default_str();
  bra->add_option("--target", ba.target, "identity, sx, sy, sz, axis:a,b,c or matrix:<file>")->capture_default_str();
  bra->add_option("--phi", ba.phi, "rotation angle, U = exp(i phi n.sigma)")->capture_default_str();
  bra->add_option("--mode", ba.mode, "open or closed")->capture_default_str();
  bra->add_option("--seeds", ba.seeds)->capture_default_str();
  bra->add_option("--seed", ba.seed, "base random seed")->capture_default_str();
  bra->add_option("--jobs", ba.jobs, "worker threads")->capture_default_str();
  bra->add_option("--steps", ba.steps, "time steps of the reported trajectory")->capture_default_str();
  bra->add_option("--out", ba.out, "output directory")->capture_default_str();

  SweepArgs wa;
  auto* swp = app.add_subcommand("qgl-sweep", "efficiency over the axis family of gates");
  swp->add_option("--model", wa.model)->capture_default_str();
  swp->add_option("--flux", wa.flux, "gate angle Phi")->capture_default_str();
  swp->add_option("--alphas", wa.alphas, "axis angles (default 0, pi/16, ..., pi/2)");
  swp->add_option("--seeds", wa.seeds)->capture_default_str();
  swp->add_option("--seed", wa.seed, "base random seed")->capture_default_str();
  swp->add_option("--jobs", wa.jobs, "worker threads")->capture_default_str();
  swp->add_option("--n1", wa.n1, "surface nodes along the loop")->capture_default_str();
  swp->add_option("--n2", wa.n2, "surface nodes from apex to loop")->capture_default_str();
  swp->add_option("--max-iterations", wa.max_iterations, "relaxation iteration cap")->capture_default_str();
  swp->add_option("--out", wa.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (hol->parsed()) return cmd_holonomy(ha);
    if (sto->parsed()) return cmd_stokes(sa);
    if (bra->parsed()) return cmd_brachistochrone(ba);
    if (swp->parsed()) return cmd_sweep(wa);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_convergence;
  } catch (const std::invalid_argument& e) {  // contour, surface, model, format and dimension errors
    std::cerr << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const SingularMetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_input;
}
