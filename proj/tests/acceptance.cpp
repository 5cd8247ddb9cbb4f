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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// fails. `acceptance 3 8` runs a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "qgl/fixtures.hpp"
#include "qgl/surface.hpp"

using namespace qgl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// 1. Berry phase of the equator and the hemisphere flux
Outcome abelian_saturation() {
  const auto t0 = Clock::now();
  const GaugeModel m = spin_half_model();
  const UnitaryGate u = wilson_line(m, builtin_loop("equator", 2).sample(512), {LineIntegrator::magnus4});
  const double phase_err = std::abs(std::abs(std::arg(u.matrix()(0, 0))) - pi);
  const Surface cap = polar_cap(2, pi / 2, 64, 64);
  const BoundReport b = evaluate_bounds(m, cap);
  // flux of F over the hemisphere: ||F||_HS = 2 times the FS area, i.e. half
  // the solid angle 2 pi
  const double flux = 2.0 * b.area_fs;
  const double flux_err = std::abs(flux - 0.5 * unit_sphere_area(b.area_fs)) + std::abs(flux - pi);
  const AbelianReduction red = abelian_reduction_check(strip_generator(m, cap));
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = phase_err < 1e-6 && flux_err < 1e-6 && b.theta_target - flux < 1e-6 && red.commuting && t < 1.0;
  o.detail = fmt("phase error %.2e, hemisphere flux %.12f (error %.2e), Theta %.12f, abelian reduction %.1e, %.2f s",
                 phase_err, flux, flux_err, b.theta_target, red.deviation, t);
  return o;
}

// 2. ||F||_HS = sqrt 3 across the tripod parameter box
Outcome tripod_norm() {
  const auto t0 = Clock::now();
  const GaugeModel m = tripod_model();
  double worst = 0.0;
  const int n = 20;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const ControlPoint x =
            (ControlPoint(3) << pi * (i + 0.5) / n, 0.5 * pi * (j + 0.5) / n, 4 * pi * (k + 0.5) / n).finished();
        worst = std::max(worst, std::abs(hs_curvature_norm_evaluated(m, x) - std::sqrt(3.0)));
      }
  const double t = seconds_since(t0);
  return {worst < 1e-8 && t < 10.0, fmt("max |‖F‖ - sqrt 3| = %.2e on 20^3 points, %.2f s", worst, t)};
}

// 3. surface-ordered evolution against the Wilson loop
Outcome stokes_equivalence() {
  const auto t0 = Clock::now();
  const GaugeModel m = tripod_model();
  const CMatrix ref =
      wilson_line(m, builtin_loop("tripod_fixture", 3).sample(20000), {LineIntegrator::magnus4}).matrix();
  std::vector<double> lh, le;
  std::string errs;
  for (int n : {32, 64, 128, 256}) {
    const double e =
        hs_norm(CMatrix(stokes_evolve(strip_generator(m, builtin_surface("tripod_fixture", 3, n, n))).matrix() - ref));
    lh.push_back(std::log(1.0 / n));
    le.push_back(std::log(e));
    errs += fmt("%d:%.2e ", n, e);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < lh.size(); ++k) {
    sx += lh[k];
    sy += le[k];
    sxx += lh[k] * lh[k];
    sxy += lh[k] * le[k];
  }
  const double nn = static_cast<double>(lh.size());
  const double order = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  const double finest = std::exp(le.back());
  const double t = seconds_since(t0);
  return {finest < 1e-5 && order >= 1.8 && t < 120.0, fmt("%sorder %.3f, %.1f s", errs.c_str(), order, t)};
}

// 4. bound hierarchy on the regression set
Outcome bound_hierarchy() {
  const auto t0 = Clock::now();
  const GaugeModel tripod = tripod_model(), spin = spin_half_model();
  std::vector<std::pair<const GaugeModel*, Surface>> set;
  std::mt19937_64 rng(2024);
  set.emplace_back(&tripod, builtin_surface("tripod_fixture", 3, 32, 16));
  for (int k = 0; k < 8; ++k) {
    Surface s = builtin_surface("tripod_fixture", 3, 32, 16);
    perturb_surface(s, 3, 0.15, rng);
    set.emplace_back(&tripod, s);
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    const double a = u(rng), b = u(rng), c = u(rng), r = 0.3 + 0.3 * (u(rng) + 1);
    auto loop = [=](double s) {
      const double t = 2 * pi * s;
      return (ControlPoint(3) << 1.5 + r * std::cos(t) + 0.1 * a * std::sin(2 * t),
              0.8 + 0.4 * std::sin(t) + 0.1 * b * std::cos(3 * t), 1.0 + 1.5 * c * std::sin(t) + 0.8 * std::cos(t))
          .finished();
    };
    set.emplace_back(&tripod, parametric_cone(loop, (ControlPoint(3) << 1.5, 0.8, 1.0).finished(), 32, 16));
  }
  for (double th : {0.2, 0.8, 1.3, pi / 2, 2.0, 2.6}) set.emplace_back(&spin, polar_cap(2, th, 32, 16));
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [model, s] : set) {
    const BoundReport r = evaluate_bounds(*model, s);
    worst = std::min({worst, r.op_bound - r.theta_target, r.hs_bound - r.op_bound, r.hs_bound - r.mt_lhs});
  }
  const double t = seconds_since(t0);
  return {worst >= -1e-9 && t < 60.0, fmt("%zu pairs, smallest slack %.3e, %.1f s", set.size(), worst, t)};
}

struct TargetRuns {
  std::string label;
  ShootingReport closed, open;
  double closed_seconds = 0.0, open_seconds = 0.0;
};

std::vector<TargetRuns>& shooting_runs() {
  static std::vector<TargetRuns> runs;
  if (!runs.empty()) return runs;
  const GaugeModel m = tripod_model();
  for (const auto& [label, axis] : {std::pair{"U1* = exp(i pi/3 sy)", Eigen::Vector3d::UnitY().eval()},
                                    std::pair{"U2* = exp(i pi/3 sz)", Eigen::Vector3d::UnitZ().eval()}}) {
    TargetRuns tr;
    tr.label = label;
    const UnitaryGate target = su2_rotation(pi / 3, axis);
    for (ShootingMode mode : {ShootingMode::closed, ShootingMode::open}) {
      ShootingConfig cfg = tripod_shooting_config(mode);
      cfg.seeds = 32;
      cfg.jobs = jobs();
      const auto t0 = Clock::now();
      (mode == ShootingMode::closed ? tr.closed : tr.open) = shoot(m, target, cfg);
      (mode == ShootingMode::closed ? tr.closed_seconds : tr.open_seconds) = seconds_since(t0);
    }
    runs.push_back(std::move(tr));
  }
  return runs;
}

// 5. brachistochrone lengths
Outcome brachistochrone() {
  const auto& runs = shooting_runs();
  const double closed_ref[2] = {2.5, 2.7};
  bool pass = true;
  std::string detail;
  for (size_t k = 0; k < runs.size(); ++k) {
    const auto& c = runs[k].closed.best;
    const auto& o = runs[k].open.best;
    const bool closed_ok = runs[k].closed.converged_count > 0 && c.fidelity_error < 1e-5 &&
                           std::abs(c.fs_length - closed_ref[k]) <= 0.10 * closed_ref[k];
    const bool open_ok = runs[k].open.converged_count > 0 && o.fidelity_error < 1e-5 &&
                         std::abs(o.fs_length - 0.4) <= 0.25 * 0.4;
    const bool time_ok = runs[k].closed_seconds + runs[k].open_seconds < 600.0;
    pass = pass && closed_ok && open_ok && time_ok;
    detail += fmt("%s closed L=%.4f (ref %.1f, eps %.1e, %d/32) %s; open L=%.4f (ref 0.4, eps %.1e, %d/32) %s; %.0f s. ",
                  runs[k].label.c_str(), c.fs_length, closed_ref[k], c.fidelity_error, runs[k].closed.converged_count,
                  closed_ok ? "ok" : "off", o.fs_length, o.fidelity_error, runs[k].open.converged_count,
                  open_ok ? "ok" : "off", runs[k].closed_seconds + runs[k].open_seconds);
  }
  return {pass, detail};
}

// 6. conservation along every converged trajectory of 5 plus random ones
Outcome conservation() {
  const GaugeModel m = tripod_model();
  double speed = 0.0, knorm = 0.0;
  int count = 0;
  auto check = [&](const ControlPoint& x0, const RVector& v0, const AlgebraElement& k0, double duration, int steps) {
    const Trajectory tr = integrate_trajectory(m, x0, v0, k0, duration, steps);
    speed = std::max(speed, tr.weighted_speed_drift);
    const double n0 = hs_norm(k0);
    for (const auto& u : tr.wilson)
      knorm = std::max(knorm, std::abs(hs_norm(CMatrix(u.adjoint() * k0.matrix() * u)) - n0));
    ++count;
  };
  for (const auto& t : shooting_runs())
    for (const ShootingReport* rep : {&t.closed, &t.open})
      for (const auto& r : rep->runs)
        if (r.converged) check(r.lambda0, r.velocity0, r.k0, r.duration, 2000);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const ControlPoint x = (ControlPoint(3) << 1.3 + 0.15 * g(rng), 0.6 + 0.1 * g(rng), g(rng)).finished();
    RVector v = (RVector(3) << g(rng), g(rng), g(rng)).finished();
    v /= std::sqrt(weighted_speed_squared(m, x, v));
    const AlgebraElement k0(CMatrix(g(rng) * pauli::x() + g(rng) * pauli::y() + g(rng) * pauli::z()));
    try {
      check(x, v, k0, 1.0, 2000);
    } catch (const SingularMetricError&) {
    }
  }
  return {count > 0 && speed < 1e-7 && knorm < 1e-9,
          fmt("%d trajectories, max g'-speed drift %.2e, max ‖K(t)‖ drift %.2e", count, speed, knorm)};
}

// 7. efficiency sweep over the axis family
Outcome sweep() {
  const auto t0 = Clock::now();
  SweepConfig cfg;
  cfg.flux = pi / 4;
  cfg.alphas = {0.0, pi / 8, pi / 4, 3 * pi / 8, pi / 2};
  cfg.seeds = 10;
  cfg.jobs = jobs();
  const SweepResult res = alpha_sweep(tripod_model(), cfg);
  const double t = seconds_since(t0);
  const auto& s = res.summary;
  std::string curve;
  for (const auto& c : s)
    curve += fmt("a=%.3f: min %.4f sd %.4f align %.3f (%d ok); ", c.alpha, c.eta_min, c.eta_dispersion,
                 c.alignment_mean, c.converged);
  const double ends_max = std::max(s.front().eta_min, s.back().eta_min);
  double mid_min = std::numeric_limits<double>::infinity(), mid_sd = 0, mid_align = 0;
  for (size_t k = 1; k + 1 < s.size(); ++k) {
    mid_min = std::min(mid_min, s[k].eta_min);
    mid_sd += s[k].eta_dispersion / static_cast<double>(s.size() - 2);
    mid_align += s[k].alignment_mean / static_cast<double>(s.size() - 2);
  }
  const double end_sd = 0.5 * (s.front().eta_dispersion + s.back().eta_dispersion);
  const double end_align = 0.5 * (s.front().alignment_mean + s.back().alignment_mean);
  const bool minima = ends_max < mid_min, spread = mid_sd > end_sd, align = end_align > mid_align;
  const bool pass = minima && spread && align && t < 7200.0;
  return {pass, curve + fmt("minima at ends %s, mid dispersion %.4f vs ends %.4f %s, alignment ends %.3f vs mid %.3f %s, "
                            "%.0f s",
                            minima ? "yes" : "no", mid_sd, end_sd, spread ? "yes" : "no", end_align, mid_align,
                            align ? "yes" : "no", t)};
}

// 8. flat toy model: a lifted cone relaxes to the flat disc
Outcome minimal_surface() {
  const auto t0 = Clock::now();
  const GaugeModel m = flat_toy_model();
  Surface s = cone_surface(circle_loop(3, 1.0).sample(256), (ControlPoint(3) << 0.1, -0.1, 0.8).finished(), 32);
  std::mt19937_64 rng(8);
  perturb_surface(s, 3, 0.1, rng);
  const SurfaceOptimizationRun run = relax_surface(m, s);
  const double area = run.cost_history.back();
  const double rel = std::abs(area - pi) / pi;
  const double t = seconds_since(t0);
  return {rel < 1e-3 && t < 60.0 && !run.flagged,
          fmt("start %.6f, relaxed %.6f vs pi, relative error %.2e, %d iterations, %.1f s", run.cost_history.front(),
              area, rel, run.iterations, t)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"abelian saturation", abelian_saturation},   {"tripod curvature norm", tripod_norm},
      {"non-abelian stokes", stokes_equivalence},   {"bound hierarchy", bound_hierarchy},
      {"brachistochrone lengths", brachistochrone}, {"conservation laws", conservation},
      {"efficiency sweep", sweep},                  {"minimal surface", minimal_surface}};
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
