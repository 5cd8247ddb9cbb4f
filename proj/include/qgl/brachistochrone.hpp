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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/gauge.hpp"
#include "qgl/geodesic.hpp"
#include "qgl/holonomy.hpp"
#include "qgl/loop_guess.hpp"
#include "qgl/parallel.hpp"

namespace qgl {

enum class ShootingMode { open, closed };

inline std::string to_string(ShootingMode m) { return m == ShootingMode::open ? "open" : "closed"; }

struct ShootingConfig {
  ShootingMode mode = ShootingMode::closed;
  int n_steps = 2000;       ///< time grid of the reported solution
  int search_steps = 250;   ///< time grid used while optimising
  int seeds = 32;
  std::uint64_t seed = 1;
  int jobs = 1;
  double t_min = 0.01;
  double t_max = 30.0;
  /// sampling box for lambda0 (one interval per coordinate)
  std::vector<std::pair<double, double>> start_box;
  std::pair<double, double> duration_range{1.0, 5.0};
  double k0_scale = 1.0;
  double fidelity_tol = 1e-5;
  double closure_tol = 1e-6;
  double residual_tol = 1e-9;  ///< per-component target during the search
  int max_feasibility_iterations = 150;
  int max_descent_iterations = 250;
  bool minimize_length = true;
  /// Closed mode: seed each run from a holonomy-constrained shortest Fourier
  /// loop instead of a random (lambda0, lambda'0, K0, T).
  bool loop_initializer = true;
  FourierPathConfig loop{};
  double loop_amplitude = 0.5;
};

/// Defaults for the tripod: lambda0 away from the poles, phi in [0, pi),
/// varphi in [0, 2 pi). Open paths have no shortest representative (their
/// length tends to zero near the degenerate points of the metric), so open
/// runs stop at the first feasible solution of each seed.
inline ShootingConfig tripod_shooting_config(ShootingMode mode) {
  ShootingConfig c;
  c.mode = mode;
  c.start_box = {{0.2, pi - 0.2}, {0.0, pi}, {0.0, 2 * pi}};
  c.duration_range = mode == ShootingMode::closed ? std::pair{2.0, 5.0} : std::pair{0.2, 1.5};
  c.minimize_length = mode == ShootingMode::closed;
  c.loop.harmonics = 3;
  c.loop.segments = 96;
  c.loop.bounds = {{0.15, pi - 0.15}};
  return c;
}

struct ShootingSolution {
  Contour contour;
  std::vector<RVector> velocities;
  ControlPoint lambda0;
  RVector velocity0;
  AlgebraElement k0;
  double duration = 0.0;        ///< T
  double fidelity_error = 1.0;  ///< 1 - |<U*, U(T)>|^2
  double closure_error = 0.0;   ///< max |lambda(T) - lambda(0)| (closed mode)
  double fs_length = 0.0;       ///< \int sqrt(g(v, v)) dt
  double weighted_speed_drift = 0.0;
  double residual_norm = 0.0;   ///< max |r_i| at the reported grid
  bool converged = false;
  std::uint64_t seed = 0;
  ShootingMode mode = ShootingMode::closed;
  UnitaryGate gate;
  int iterations = 0;
};

namespace detail {

/// Unknowns x = [lambda0 (d), u (d), k (m), T]; lambda'0 = u/|u| at unit
/// g'-speed.
class ShootingProblem {
 public:
  ShootingProblem(const GaugeModel& model, const UnitaryGate& target, const ShootingConfig& cfg)
      : model_(model), target_(target), cfg_(cfg), basis_(qgl::generator_basis(model.n)) {
    if (target.dim() != model.n) throw DimensionError("shoot: target dimension does not match the model");
  }

  Eigen::Index d() const { return model_.d; }
  Eigen::Index m() const { return static_cast<Eigen::Index>(basis_.size()); }
  Eigen::Index size() const { return 2 * d() + m() + 1; }
  Eigen::Index t_index() const { return size() - 1; }
  Eigen::Index residual_size() const {
    return m() + (cfg_.mode == ShootingMode::closed ? d() : 0);
  }

  ControlPoint lambda0(const RVector& x) const { return x.head(d()); }
  AlgebraElement k0(const RVector& x) const {
    CMatrix k = CMatrix::Zero(model_.n, model_.n);
    for (Eigen::Index j = 0; j < m(); ++j) k += x(2 * d() + j) * basis_[static_cast<size_t>(j)];
    return AlgebraElement(k);
  }
  RVector velocity0(const RVector& x) const {
    const ControlPoint l0 = lambda0(x);
    RVector u = x.segment(d(), d());
    const double un = u.norm();
    if (!(un > 1e-300)) u = RVector::Unit(d(), 0);
    else u /= un;
    // v = L^{-T} u gives g'(v, v) = |u|^2 = 1
    const RMatrix gp = hs_curvature_norm(model_, l0) * fs_metric(model_, l0);
    Eigen::LLT<RMatrix> llt(gp);
    if (llt.info() != Eigen::Success) throw SingularMetricError("metric not positive definite", l0);
    return llt.matrixU().solve(u);
  }

  Trajectory integrate(const RVector& x, int steps, bool record) const {
    IntegrationOptions opt;
    opt.record = record;
    if (!record) opt.max_refinements = 0;  // a fixed grid keeps the residual smooth for differencing
    return integrate_trajectory(model_, lambda0(x), velocity0(x), k0(x), x(t_index()), steps, opt);
  }

  RVector residual_of(const RVector& x, const Trajectory& tr) const {
    RVector r(residual_size());
    const CMatrix err = log_min(CMatrix(target_.matrix().adjoint() * tr.final_gate.matrix()));
    for (Eigen::Index j = 0; j < m(); ++j) r(j) = hs_inner(basis_[static_cast<size_t>(j)], err).real();
    if (cfg_.mode == ShootingMode::closed)
      r.tail(d()) = periodic_difference(lambda0(x), tr.contour.points.back(), model_.periods);
    return r;
  }

  /// Residual, or nullopt when the integration hits a singular metric.
  std::optional<RVector> residual(const RVector& x, int steps) const {
    try {
      return residual_of(x, integrate(x, steps, false));
    } catch (const SingularMetricError&) {
      return std::nullopt;
    }
  }

  std::optional<RMatrix> jacobian(const RVector& x, const RVector& r0, int steps) const {
    RMatrix j(residual_size(), size());
    for (Eigen::Index c = 0; c < size(); ++c) {
      RVector xp = x;
      const double h = 1e-7 * std::max(1.0, std::abs(x(c)));
      xp(c) += h;
      const auto rp = residual(xp, steps);
      if (!rp) return std::nullopt;
      j.col(c) = (*rp - r0) / h;
    }
    return j;
  }

  void clamp(RVector& x) const { x(t_index()) = std::clamp(x(t_index()), cfg_.t_min, cfg_.t_max); }

  /// Scales a trial step so no block moves too far at once: lambda0 by 0.3
  /// per coordinate, u and K0 by half their size, T by 30%.
  RVector limit_step(const RVector& x, RVector dx) const {
    double scale = 1.0;
    auto cap = [&](double change, double bound) {
      if (change > bound) scale = std::min(scale, bound / change);
    };
    cap(dx.head(d()).cwiseAbs().maxCoeff(), 0.3);
    cap(dx.segment(d(), d()).norm(), 0.5 * std::max(x.segment(d(), d()).norm(), 1e-3));
    cap(dx.segment(2 * d(), m()).norm(), 0.5 * std::max(x.segment(2 * d(), m()).norm(), 1.0));
    cap(std::abs(dx(t_index())), 0.3 * x(t_index()));
    return scale * dx;
  }

  const ShootingConfig& config() const { return cfg_; }
  const GaugeModel& model() const { return model_; }
  const UnitaryGate& target() const { return target_; }

 private:
  const GaugeModel& model_;
  UnitaryGate target_;
  ShootingConfig cfg_;
  std::vector<CMatrix> basis_;
};

inline double max_abs(const RVector& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; }

/// Levenberg-Marquardt on 1/2 |r|^2 with a box on the step size. Stops at
/// `tol`, when progress stalls at the differencing noise floor, or after
/// max_iter. Returns the final residual (or nullopt).
inline std::optional<RVector> solve_feasibility(const ShootingProblem& p, RVector& x, int steps, int max_iter,
                                                double tol, int* iterations = nullptr) {
  auto r = p.residual(x, steps);
  if (!r) return std::nullopt;
  double mu = 1e-3;
  int slow = 0;
  for (int it = 0; it < max_iter && max_abs(*r) > tol; ++it) {
    if (iterations) ++*iterations;
    const auto j = p.jacobian(x, *r, steps);
    if (!j) return r;
    const RMatrix jtj = j->transpose() * *j;
    const RVector g = j->transpose() * *r;
    bool accepted = false;
    for (int inner = 0; inner < 12 && !accepted; ++inner) {
      RMatrix a = jtj;
      a.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
      RVector xn = x + p.limit_step(x, a.ldlt().solve(-g));
      p.clamp(xn);
      const auto rn = p.residual(xn, steps);
      if (rn && rn->squaredNorm() < r->squaredNorm()) {
        slow = rn->norm() > 0.7 * r->norm() ? slow + 1 : 0;
        x = xn;
        r = rn;
        mu = std::max(mu / 5.0, 1e-12);
        accepted = true;
      } else {
        mu *= 8.0;
      }
    }
    if (!accepted || (slow >= 3 && max_abs(*r) < 1e3 * tol) || slow >= 8) break;
  }
  return r;
}

/// Gauss-Newton restoration with a frozen Jacobian (minimum-norm steps).
inline bool restore(const ShootingProblem& p, RVector& x, const RMatrix& j, int steps, double tol) {
  const Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(j);
  for (int it = 0; it < 12; ++it) {
    const auto r = p.residual(x, steps);
    if (!r) return false;
    if (max_abs(*r) < tol) return true;
    RVector xn = x - cod.solve(*r);
    p.clamp(xn);
    const auto rn = p.residual(xn, steps);
    if (!rn || rn->norm() > 0.9 * r->norm()) return false;
    x = xn;
  }
  const auto r = p.residual(x, steps);
  return r && max_abs(*r) < tol;
}

/// Shortens T along the constraint manifold r(x) = 0: project -e_T onto
/// ker J, step, then restore feasibility.
inline void minimize_duration(const ShootingProblem& p, RVector& x, int steps, int max_iter, double tol,
                              int* iterations = nullptr) {
  const Eigen::Index ti = p.t_index();
  double step = 0.1 * x(ti);
  for (int it = 0; it < max_iter && step > 1e-7; ++it) {
    if (iterations) ++*iterations;
    const auto r = p.residual(x, steps);
    if (!r) return;
    const auto j = p.jacobian(x, *r, steps);
    if (!j) return;
    const Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(*j);
    RVector e = RVector::Unit(p.size(), ti);
    RVector dir = -(e - cod.solve(*j * e));
    const double dn = dir.norm();
    if (dn < 1e-6 || x(ti) <= p.config().t_min * (1 + 1e-12)) return;
    dir /= dn;
    bool accepted = false;
    while (!accepted && step > 1e-7) {
      RVector xn = x + step * dir;
      p.clamp(xn);
      if (restore(p, xn, *j, steps, tol) && xn(ti) < x(ti) - 1e-10) {
        x = xn;
        accepted = true;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
  }
}

}  // namespace detail

/// One local solve from an explicit initial guess.
inline ShootingSolution shoot_from(const GaugeModel& model, const UnitaryGate& target, const ShootingConfig& cfg,
                                   const ControlPoint& lambda0, const RVector& direction, const AlgebraElement& k0,
                                   double duration, std::uint64_t seed_label = 0) {
  const detail::ShootingProblem p(model, target, cfg);
  const auto basis = generator_basis(model.n);
  RVector x(p.size());
  x.head(p.d()) = lambda0;
  x.segment(p.d(), p.d()) = direction;
  for (Eigen::Index j = 0; j < p.m(); ++j) x(2 * p.d() + j) = hs_inner(basis[static_cast<size_t>(j)], k0.matrix()).real();
  x(p.t_index()) = duration;
  p.clamp(x);

  ShootingSolution sol;
  sol.seed = seed_label;
  sol.mode = cfg.mode;
  int iters = 0;
  auto r = detail::solve_feasibility(p, x, cfg.search_steps, cfg.max_feasibility_iterations, cfg.residual_tol, &iters);
  if (r && detail::max_abs(*r) < 1e-6 && cfg.minimize_length)
    detail::minimize_duration(p, x, cfg.search_steps, cfg.max_descent_iterations, cfg.residual_tol, &iters);
  // the search lets periodic coordinates drift far from [0, P); bring lambda0 back
  for (Eigen::Index i = 0; i < model.d && i < static_cast<Eigen::Index>(model.periods.size()); ++i) {
    const double period = model.periods[static_cast<size_t>(i)];
    if (period > 0.0) x(i) -= period * std::floor(x(i) / period);
  }
  // polish on the reporting grid
  r = detail::solve_feasibility(p, x, cfg.n_steps, 30, 1e-11, &iters);
  sol.iterations = iters;
  sol.lambda0 = p.lambda0(x);
  sol.k0 = p.k0(x);
  sol.duration = x(p.t_index());
  try {
    sol.velocity0 = p.velocity0(x);
    const Trajectory tr = p.integrate(x, cfg.n_steps, true);
    sol.contour = tr.contour;
    sol.contour.closed = false;
    sol.velocities = tr.velocities;
    sol.gate = tr.final_gate;
    sol.fidelity_error = 1.0 - fidelity(target, tr.final_gate);
    sol.weighted_speed_drift = tr.weighted_speed_drift;
    sol.fs_length = tr.fs_length;
    const RVector res = p.residual_of(x, tr);
    sol.residual_norm = detail::max_abs(res);
    if (cfg.mode == ShootingMode::closed) {
      const RVector gap = periodic_difference(tr.contour.points.front(), tr.contour.points.back(), model.periods);
      sol.closure_error = gap.cwiseAbs().maxCoeff();
      // snap the last node so the stored loop closes exactly (modulo periods)
      if (sol.closure_error < closure_tolerance) sol.contour.points.back() -= gap;
      sol.contour.closed = sol.closure_error < closure_tolerance;
    }
    sol.converged = sol.fidelity_error < cfg.fidelity_tol &&
                    (cfg.mode == ShootingMode::open || sol.closure_error < cfg.closure_tol);
  } catch (const SingularMetricError&) {
    sol.converged = false;
  }
  return sol;
}

/// Random initial guess for seed `seed` (deterministic).
struct ShootingGuess {
  ControlPoint lambda0;
  RVector direction;
  AlgebraElement k0;
  double duration;
};

inline ShootingGuess shooting_guess(const GaugeModel& model, const ShootingConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ShootingGuess g;
  g.lambda0 = ControlPoint(model.d);
  for (Eigen::Index k = 0; k < model.d; ++k) {
    const auto [lo, hi] = static_cast<size_t>(k) < cfg.start_box.size() ? cfg.start_box[static_cast<size_t>(k)]
                                                                         : std::pair{-1.0, 1.0};
    g.lambda0(k) = lo + (hi - lo) * unit(rng);
  }
  g.direction = RVector(model.d);
  for (Eigen::Index k = 0; k < model.d; ++k) g.direction(k) = normal(rng);
  const auto basis = generator_basis(model.n);
  CMatrix k0 = CMatrix::Zero(model.n, model.n);
  for (const auto& b : basis) k0 += cfg.k0_scale * normal(rng) * b;
  g.k0 = AlgebraElement(k0);
  g.duration = cfg.duration_range.first + (cfg.duration_range.second - cfg.duration_range.first) * unit(rng);
  return g;
}

struct ShootingReport {
  ShootingSolution best;
  std::vector<ShootingSolution> runs;  ///< one per seed, in seed order
  int converged_count = 0;
};

/// Shooting data for one seed of a closed run: the shortest Fourier loop
/// with the target holonomy, read off at s = 0. Falls back to the random
/// guess when the loop optimisation fails.
inline ShootingGuess loop_guess(const GaugeModel& model, const UnitaryGate& target, const ShootingConfig& cfg,
                                std::uint64_t seed) {
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + seed + 0x5bd1e995ull);
  FourierPathConfig lc = cfg.loop;
  lc.closed = true;
  try {
    const FourierPath start = random_fourier_path(model.d, lc, cfg.start_box, cfg.loop_amplitude, rng);
    const FourierPathResult res = optimize_fourier_path(model, target, start, lc);
    if (res.feasible) {
      const PathShootingData data = shooting_data_from_path(model, res.path);
      return {data.lambda0, data.velocity0, data.k0, std::clamp(data.duration, cfg.t_min, cfg.t_max)};
    }
  } catch (const SingularMetricError&) {
  }
  return shooting_guess(model, cfg, seed);
}

/// Multi-start shooting: every seed is solved locally; the converged run of
/// smallest FS length is returned as `best` (or the smallest-residual run
/// when none converged).
inline ShootingReport shoot(const GaugeModel& model, const UnitaryGate& target, const ShootingConfig& cfg) {
  ShootingReport rep;
  rep.runs.resize(static_cast<size_t>(std::max(cfg.seeds, 1)));
  parallel_for(rep.runs.size(), cfg.jobs, [&](size_t s) {
    const auto g = cfg.mode == ShootingMode::closed && cfg.loop_initializer ? loop_guess(model, target, cfg, s)
                                                                            : shooting_guess(model, cfg, s);
    rep.runs[s] = shoot_from(model, target, cfg, g.lambda0, g.direction, g.k0, g.duration, s);
  });
  const ShootingSolution* best = nullptr;
  for (const auto& r : rep.runs) {
    if (r.converged) {
      ++rep.converged_count;
      if (!best || !best->converged || r.fs_length < best->fs_length) best = &r;
    } else if (!best || (!best->converged && r.residual_norm < best->residual_norm)) {
      best = &r;
    }
  }
  rep.best = *best;
  return rep;
}

/// Coordinate excursions of a solution, used to characterise branches.
struct PathCharacter {
  RVector min, max, variance;
  double max_equator_deviation = 0.0;  ///< max |theta - pi/2| (first coordinate)
};

inline PathCharacter qualitative_path_check(const ShootingSolution& sol) {
  PathCharacter pc;
  const auto& pts = sol.contour.points;
  const Eigen::Index d = pts.front().size();
  pc.min = pc.max = pts.front();
  RVector mean = RVector::Zero(d);
  for (const auto& p : pts) {
    pc.min = pc.min.cwiseMin(p);
    pc.max = pc.max.cwiseMax(p);
    mean += p;
    pc.max_equator_deviation = std::max(pc.max_equator_deviation, std::abs(p(0) - pi / 2));
  }
  mean /= static_cast<double>(pts.size());
  pc.variance = RVector::Zero(d);
  for (const auto& p : pts) pc.variance += (p - mean).cwiseAbs2();
  pc.variance /= static_cast<double>(pts.size());
  return pc;
}

}  // namespace qgl
