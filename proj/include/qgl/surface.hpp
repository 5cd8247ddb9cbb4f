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

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/bounds.hpp"
#include "qgl/brachistochrone.hpp"
#include "qgl/gauge.hpp"
#include "qgl/holonomy.hpp"
#include "qgl/parallel.hpp"
#include "qgl/stokes.hpp"

namespace qgl {

/// Straight coordinate segments from the apex to every contour node, n2
/// rings. s1 follows the contour times.
inline Surface cone_surface(const Contour& contour, const ControlPoint& apex, Eigen::Index n2,
                            const GaugeModel* model = nullptr) {
  const std::vector<double> periods = model ? model->periods : std::vector<double>{};
  if (!contour.closed) throw ContourError("cone_surface: contour must be closed");
  contour.validate(periods);
  if (contour.size() < 4) throw ContourError("cone_surface: contour needs at least four nodes");
  if (apex.size() != contour.dim()) throw DimensionError("cone_surface: apex has the wrong dimension");
  if (model) {
    if (model->d != apex.size()) throw DimensionError("cone_surface: model dimension mismatch");
    const RMatrix g = fs_metric(*model, apex);
    const double scale = std::pow(std::max(g.cwiseAbs().maxCoeff(), 1e-300), static_cast<double>(g.rows()));
    if (!(std::abs(g.determinant()) > singular_metric_det * scale))
      throw SingularMetricError("cone_surface: apex sits on a coordinate singularity", apex);
  }
  const RVector shift = contour.points.back() - contour.points.front();
  if (shift.cwiseAbs().maxCoeff() > closure_tolerance)
    throw ContourError("cone_surface: contour winds around a periodic coordinate; no cone spans it");
  const auto n1 = static_cast<Eigen::Index>(contour.size() - 1);
  Surface s(n1, n2, contour.dim());
  const double t0 = contour.t.front(), span = contour.t.back() - t0;
  for (Eigen::Index i = 0; i <= n1; ++i) {
    s.s1[static_cast<size_t>(i)] = (contour.t[static_cast<size_t>(i)] - t0) / span;
    const ControlPoint& c = contour.points[static_cast<size_t>(i == n1 ? 0 : i)];
    for (Eigen::Index j = 0; j <= n2; ++j) s.at(i, j) = apex + s.s2(j) * (c - apex);
  }
  s.s1.back() = 1.0;
  return s;
}

/// Coordinate mean of the nodes of a closed contour (last node skipped).
inline ControlPoint contour_centroid(const Contour& c) {
  ControlPoint m = ControlPoint::Zero(c.dim());
  for (size_t k = 0; k + 1 < c.size(); ++k) m += c.points[k];
  return m / static_cast<double>(c.size() - 1);
}

/// Smooth interior displacement sin(pi s2) sum_h (a_h cos 2 pi h s1 + b_h
/// sin 2 pi h s1) with Gaussian coefficients of standard deviation
/// `amplitude`; boundary and apex stay put.
inline void perturb_surface(Surface& s, int harmonics, double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, amplitude);
  const Eigen::Index d = s.dim();
  RMatrix a(d, harmonics), b(d, harmonics);
  for (Eigen::Index k = 0; k < d; ++k)
    for (int h = 0; h < harmonics; ++h) {
      a(k, h) = normal(rng);
      b(k, h) = normal(rng);
    }
  for (Eigen::Index i = 0; i < s.n1; ++i) {
    const double u = 2.0 * pi * s.s1[static_cast<size_t>(i)];
    RVector dir = RVector::Zero(d);
    for (int h = 0; h < harmonics; ++h) dir += a.col(h) * std::cos((h + 1) * u) + b.col(h) * std::sin((h + 1) * u);
    for (Eigen::Index j = 1; j < s.n2; ++j) s.at(i, j) += std::sin(pi * s.s2(j)) * dir;
  }
  for (Eigen::Index j = 0; j <= s.n2; ++j) s.at(s.n1, j) = s.at(0, j) + s.wrap_shift;
}

enum class DescentMethod {
  lbfgs,     ///< limited-memory quasi-Newton with Armijo backtracking
  gradient,  ///< steepest descent in raw coordinates
  natural,   ///< steepest descent preconditioned node-wise by g^{-1}
};

struct RelaxConfig {
  DescentMethod method = DescentMethod::lbfgs;
  int max_iterations = 5000;
  double rel_tol = 1e-7;  ///< relative cost change over `window` iterations
  int window = 10;
  int memory = 10;
  int preconditioner_refresh = 100;  ///< iterations between preconditioner rebuilds
  /// L-BFGS initial Hessian from the Dirichlet Laplacian of the polar
  /// parameter disc instead of a multiple of the identity
  bool laplacian_preconditioner = true;
  /// edge blocks from the local metric (true) or the surface average (false)
  bool local_metric_blocks = false;
  double armijo = 1e-4;
  int max_backtracks = 40;
  int max_failures = 5;  ///< consecutive failed line searches before giving up
  bool record_alignment = true;
};

struct SurfaceOptimizationRun {
  Surface initial;
  Surface final;
  std::vector<double> cost_history;  ///< discrete \iint ||F||_HS dS after each accepted step
  bool converged = false;
  bool flagged = false;  ///< line search kept failing (singularities or noise)
  int iterations = 0;
  double alignment_mean = std::numeric_limits<double>::quiet_NaN();
  double max_boundary_displacement = 0.0;
};

namespace detail {

/// Discrete flux functional: every grid quad is split along both diagonals
/// and S_quad = 1/2 sum of the four triangle areas, each measured with g and
/// ||F||_HS at the quad centre. Degenerate apex quads drop out naturally.
class SurfaceFunctional {
 public:
  SurfaceFunctional(const GaugeModel& model, const Surface& start) : model_(model), s_(start) {
    if (start.polar_apex) throw SurfaceError("relaxation needs a cone surface with a single apex node");
    d_ = start.dim();
    n1_ = start.n1;
    n2_ = start.n2;
  }

  Eigen::Index size() const { return d_ * (1 + n1_ * (n2_ - 1)); }

  RVector pack(const Surface& s) const {
    RVector x(size());
    x.head(d_) = s.apex();
    for (Eigen::Index i = 0; i < n1_; ++i)
      for (Eigen::Index j = 1; j < n2_; ++j) x.segment(offset(i, j), d_) = s.at(i, j);
    return x;
  }

  Surface unpack(const RVector& x) const {
    Surface s = s_;
    for (Eigen::Index i = 0; i <= n1_; ++i)
      for (Eigen::Index j = 0; j < n2_; ++j) s.at(i, j) = node(x, i, j);
    return s;
  }

  /// Cost, and its gradient when `grad` is non-null. Returns +inf if the
  /// metric or curvature cannot be evaluated.
  double evaluate(const RVector& x, RVector* grad) const {
    if (grad) grad->setZero(size());
    double total = 0.0;
    const Eigen::Index d = d_;
    std::vector<double> p[4], gv(static_cast<size_t>(d * d)), dgv;
    for (auto& q : p) q.resize(static_cast<size_t>(d));
    std::vector<double> gp[4];  // gradient per corner
    for (auto& q : gp) q.resize(static_cast<size_t>(d));
    std::vector<double> gc(static_cast<size_t>(d));
    try {
      for (Eigen::Index i = 0; i < n1_; ++i)
        for (Eigen::Index j = 0; j < n2_; ++j) {
          const Eigen::Index ci[4] = {i, i + 1, i + 1, i};
          const Eigen::Index cj[4] = {j, j, j + 1, j + 1};
          ControlPoint c = ControlPoint::Zero(d);
          for (int k = 0; k < 4; ++k) {
            const ControlPoint v = node(x, ci[k], cj[k]);
            for (Eigen::Index m = 0; m < d; ++m) p[k][static_cast<size_t>(m)] = v(m);
            c += 0.25 * v;
          }
          const RMatrix g = fs_metric(model_, c);
          for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) gv[static_cast<size_t>(a * d + b)] = g(a, b);
          const double f = norm(c);
          double area = 0.0;
          if (grad) {
            for (auto& q : gp) std::fill(q.begin(), q.end(), 0.0);
            std::fill(gc.begin(), gc.end(), 0.0);
          }
          // both diagonal splits: (0,1,2),(0,2,3) and (0,1,3),(1,2,3)
          static constexpr int tri[4][3] = {{0, 1, 2}, {0, 2, 3}, {0, 1, 3}, {1, 2, 3}};
          std::vector<RMatrix> dg;
          if (grad) dg = metric_jacobian(model_, c);
          for (const auto& t : tri) area += triangle(p[t[0]], p[t[1]], p[t[2]], gv, dg, grad ? gp : nullptr, t,
                                                     grad ? &gc : nullptr);
          const double cost = 0.5 * f * area;
          total += cost;
          if (grad) {
            RVector gradf = RVector::Zero(d);
            if (!model_.constant_curvature_norm) gradf = norm_gradient(c);
            for (int k = 0; k < 4; ++k) {
              RVector gk(d);
              for (Eigen::Index m = 0; m < d; ++m)
                gk(m) = 0.5 * f * (gp[k][static_cast<size_t>(m)] + 0.25 * gc[static_cast<size_t>(m)]) +
                        0.25 * 0.5 * area * gradf(m);
              scatter(*grad, ci[k], cj[k], gk);
            }
          }
        }
    } catch (const SingularMetricError&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(total)) return std::numeric_limits<double>::infinity();
    return total;
  }

  /// Applies the inverse of the metric-weighted Dirichlet Laplacian of the
  /// polar parameter disc (r = s2, angle 2 pi s1), built at the last
  /// update_preconditioner point.
  RVector apply_inverse_laplacian(const RVector& q) const { return laplacian_->solve(q); }

  /// Rebuilds the block Laplacian sum_e w_e (x_a - x_b)^T g_e (x_a - x_b)
  /// with g_e the metric at the edge midpoint or the surface-averaged metric
  /// (ridge-regularised so that degenerate patches stay positive definite).
  void update_preconditioner(const RVector& x, bool local_blocks) {
    const Eigen::Index nodes = 1 + n1_ * (n2_ - 1);
    RMatrix avg = RMatrix::Zero(d_, d_);
    if (!local_blocks) {
      for (Eigen::Index v = 0; v < nodes; ++v) avg += fs_metric(model_, x.segment(v * d_, d_));
      avg /= static_cast<double>(nodes);
    }
    auto id = [&](Eigen::Index i, Eigen::Index j) -> Eigen::Index {  // -1 for pinned boundary nodes
      if (j == n2_) return -1;
      if (j == 0) return 0;
      return 1 + (i % n1_) * (n2_ - 1) + (j - 1);
    };
    std::vector<Eigen::Triplet<double>> trip;
    auto edge = [&](Eigen::Index i0, Eigen::Index j0, Eigen::Index i1, Eigen::Index j1, double w) {
      const Eigen::Index a = id(i0, j0), b = id(i1, j1);
      RMatrix g = local_blocks ? fs_metric(model_, 0.5 * (node(x, i0, j0) + node(x, i1, j1))) : avg;
      g += 1e-2 * std::max(g.trace(), 1e-12) / static_cast<double>(d_) * RMatrix::Identity(d_, d_);
      for (Eigen::Index r = 0; r < d_; ++r)
        for (Eigen::Index c = 0; c < d_; ++c) {
          const double v = w * g(r, c);
          if (a >= 0) trip.emplace_back(a * d_ + r, a * d_ + c, v);
          if (b >= 0) trip.emplace_back(b * d_ + r, b * d_ + c, v);
          if (a >= 0 && b >= 0) {
            trip.emplace_back(a * d_ + r, b * d_ + c, -v);
            trip.emplace_back(b * d_ + r, a * d_ + c, -v);
          }
        }
    };
    const double dr = 1.0 / static_cast<double>(n2_);
    for (Eigen::Index i = 0; i < n1_; ++i) {
      const double th = 2.0 * pi * (s_.s1[static_cast<size_t>(i + 1)] - s_.s1[static_cast<size_t>(i)]);
      const double th_prev = 2.0 * pi * (i == 0 ? 1.0 - s_.s1[static_cast<size_t>(n1_ - 1)]
                                               : s_.s1[static_cast<size_t>(i)] - s_.s1[static_cast<size_t>(i - 1)]);
      const double dual = 0.5 * (th + th_prev);
      for (Eigen::Index j = 0; j < n2_; ++j) edge(i, j, i, j + 1, (j + 0.5) * dr * dual / dr);
      for (Eigen::Index j = 1; j < n2_; ++j) edge(i, j, i + 1, j, dr / (j * dr * th));
    }
    Eigen::SparseMatrix<double> lap(nodes * d_, nodes * d_);
    lap.setFromTriplets(trip.begin(), trip.end());
    laplacian_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(lap);
    if (laplacian_->info() != Eigen::Success) throw std::runtime_error("relax_surface: preconditioner factorisation failed");
  }

  /// Per-variable inverse metric blocks for the natural-gradient option.
  RVector precondition(const RVector& x, const RVector& grad) const {
    RVector out = grad;
    auto apply = [&](Eigen::Index off) {
      const ControlPoint p = x.segment(off, d_);
      try {
        out.segment(off, d_) = inverse_metric(fs_metric(model_, p), p) * grad.segment(off, d_);
      } catch (const SingularMetricError&) {
      }
    };
    apply(0);
    for (Eigen::Index i = 0; i < n1_; ++i)
      for (Eigen::Index j = 1; j < n2_; ++j) apply(offset(i, j));
    return out;
  }

 private:
  Eigen::Index offset(Eigen::Index i, Eigen::Index j) const { return d_ * (1 + i * (n2_ - 1) + (j - 1)); }

  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> laplacian_;

  ControlPoint node(const RVector& x, Eigen::Index i, Eigen::Index j) const {
    if (j == n2_) return s_.at(i, n2_);
    if (j == 0) return x.head(d_);
    if (i == n1_) return x.segment(offset(0, j), d_) + s_.wrap_shift;
    return x.segment(offset(i, j), d_);
  }

  void scatter(RVector& grad, Eigen::Index i, Eigen::Index j, const RVector& g) const {
    if (j == n2_) return;
    if (j == 0) {
      grad.head(d_) += g;
      return;
    }
    grad.segment(offset(i == n1_ ? 0 : i, j), d_) += g;
  }

  double norm(const ControlPoint& c) const {
    if (model_.constant_curvature_norm) return *model_.constant_curvature_norm;
    return hs_curvature_norm(model_, c);
  }

  RVector norm_gradient(const ControlPoint& c) const {
    RVector out(d_);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < d_; ++k) {
      ControlPoint a = c, b = c;
      a(k) += h;
      b(k) -= h;
      out(k) = (hs_curvature_norm(model_, a) - hs_curvature_norm(model_, b)) / (2 * h);
    }
    return out;
  }

  /// Area of triangle (a, b, c) in the frozen metric; accumulates d area /
  /// d corner into gp and d area / d centre into gc.
  double triangle(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                  const std::vector<double>& g, const std::vector<RMatrix>& dg, std::vector<double>* gp,
                  const int* corners, std::vector<double>* gc) const {
    const auto d = static_cast<size_t>(d_);
    double e1[8], e2[8], ge1[8], ge2[8];
    for (size_t m = 0; m < d; ++m) {
      e1[m] = b[m] - a[m];
      e2[m] = c[m] - a[m];
    }
    for (size_t m = 0; m < d; ++m) {
      ge1[m] = ge2[m] = 0.0;
      for (size_t n = 0; n < d; ++n) {
        ge1[m] += g[m * d + n] * e1[n];
        ge2[m] += g[m * d + n] * e2[n];
      }
    }
    double g11 = 0, g22 = 0, g12 = 0;
    for (size_t m = 0; m < d; ++m) {
      g11 += e1[m] * ge1[m];
      g22 += e2[m] * ge2[m];
      g12 += e1[m] * ge2[m];
    }
    const double det = g11 * g22 - g12 * g12;
    if (!(det > 1e-28 * std::max(g11 * g22, 1e-300)) || det <= 0.0) return 0.0;
    const double area = 0.5 * std::sqrt(det);
    if (!gp) return area;
    const double inv = 1.0 / (4.0 * area);
    for (size_t m = 0; m < d; ++m) {
      const double d1 = (g22 * ge1[m] - g12 * ge2[m]) * inv;
      const double d2 = (g11 * ge2[m] - g12 * ge1[m]) * inv;
      gp[corners[1]][m] += d1;
      gp[corners[2]][m] += d2;
      gp[corners[0]][m] -= d1 + d2;
    }
    const double inv8 = 1.0 / (8.0 * area);
    for (size_t k = 0; k < d; ++k) {
      const RMatrix& dk = dg[k];
      double q11 = 0, q22 = 0, q12 = 0;
      for (size_t m = 0; m < d; ++m)
        for (size_t n = 0; n < d; ++n) {
          const double w = dk(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
          q11 += e1[m] * w * e1[n];
          q22 += e2[m] * w * e2[n];
          q12 += e1[m] * w * e2[n];
        }
      (*gc)[k] += (g22 * q11 + g11 * q22 - 2.0 * g12 * q12) * inv8;
    }
    return area;
  }

  const GaugeModel& model_;
  Surface s_;
  Eigen::Index d_, n1_, n2_;
};

}  // namespace detail

/// Discrete flux functional of a surface (the relaxation cost).
inline double surface_cost(const GaugeModel& model, const Surface& s) {
  detail::SurfaceFunctional fn(model, s);
  return fn.evaluate(fn.pack(s), nullptr);
}

/// Minimises the discrete flux functional over interior nodes and the apex
/// with the boundary row pinned.
inline SurfaceOptimizationRun relax_surface(const GaugeModel& model, const Surface& start,
                                            const RelaxConfig& cfg = {}) {
  if (start.dim() != model.d) throw DimensionError("relax_surface: surface dimension does not match the model");
  start.validate();
  detail::SurfaceFunctional fn(model, start);
  SurfaceOptimizationRun run;
  run.initial = start;
  RVector x = fn.pack(start);
  if (cfg.laplacian_preconditioner && cfg.method == DescentMethod::lbfgs) fn.update_preconditioner(x, cfg.local_metric_blocks);
  RVector grad;
  double cost = fn.evaluate(x, &grad);
  if (!std::isfinite(cost)) throw SingularMetricError("relax_surface: initial surface hits a singular metric", x);
  run.cost_history.push_back(cost);

  std::deque<std::pair<RVector, RVector>> memory;  // (s, y)
  double step_scale = 1.0 / std::max(grad.norm(), 1e-12);
  int failures = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    RVector dir;
    if (cfg.method == DescentMethod::lbfgs) {
      // two-loop recursion
      RVector q = grad;
      std::vector<double> alpha(memory.size());
      for (size_t k = memory.size(); k-- > 0;) {
        const auto& [sk, yk] = memory[k];
        alpha[k] = sk.dot(q) / yk.dot(sk);
        q -= alpha[k] * yk;
      }
      const bool lap = cfg.laplacian_preconditioner;
      auto h0 = [&](const RVector& v) { return lap ? fn.apply_inverse_laplacian(v) : v; };
      RVector r = h0(q);
      if (!memory.empty()) {
        const auto& [sl, yl] = memory.back();
        r *= sl.dot(yl) / yl.dot(h0(yl));
      } else if (!lap) {
        r *= step_scale;
      }
      for (size_t k = 0; k < memory.size(); ++k) {
        const auto& [sk, yk] = memory[k];
        const double beta = yk.dot(r) / yk.dot(sk);
        r += sk * (alpha[k] - beta);
      }
      dir = -r;
      if (!(dir.dot(grad) < 0.0)) {
        memory.clear();
        dir = lap ? RVector(-h0(grad)) : RVector(-step_scale * grad);
      }
    } else if (cfg.method == DescentMethod::natural) {
      dir = -fn.precondition(x, grad);
      if (!(dir.dot(grad) < 0.0)) dir = -grad;
    } else {
      dir = -grad;
    }

    // quasi-Newton steps start at t = 1, steepest descent at the last accepted scale
    double t = (cfg.method == DescentMethod::lbfgs) ? 1.0 : step_scale;
    const double slope = dir.dot(grad);
    RVector x_new, g_new;
    double c_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      x_new = x + t * dir;
      c_new = fn.evaluate(x_new, &g_new);
      if (std::isfinite(c_new) && c_new <= cost + cfg.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    run.iterations = it + 1;
    if (!accepted) {
      memory.clear();
      if (++failures >= cfg.max_failures) {
        run.flagged = true;
        break;
      }
      continue;
    }
    failures = 0;
    if (cfg.method != DescentMethod::lbfgs) step_scale = std::min(4.0 * t, 1e6);  // let the trial step grow back
    const RVector sk = x_new - x, yk = g_new - grad;
    if (sk.dot(yk) > 1e-14 * sk.norm() * yk.norm()) {
      memory.emplace_back(sk, yk);
      if (static_cast<int>(memory.size()) > cfg.memory) memory.pop_front();
    }
    x = std::move(x_new);
    grad = std::move(g_new);
    cost = c_new;
    run.cost_history.push_back(cost);
    if (cfg.laplacian_preconditioner && cfg.method == DescentMethod::lbfgs && cfg.preconditioner_refresh > 0 &&
        (it + 1) % cfg.preconditioner_refresh == 0)
      fn.update_preconditioner(x, cfg.local_metric_blocks);
    const size_t n = run.cost_history.size();
    if (n > static_cast<size_t>(cfg.window)) {
      const double old = run.cost_history[n - 1 - static_cast<size_t>(cfg.window)];
      if (std::abs(old - cost) <= cfg.rel_tol * std::max(std::abs(cost), 1e-300)) {
        run.converged = true;
        break;
      }
    }
    if (grad.norm() == 0.0) {
      run.converged = true;
      break;
    }
  }
  run.final = fn.unpack(x);
  for (Eigen::Index i = 0; i <= start.n1; ++i)
    run.max_boundary_displacement = std::max(
        run.max_boundary_displacement, (run.final.at(i, start.n2) - start.at(i, start.n2)).cwiseAbs().maxCoeff());
  if (cfg.record_alignment) {
    try {
      run.alignment_mean = abelianity_field(model, run.final).mean;
    } catch (const SingularMetricError&) {
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Rotation-axis sweep

/// exp(i phi n(alpha) . sigma) with n(alpha) = cos(alpha) y + sin(alpha) z.
inline UnitaryGate axis_family_gate(double phi, double alpha) {
  return su2_rotation(phi, Eigen::Vector3d(0.0, std::cos(alpha), std::sin(alpha)));
}

struct SweepConfig {
  double flux = pi / 4;
  std::vector<double> alphas;  ///< empty = {0, pi/16, ..., pi/2}
  int seeds = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  Eigen::Index n1 = 64, n2 = 64;
  double apex_spread = 0.2;        ///< std. dev. of the random apex offset
  int perturbation_harmonics = 3;
  double perturbation_amplitude = 0.2;
  RelaxConfig relax{};
  ShootingConfig shooting = tripod_shooting_config(ShootingMode::closed);
};

inline std::vector<double> default_alphas() {
  std::vector<double> a;
  for (int k = 0; k <= 8; ++k) a.push_back(k * pi / 16);
  return a;
}

struct SweepCell {
  double alpha = 0.0;
  int seed = 0;
  bool converged = false;
  std::string failure;  ///< empty when converged
  double contour_length = 0.0;
  BoundReport bounds;
  double alignment_mean = std::numeric_limits<double>::quiet_NaN();
  int relax_iterations = 0;
  std::optional<Surface> surface;  ///< relaxed surface (kept when requested)
  std::optional<Contour> contour;
};

struct SweepSummary {
  double alpha = 0.0;
  int converged = 0;
  int failed = 0;
  double eta_min = std::numeric_limits<double>::quiet_NaN();
  double eta_median = std::numeric_limits<double>::quiet_NaN();
  double eta_dispersion = std::numeric_limits<double>::quiet_NaN();  ///< std. dev. over converged seeds
  double eta_range = std::numeric_limits<double>::quiet_NaN();       ///< max - min
  int best_seed = -1;
  double best_alignment = std::numeric_limits<double>::quiet_NaN();  ///< alignment of the min-eta cell
  double alignment_mean = std::numeric_limits<double>::quiet_NaN();  ///< over converged seeds
};

struct SweepResult {
  std::vector<SweepCell> cells;  ///< alpha-major, seed-minor
  std::vector<SweepSummary> summary;
};

/// Resamples a closed shooting solution at n1 uniform time nodes (linear
/// interpolation of the recorded trajectory).
inline Contour resample_closed(const Contour& c, Eigen::Index n1) {
  Contour out;
  out.closed = true;
  const double t0 = c.t.front(), t1 = c.t.back();
  size_t k = 0;
  for (Eigen::Index i = 0; i <= n1; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n1);
    while (k + 2 < c.t.size() && c.t[k + 1] < t) ++k;
    const double w = std::clamp((t - c.t[k]) / (c.t[k + 1] - c.t[k]), 0.0, 1.0);
    out.t.push_back(t);
    out.points.push_back((1.0 - w) * c.points[k] + w * c.points[k + 1]);
  }
  out.points.back() = out.points.front();
  out.t.back() = t1;
  return out;
}

inline SweepCell sweep_cell(const GaugeModel& model, const SweepConfig& cfg, double alpha, int seed,
                            bool keep_geometry = false) {
  SweepCell cell;
  cell.alpha = alpha;
  cell.seed = seed;
  const UnitaryGate target = axis_family_gate(cfg.flux, alpha);
  ShootingConfig sc = cfg.shooting;
  sc.mode = ShootingMode::closed;
  sc.seed = cfg.seed;
  // every (alpha, seed) cell draws its own loop
  const std::uint64_t label =
      static_cast<std::uint64_t>(seed) + 1000ull * static_cast<std::uint64_t>(std::llround(alpha * 1e6));
  const ShootingGuess g = loop_guess(model, target, sc, label);
  const ShootingSolution sol = shoot_from(model, target, sc, g.lambda0, g.direction, g.k0, g.duration, label);
  cell.contour_length = sol.fs_length;
  if (!sol.converged) {
    cell.failure = "shooting did not converge";
    return cell;
  }
  try {
    const Contour loop = resample_closed(sol.contour, cfg.n1);
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + label * 0x2545F4914F6CDD1Dull + 7);
    std::normal_distribution<double> normal(0.0, cfg.apex_spread);
    ControlPoint apex = contour_centroid(loop);
    for (Eigen::Index k = 0; k < apex.size(); ++k) apex(k) += normal(rng);
    Surface start = cone_surface(loop, apex, cfg.n2, &model);
    perturb_surface(start, cfg.perturbation_harmonics, cfg.perturbation_amplitude, rng);
    const SurfaceOptimizationRun run = relax_surface(model, start, cfg.relax);
    BoundOptions bo;
    bo.flux = cfg.flux;
    cell.bounds = evaluate_bounds(model, run.final, bo);
    cell.alignment_mean = run.alignment_mean;
    cell.relax_iterations = run.iterations;
    cell.converged = !run.flagged;
    if (run.flagged) cell.failure = "surface relaxation stalled";
    if (keep_geometry) {
      cell.surface = run.final;
      cell.contour = loop;
    }
  } catch (const std::exception& e) {
    cell.failure = e.what();
    cell.converged = false;
  }
  return cell;
}

inline SweepSummary summarize_cells(double alpha, const std::vector<const SweepCell*>& cells) {
  SweepSummary s;
  s.alpha = alpha;
  std::vector<double> eta;
  double align = 0.0;
  int align_n = 0;
  for (const SweepCell* c : cells) {
    if (!c->converged) {
      ++s.failed;
      continue;
    }
    ++s.converged;
    eta.push_back(c->bounds.efficiency);
    if (std::isfinite(c->alignment_mean)) {
      align += c->alignment_mean;
      ++align_n;
    }
    if (s.best_seed < 0 || c->bounds.efficiency < s.eta_min) {
      s.eta_min = c->bounds.efficiency;
      s.best_seed = c->seed;
      s.best_alignment = c->alignment_mean;
    }
  }
  if (!eta.empty()) {
    std::sort(eta.begin(), eta.end());
    const size_t m = eta.size();
    s.eta_median = (m % 2) ? eta[m / 2] : 0.5 * (eta[m / 2 - 1] + eta[m / 2]);
    double mean = 0.0;
    for (double e : eta) mean += e;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double e : eta) var += (e - mean) * (e - mean);
    s.eta_dispersion = std::sqrt(var / static_cast<double>(m));
    s.eta_range = eta.back() - eta.front();
  }
  if (align_n) s.alignment_mean = align / align_n;
  return s;
}

/// Shooting plus surface relaxation on every (alpha, seed) cell.
inline SweepResult alpha_sweep(const GaugeModel& model, const SweepConfig& cfg, bool keep_geometry = false) {
  const std::vector<double> alphas = cfg.alphas.empty() ? default_alphas() : cfg.alphas;
  if (!(cfg.flux > 0.0)) throw std::invalid_argument("alpha_sweep: flux must be positive");
  SweepResult res;
  res.cells.resize(alphas.size() * static_cast<size_t>(cfg.seeds));
  parallel_for(res.cells.size(), cfg.jobs, [&](size_t k) {
    const size_t a = k / static_cast<size_t>(cfg.seeds);
    const int s = static_cast<int>(k % static_cast<size_t>(cfg.seeds));
    res.cells[k] = sweep_cell(model, cfg, alphas[a], s, keep_geometry);
  });
  for (size_t a = 0; a < alphas.size(); ++a) {
    std::vector<const SweepCell*> cells;
    for (int s = 0; s < cfg.seeds; ++s) cells.push_back(&res.cells[a * static_cast<size_t>(cfg.seeds) + static_cast<size_t>(s)]);
    res.summary.push_back(summarize_cells(alphas[a], cells));
  }
  return res;
}

}  // namespace qgl
