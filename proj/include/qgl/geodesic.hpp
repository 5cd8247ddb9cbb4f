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

#include <cmath>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/gauge.hpp"
#include "qgl/holonomy.hpp"

namespace qgl {

/// Driven geodesic of the curvature-weighted metric g' = ||F||_HS g:
///
///   lambda''^mu = -Gamma^mu_ab[g'] v^a v^b + D^{mu nu} v_nu,
///   D^{mu nu} = <K(t), F^{mu nu}> / ||F||_HS,
///
/// with indices of F raised and v lowered by g'. K is stored Hermitian, which
/// makes <K, F> = Tr(K F)/N real; the force is g'-orthogonal to v, so the
/// g'-speed is a constant of motion.
struct GeodesicTerms {
  RVector christoffel;  ///< Gamma^mu_ab[g'] v^a v^b
  RVector force;        ///< D^{mu nu} v_nu
  double force_imag = 0.0;  ///< largest |Im <K, F_ab>| seen (0 for Hermitian input)
};

struct GeodesicOptions {
  DifferenceOptions differences{};
};

namespace detail {

/// d_kappa ln ||F||_HS, zero for models with constant norm.
inline RVector log_curvature_norm_gradient(const GaugeModel& model, const ControlPoint& x,
                                           const DifferenceOptions& opt) {
  RVector grad = RVector::Zero(model.d);
  if (model.constant_curvature_norm) return grad;
  for (Eigen::Index k = 0; k < model.d; ++k) {
    ControlPoint xp = x, xm = x;
    xp(k) += opt.step;
    xm(k) -= opt.step;
    grad(k) = (std::log(hs_curvature_norm(model, xp)) - std::log(hs_curvature_norm(model, xm))) / (2 * opt.step);
  }
  return grad;
}

}  // namespace detail

inline GeodesicTerms geodesic_terms(const GaugeModel& model, const ControlPoint& x, const RVector& v,
                                    const CMatrix& k_t, const GeodesicOptions& opt = {}) {
  const Eigen::Index d = model.d;
  const RMatrix g = fs_metric(model, x);
  const RMatrix ginv = inverse_metric(g, x);
  const auto dg = metric_jacobian(model, x, opt.differences);

  // Gamma[g]^mu v v = g^{mu k} (d_a g_kb v^a v^b - 1/2 d_k g_ab v^a v^b)
  RVector lowered = RVector::Zero(d);
  RVector dv(d);  // (d_a g) v summed over a, applied to v
  RMatrix dg_v = RMatrix::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) dg_v += v(a) * dg[static_cast<size_t>(a)];
  lowered = dg_v * v;
  for (Eigen::Index k = 0; k < d; ++k) dv(k) = v.dot(dg[static_cast<size_t>(k)] * v);
  lowered -= 0.5 * dv;
  GeodesicTerms out;
  out.christoffel = ginv * lowered;

  double fnorm;
  if (model.constant_curvature_norm) {
    fnorm = *model.constant_curvature_norm;
  } else {
    fnorm = hs_curvature_norm(model, x);
    // conformal part of Gamma[f g]: v^mu (v . dlnf) - 1/2 |v|_g^2 g^{mu k} d_k lnf
    const RVector dphi = detail::log_curvature_norm_gradient(model, x, opt.differences);
    out.christoffel += v * v.dot(dphi) - 0.5 * v.dot(g * v) * (ginv * dphi);
  }

  const Curvature f = curvature(model, x, opt.differences);
  RMatrix p = RMatrix::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a + 1; b < d; ++b) {
      const cplx w = (k_t * f.upper(a, b)).trace() / static_cast<double>(model.n);
      out.force_imag = std::max(out.force_imag, std::abs(w.imag()));
      p(a, b) = w.real();
      p(b, a) = -w.real();
    }
  out.force = ginv * (p * v) / (fnorm * fnorm);
  return out;
}

inline RVector driven_geodesic_rhs(const GaugeModel& model, const ControlPoint& x, const RVector& v,
                                   const AlgebraElement& k_t, const GeodesicOptions& opt = {}) {
  const GeodesicTerms t = geodesic_terms(model, x, v, k_t.matrix(), opt);
  return t.force - t.christoffel;
}

/// g'_{mu nu} v^mu v^nu
inline double weighted_speed_squared(const GaugeModel& model, const ControlPoint& x, const RVector& v) {
  return hs_curvature_norm(model, x) * v.dot(fs_metric(model, x) * v);
}

struct Trajectory {
  Contour contour;                  ///< (t_k, lambda(t_k))
  std::vector<RVector> velocities;  ///< lambda'(t_k)
  std::vector<CMatrix> wilson;      ///< running U(t_k)
  UnitaryGate final_gate;           ///< U(T), re-unitarised
  double weighted_speed_drift = 0.0;  ///< max relative drift of g'(v, v)
  double fs_length = 0.0;             ///< \int sqrt(g(v, v)) dt (Simpson)
};

struct IntegrationOptions {
  bool record = true;  ///< keep per-step samples (off inside shooting loops)
  GeodesicOptions geodesic{};
  /// The step count is doubled, at most max_refinements times, until the
  /// g'-speed drift falls below speed_tol.
  double speed_tol = 1e-7;
  int max_refinements = 6;
};

namespace detail {

inline Trajectory integrate_fixed(const GaugeModel& model, const ControlPoint& x0, const RVector& v0,
                                  const AlgebraElement& k0, double duration, int n_steps,
                                  const IntegrationOptions& opt) {
  const double h = duration / n_steps;

  struct State {
    RVector x, v;
    CMatrix u;
  };
  auto rhs = [&](const State& s) {
    const CMatrix kt = s.u.adjoint() * k0.matrix() * s.u;
    const GeodesicTerms terms = geodesic_terms(model, s.x, s.v, kt, opt.geodesic);
    State ds;
    ds.x = s.v;
    ds.v = terms.force - terms.christoffel;
    ds.u = I_unit * detail::contract_connection(connection_at(model, s.x), s.v) * s.u;
    return ds;
  };
  auto axpy = [](const State& s, double a, const State& ds) {
    return State{s.x + a * ds.x, s.v + a * ds.v, s.u + a * ds.u};
  };

  Trajectory tr;
  State s{x0, v0, CMatrix::Identity(model.n, model.n)};
  auto speed2 = [&](const State& st) { return weighted_speed_squared(model, st.x, st.v); };
  auto fs_speed = [&](const State& st) { return std::sqrt(std::max(0.0, st.v.dot(fs_metric(model, st.x) * st.v))); };
  const double s0 = speed2(s);
  std::vector<double> speeds{fs_speed(s)};
  if (opt.record) {
    tr.contour.t.push_back(0.0);
    tr.contour.points.push_back(s.x);
    tr.velocities.push_back(s.v);
    tr.wilson.push_back(s.u);
  }
  double drift = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const State k1 = rhs(s);
    const State k2 = rhs(axpy(s, 0.5 * h, k1));
    const State k3 = rhs(axpy(s, 0.5 * h, k2));
    const State k4 = rhs(axpy(s, h, k3));
    s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    // projecting back onto U(N) keeps K(t) an exact conjugate of K0
    s.u = reunitarize(s.u + (h / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u));
    if (!s.x.allFinite() || !s.v.allFinite())
      throw SingularMetricError("trajectory diverged", s.x);
    drift = std::max(drift, std::abs(speed2(s) - s0) / std::max(s0, 1e-300));
    speeds.push_back(fs_speed(s));
    if (opt.record) {
      tr.contour.t.push_back(h * (k + 1));
      tr.contour.points.push_back(s.x);
      tr.velocities.push_back(s.v);
      tr.wilson.push_back(s.u);
    }
  }
  tr.final_gate = UnitaryGate(reunitarize(s.u));
  if (opt.record) {
    tr.wilson.back() = tr.final_gate.matrix();
  } else {
    tr.contour.t = {0.0, duration};
    tr.contour.points = {x0, s.x};
    tr.velocities = {v0, s.v};
  }
  tr.weighted_speed_drift = drift;
  // composite Simpson (trapezoid on the odd tail)
  double len = 0.0;
  const int m = n_steps - (n_steps % 2);
  for (int k = 0; k + 2 <= m; k += 2)
    len += h / 3.0 * (speeds[static_cast<size_t>(k)] + 4.0 * speeds[static_cast<size_t>(k + 1)] + speeds[static_cast<size_t>(k + 2)]);
  if (m < n_steps) len += 0.5 * h * (speeds[static_cast<size_t>(m)] + speeds[static_cast<size_t>(n_steps)]);
  tr.fs_length = len;
  return tr;
}

}  // namespace detail

/// Co-integrates lambda, lambda' and U(t) with classical RK4 on the joint
/// state; dU/dt = i A(lambda) . lambda' U and K(t) = U^{-1} K0 U at each stage.
/// U is projected onto the unitary group after every step.
inline Trajectory integrate_trajectory(const GaugeModel& model, const ControlPoint& x0, const RVector& v0,
                                       const AlgebraElement& k0, double duration, int n_steps,
                                       const IntegrationOptions& opt = {}) {
  if (n_steps < 1) throw std::invalid_argument("integrate_trajectory: n_steps must be positive");
  if (!(duration > 0.0)) throw std::invalid_argument("integrate_trajectory: duration must be positive");
  if (x0.size() != model.d || v0.size() != model.d) throw DimensionError("integrate_trajectory: bad state size");
  Trajectory tr = detail::integrate_fixed(model, x0, v0, k0, duration, n_steps, opt);
  for (int r = 0; r < opt.max_refinements && !(tr.weighted_speed_drift < opt.speed_tol); ++r) {
    n_steps *= 2;
    tr = detail::integrate_fixed(model, x0, v0, k0, duration, n_steps, opt);
  }
  return tr;
}

/// FS length \int sqrt(g(v, v)) dt of a recorded contour, from finite
/// differences of the stored points (trapezoid on the chord lengths).
inline double contour_fs_length(const GaugeModel& model, const Contour& c) {
  double len = 0.0;
  for (size_t k = 1; k < c.size(); ++k) {
    const ControlPoint mid = 0.5 * (c.points[k] + c.points[k - 1]);
    const RVector dl = c.points[k] - c.points[k - 1];
    len += std::sqrt(std::max(0.0, dl.dot(fs_metric(model, mid) * dl)));
  }
  return len;
}

}  // namespace qgl
