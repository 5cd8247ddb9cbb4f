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

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/gauge.hpp"
#include "qgl/holonomy.hpp"
#include "qgl/stokes.hpp"

namespace qgl {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Slack allowed when comparing a holonomy angle with a bound.
inline constexpr double bound_slack = 1e-9;

namespace detail {

/// sqrt(det h) with h_ab = g(d_a lambda, d_b lambda).
inline double area_density(const RMatrix& g, const RVector& a, const RVector& b) {
  const double haa = a.dot(g * a), hbb = b.dot(g * b), hab = a.dot(g * b);
  const double det = haa * hbb - hab * hab;
  const double scale = std::max(haa * hbb, 1e-300);
  if (det < -1e-12 * std::max(scale, 1.0)) throw GeometryError("induced metric has negative determinant");
  return std::sqrt(std::max(det, 0.0));
}

/// \iint w(lambda) sqrt(det h) ds1 ds2, trapezoid on the nodes. Nodes with
/// zero area element never evaluate w (apex rows, collapsed strips).
inline double surface_integral(const GaugeModel& model, const Surface& s,
                               const std::function<double(const ControlPoint&)>& weight) {
  if (s.dim() != model.d) throw DimensionError("surface dimension does not match the model");
  s.validate();
  const double h2 = s.h2();
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.n1; ++i) {
    const size_t ii = static_cast<size_t>(i);
    const double before = (i == 0) ? 1.0 - s.s1[static_cast<size_t>(s.n1 - 1)] : s.s1[ii] - s.s1[ii - 1];
    const double w1 = 0.5 * (before + (s.s1[ii + 1] - s.s1[ii]));
    for (Eigen::Index j = 0; j <= s.n2; ++j) {
      const ControlPoint& x = s.at(i, j);
      const double dens = area_density(fs_metric(model, x), s.d1(i, j), s.d2(i, j));
      if (dens == 0.0) continue;
      const double w2 = (j == 0 || j == s.n2) ? 0.5 * h2 : h2;
      total += w1 * w2 * dens * (weight ? weight(x) : 1.0);
    }
  }
  return total;
}

/// Evaluates a pointwise norm, stepping off isolated metric singularities.
inline double norm_near(const std::function<double(const ControlPoint&)>& f, const ControlPoint& x) {
  try {
    return f(x);
  } catch (const SingularMetricError&) {
    double acc = 0.0;
    int count = 0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
      for (double sgn : {-1.0, 1.0}) {
        ControlPoint y = x;
        y(k) += sgn * 1e-6;
        try {
          acc += f(y);
          ++count;
        } catch (const SingularMetricError&) {
        }
      }
    if (count == 0) throw;
    return acc / count;
  }
}

/// Degree-5 seven-point rule on the reference triangle: (u, v, weight),
/// weights summing to 1.
inline const std::array<std::array<double, 3>, 7>& triangle_rule() {
  static const std::array<std::array<double, 3>, 7> rule = [] {
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    return std::array<std::array<double, 3>, 7>{{{1.0 / 3, 1.0 / 3, 0.225},
                                                 {b1, b1, w1}, {a1, b1, w1}, {b1, a1, w1},
                                                 {b2, b2, w2}, {a2, b2, w2}, {b2, a2, w2}}};
  }();
  return rule;
}

/// \iint w dS over the piecewise-linear surface through the grid nodes:
/// every quad is cut along its (i, j)-(i+1, j+1) diagonal and each flat
/// coordinate triangle is integrated with the metric varying inside it.
inline double piecewise_linear_integral(const GaugeModel& model, const Surface& s,
                                        const std::function<double(const ControlPoint&)>& weight) {
  if (s.dim() != model.d) throw DimensionError("surface dimension does not match the model");
  s.validate();
  double total = 0.0;
  auto triangle = [&](const ControlPoint& a, const ControlPoint& b, const ControlPoint& c) {
    const RVector e1 = b - a, e2 = c - a;
    if (e1.cwiseAbs().maxCoeff() == 0.0 || e2.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& q : triangle_rule()) {
      const ControlPoint x = a + q[0] * e1 + q[1] * e2;
      const double dens = area_density(fs_metric(model, x), e1, e2);
      if (dens == 0.0) continue;
      acc += q[2] * dens * (weight ? weight(x) : 1.0);
    }
    return 0.5 * acc;
  };
  for (Eigen::Index i = 0; i < s.n1; ++i)
    for (Eigen::Index j = 0; j < s.n2; ++j) {
      total += triangle(s.at(i, j), s.at(i + 1, j), s.at(i + 1, j + 1));
      total += triangle(s.at(i, j), s.at(i + 1, j + 1), s.at(i, j + 1));
    }
  return total;
}

}  // namespace detail

/// Fubini-Study area of the surface.
inline double fs_area(const GaugeModel& model, const Surface& surface) {
  return detail::surface_integral(model, surface, nullptr);
}

/// The same area on the unit sphere: for a two-level system the FS metric
/// is a quarter of the round metric, so areas differ by a factor 4.
inline double unit_sphere_area(double fs) { return 4.0 * fs; }

/// \iint ||F||_HS dS
inline double hs_qgl_bound(const GaugeModel& model, const Surface& surface) {
  if (model.constant_curvature_norm) return *model.constant_curvature_norm * fs_area(model, surface);
  return detail::surface_integral(model, surface, [&](const ControlPoint& x) {
    return detail::norm_near([&](const ControlPoint& y) { return hs_curvature_norm(model, y); }, x);
  });
}

/// \iint ||F||_op dS
inline double op_qgl_bound(const GaugeModel& model, const Surface& surface) {
  return detail::surface_integral(model, surface, [&](const ControlPoint& x) {
    return detail::norm_near([&](const ControlPoint& y) { return operator_curvature_norm(model, y); }, x);
  });
}

struct MtCheck {
  double lhs = 0.0;  ///< arccos |Tr U / N|
  double rhs = 0.0;  ///< \iint ||F||_HS dS
  bool satisfied = false;
};

inline double mt_angle(const UnitaryGate& u) {
  const double c = std::abs(u.matrix().trace()) / static_cast<double>(u.dim());
  return std::acos(std::min(1.0, c));
}

inline MtCheck mt_qgl_check(const GaugeModel& model, const Surface& surface, const UnitaryGate& u) {
  MtCheck out;
  out.lhs = mt_angle(u);
  out.rhs = hs_qgl_bound(model, surface);
  out.satisfied = out.lhs <= out.rhs + bound_slack;
  return out;
}

inline double efficiency(double area, double flux) {
  if (!(flux > 0.0)) throw std::invalid_argument("efficiency: flux must be positive");
  return area / flux;
}

inline double efficiency(const GaugeModel& model, const Surface& surface, double flux) {
  return efficiency(fs_area(model, surface), flux);
}

struct BoundReport {
  double theta_target = 0.0;  ///< Theta(U) of the boundary holonomy
  double mt_lhs = 0.0;
  double area_fs = 0.0;
  double hs_bound = 0.0;
  double op_bound = 0.0;
  double flux = 0.0;
  double efficiency = 0.0;  ///< area_fs / flux
  bool mt_satisfied = false;
  bool hs_satisfied = false;
  bool op_satisfied = false;

  bool all_satisfied() const { return mt_satisfied && hs_satisfied && op_satisfied; }
};

/// How surface integrals are discretised.
enum class SurfaceQuadrature {
  /// trapezoid on the nodes with finite-difference tangents (smooth
  /// surfaces sampled on a grid)
  grid,
  /// exact integral over the piecewise-linear surface through the nodes,
  /// whose boundary is the contour polygon itself
  piecewise_linear,
};

struct BoundOptions {
  /// flux used for the efficiency; <= 0 means Theta of the boundary holonomy
  double flux = 0.0;
  SurfaceQuadrature quadrature = SurfaceQuadrature::piecewise_linear;
  WilsonLineOptions wilson{LineIntegrator::magnus4, true, 16};
};

inline BoundReport evaluate_bounds(const GaugeModel& model, const Surface& surface, const BoundOptions& opt = {}) {
  BoundReport r;
  const UnitaryGate u = wilson_line(model, surface.boundary(), opt.wilson);
  r.theta_target = gate_magnitude(u);
  r.mt_lhs = mt_angle(u);
  auto hs = [&](const ControlPoint& x) {
    return detail::norm_near([&](const ControlPoint& y) { return hs_curvature_norm(model, y); }, x);
  };
  auto op = [&](const ControlPoint& x) {
    return detail::norm_near([&](const ControlPoint& y) { return operator_curvature_norm(model, y); }, x);
  };
  if (opt.quadrature == SurfaceQuadrature::grid) {
    r.area_fs = fs_area(model, surface);
    r.hs_bound = hs_qgl_bound(model, surface);
    r.op_bound = op_qgl_bound(model, surface);
  } else {
    r.area_fs = detail::piecewise_linear_integral(model, surface, nullptr);
    r.hs_bound = model.constant_curvature_norm ? *model.constant_curvature_norm * r.area_fs
                                               : detail::piecewise_linear_integral(model, surface, hs);
    r.op_bound = detail::piecewise_linear_integral(model, surface, op);
  }
  r.flux = opt.flux > 0.0 ? opt.flux : r.theta_target;
  r.efficiency = r.flux > 0.0 ? r.area_fs / r.flux : 0.0;
  r.mt_satisfied = r.mt_lhs <= r.hs_bound + bound_slack;
  r.hs_satisfied = r.theta_target <= r.hs_bound + bound_slack;
  r.op_satisfied = r.theta_target <= r.op_bound + bound_slack;
  return r;
}

/// Boundary stationarity residual
///
///   ||F||_HS t_mu  vs  Re Tr[K(t) F_{mu nu} lambda'^nu],
///
/// with K(t) = U(t)^{-1} K0 U(t) in Hermitian storage and t the outward unit
/// conormal of the surface at its boundary. Returned as the arc-length RMS
/// of the difference (measured with g^{-1}) over the RMS of ||F||_HS, so a
/// saturating configuration gives 0 and unrelated sides give O(1). The
/// contour must be the surface boundary, node for node.
inline double boundary_stationarity_residual(const GaugeModel& model, const Contour& contour, const Surface& surface,
                                             const AlgebraElement& k0) {
  surface.validate();
  if (contour.size() != static_cast<size_t>(surface.n1 + 1))
    throw std::invalid_argument("boundary_stationarity_residual: contour and surface boundary differ in length");
  for (Eigen::Index i = 0; i <= surface.n1; ++i)
    if ((contour.points[static_cast<size_t>(i)] - surface.at(i, surface.n2)).cwiseAbs().maxCoeff() > closure_tolerance)
      throw std::invalid_argument("boundary_stationarity_residual: contour is not the surface boundary");
  const auto kt = transported_generator(model, contour, k0);
  const double span = contour.t.back() - contour.t.front();
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < surface.n1; ++i) {
    const ControlPoint& x = contour.points[static_cast<size_t>(i)];
    const RMatrix g = fs_metric(model, x);
    const RMatrix ginv = inverse_metric(g, x);
    // s1 follows the contour time linearly
    const RVector vel = surface.d1(i, surface.n2) / span;
    RVector out = surface.d2(i, surface.n2);
    out -= (out.dot(g * vel) / vel.dot(g * vel)) * vel;
    const double on = std::sqrt(out.dot(g * out));
    if (!(on > 0.0)) throw GeometryError("surface has no outward direction at the boundary");
    const RVector t_lower = g * out / on;
    const double fnorm = hs_curvature_norm(model, x);
    const Curvature f = curvature(model, x);
    RVector rhs(model.d);
    for (Eigen::Index mu = 0; mu < model.d; ++mu) {
      CMatrix fv = CMatrix::Zero(model.n, model.n);
      for (Eigen::Index nu = 0; nu < model.d; ++nu) fv += vel(nu) * f(mu, nu);
      rhs(mu) = (kt[static_cast<size_t>(i)].matrix() * fv).trace().real();
    }
    const RVector diff = fnorm * t_lower - rhs;
    const double dl = std::sqrt(vel.dot(g * vel));
    num += dl * diff.dot(ginv * diff);
    den += dl * fnorm * fnorm;
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace qgl
