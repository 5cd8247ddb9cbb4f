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
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/gauge.hpp"

namespace qgl {

class ContourError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double closure_tolerance = 1e-9;

/// Returns the residual of b - a after removing whole coordinate periods.
inline ControlPoint periodic_difference(const ControlPoint& a, const ControlPoint& b,
                                        const std::vector<double>& periods) {
  ControlPoint diff = b - a;
  for (Eigen::Index k = 0; k < diff.size(); ++k) {
    const size_t kk = static_cast<size_t>(k);
    if (kk < periods.size() && periods[kk] > 0.0) diff(k) -= periods[kk] * std::round(diff(k) / periods[kk]);
  }
  return diff;
}

/// Discretised path: strictly increasing times with one control point each.
struct Contour {
  std::vector<double> t;
  std::vector<ControlPoint> points;
  bool closed = false;

  size_t size() const { return points.size(); }
  Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }

  /// Throws ContourError on empty input, non-monotone times, or (closed
  /// contours) an endpoint mismatch above closure_tolerance modulo periods.
  void validate(const std::vector<double>& periods = {}) const {
    if (points.empty()) throw ContourError("contour is empty");
    if (t.size() != points.size()) throw ContourError("contour has mismatched time and point counts");
    for (size_t k = 1; k < t.size(); ++k) {
      if (!(t[k] > t[k - 1]))
        throw ContourError("contour times must be strictly increasing (row " + std::to_string(k) + ")");
      if (points[k].size() != points[0].size())
        throw ContourError("contour row " + std::to_string(k) + " has the wrong dimension");
    }
    if (closed) {
      const double gap = periodic_difference(points.front(), points.back(), periods).cwiseAbs().maxCoeff();
      if (gap > closure_tolerance)
        throw ContourError("closed contour endpoints differ by " + std::to_string(gap));
    }
  }

  Contour reversed() const {
    Contour r;
    r.closed = closed;
    const double t0 = t.front(), t1 = t.back();
    for (size_t k = points.size(); k-- > 0;) {
      r.t.push_back(t0 + t1 - t[k]);
      r.points.push_back(points[k]);
    }
    return r;
  }
};

/// A smooth path given as a function of its parameter; used for refinement.
struct ParametricPath {
  std::function<ControlPoint(double)> at;
  double t_begin = 0.0;
  double t_end = 1.0;
  bool closed = false;

  Contour sample(size_t segments) const {
    Contour c;
    c.closed = closed;
    for (size_t k = 0; k <= segments; ++k) {
      const double s = t_begin + (t_end - t_begin) * static_cast<double>(k) / static_cast<double>(segments);
      c.t.push_back(s);
      c.points.push_back(at(s));
    }
    return c;
  }
};

enum class LineIntegrator {
  midpoint,  ///< exp(i A(mid) . dlambda), second order
  magnus4,   ///< two-point Gauss Magnus step, fourth order along each linear segment
};

struct WilsonLineOptions {
  LineIntegrator integrator = LineIntegrator::midpoint;
  bool reunitarize = true;
  int substeps = 1;  ///< equal sub-segments per contour segment
};

namespace detail {

inline CMatrix contract_connection(const std::vector<CMatrix>& a, const ControlPoint& v) {
  CMatrix out = CMatrix::Zero(a.front().rows(), a.front().cols());
  for (size_t mu = 0; mu < a.size(); ++mu)
    if (v(static_cast<Eigen::Index>(mu)) != 0.0) out += v(static_cast<Eigen::Index>(mu)) * a[mu];
  return out;
}

/// Propagator of one straight coordinate segment from p to q.
inline CMatrix segment_propagator(const GaugeModel& model, const ControlPoint& p, const ControlPoint& q,
                                  LineIntegrator integrator) {
  const ControlPoint dl = q - p;
  if (integrator == LineIntegrator::midpoint) {
    const ControlPoint mid = 0.5 * (p + q);
    return expi(contract_connection(connection_at(model, mid), dl));
  }
  // Omega = (B1 + B2)/2 + sqrt(3)/12 [B2, B1] with B = i A . dl at the Gauss
  // nodes, so exp(Omega) = expi((a1 + a2)/2 - i sqrt(3)/12 [a1, a2]).
  const double c = std::sqrt(3.0) / 6.0;
  const CMatrix a1 = contract_connection(connection_at(model, p + (0.5 - c) * dl), dl);
  const CMatrix a2 = contract_connection(connection_at(model, p + (0.5 + c) * dl), dl);
  const CMatrix herm = 0.5 * (a1 + a2) - I_unit * (std::sqrt(3.0) / 12.0) * commutator(a1, a2);
  return expi(CMatrix(0.5 * (herm + herm.adjoint())));
}

/// Propagator of one contour segment split into `substeps` equal pieces.
inline CMatrix segment_propagator(const GaugeModel& model, const ControlPoint& p, const ControlPoint& q,
                                  const WilsonLineOptions& opt) {
  if (opt.substeps <= 1) return segment_propagator(model, p, q, opt.integrator);
  CMatrix u = CMatrix::Identity(model.n, model.n);
  const ControlPoint dl = (q - p) / static_cast<double>(opt.substeps);
  for (int k = 0; k < opt.substeps; ++k) u = segment_propagator(model, p + k * dl, p + (k + 1) * dl, opt.integrator) * u;
  return u;
}

}  // namespace detail

/// Running Wilson lines U(t_k), k = 0..n-1, with U(t_0) = I. Later segments
/// multiply on the left: U(t_{k+1}) = exp(i A . dlambda) U(t_k).
inline std::vector<CMatrix> wilson_line_running(const GaugeModel& model, const Contour& contour,
                                                const WilsonLineOptions& opt = {}) {
  contour.validate(model.periods);
  std::vector<CMatrix> out;
  out.reserve(contour.size());
  CMatrix u = CMatrix::Identity(model.n, model.n);
  out.push_back(u);
  for (size_t k = 1; k < contour.size(); ++k) {
    u = detail::segment_propagator(model, contour.points[k - 1], contour.points[k], opt) * u;
    out.push_back(u);
  }
  if (opt.reunitarize) out.back() = reunitarize(out.back());
  return out;
}

/// Path-ordered exponential P exp(i \int A_mu dlambda^mu) along the contour.
inline UnitaryGate wilson_line(const GaugeModel& model, const Contour& contour, const WilsonLineOptions& opt = {}) {
  contour.validate(model.periods);
  CMatrix u = CMatrix::Identity(model.n, model.n);
  for (size_t k = 1; k < contour.size(); ++k)
    u = detail::segment_propagator(model, contour.points[k - 1], contour.points[k], opt) * u;
  return UnitaryGate(opt.reunitarize ? reunitarize(u) : u);
}

/// K(t_k) = U(t_k)^{-1} K0 U(t_k) along the contour (Hermitian storage).
inline std::vector<AlgebraElement> transported_generator(const GaugeModel& model, const Contour& contour,
                                                         const AlgebraElement& k0,
                                                         const WilsonLineOptions& opt = {}) {
  if (k0.dim() != model.n) throw DimensionError("transported_generator: K0 has the wrong dimension");
  const auto running = wilson_line_running(model, contour, opt);
  std::vector<AlgebraElement> out;
  out.reserve(running.size());
  for (const auto& u : running) out.emplace_back(CMatrix(u.adjoint() * k0.matrix() * u));
  return out;
}

struct RefinementResult {
  UnitaryGate gate;
  size_t segments = 0;
  int doublings = 0;
  double achieved_order = 0.0;  ///< log2 of successive difference ratios (NaN if < 2 differences)
  std::vector<std::pair<size_t, double>> history;  ///< (segments, ||U_n - U_2n||_HS)
};

struct RefinementOptions {
  size_t initial_segments = 16;
  int max_doublings = 16;
  WilsonLineOptions wilson{};
};

/// Doubles the sampling of `path` until successive Wilson lines agree to
/// `tol` in HS norm; returns the finer result.
inline RefinementResult refine_until_converged(const GaugeModel& model, const ParametricPath& path, double tol,
                                               const RefinementOptions& opt = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("refine_until_converged: tol must be positive");
  RefinementResult res;
  size_t n = std::max<size_t>(opt.initial_segments, 1);
  CMatrix prev = wilson_line(model, path.sample(n), opt.wilson).matrix();
  for (int k = 1; k <= opt.max_doublings; ++k) {
    n *= 2;
    const CMatrix next = wilson_line(model, path.sample(n), opt.wilson).matrix();
    const double diff = hs_norm(CMatrix(next - prev));
    res.history.emplace_back(n, diff);
    prev = next;
    if (diff < tol) {
      res.gate = UnitaryGate(next);
      res.segments = n;
      res.doublings = k;
      const size_t h = res.history.size();
      res.achieved_order = h >= 2 && diff > 0.0
                               ? std::log2(res.history[h - 2].second / diff)
                               : std::numeric_limits<double>::quiet_NaN();
      return res;
    }
  }
  throw ConvergenceError("Wilson line did not converge to " + std::to_string(tol) + " after " +
                         std::to_string(opt.max_doublings) + " doublings");
}

}  // namespace qgl
