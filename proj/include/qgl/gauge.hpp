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

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qgl/algebra.hpp"

namespace qgl {

/// A point lambda in the d-dimensional control manifold. Angular
/// coordinates are never wrapped.
using ControlPoint = RVector;

class SingularMetricError : public std::runtime_error {
 public:
  SingularMetricError(const std::string& what, ControlPoint where)
      : std::runtime_error(what + " at " + format(where)), where_(std::move(where)) {}
  const ControlPoint& where() const { return where_; }

  static std::string format(const ControlPoint& p) {
    std::ostringstream os;
    os.precision(10);
    os << "(";
    for (Eigen::Index k = 0; k < p.size(); ++k) os << (k ? ", " : "") << p(k);
    os << ")";
    return os.str();
  }

 private:
  ControlPoint where_;
};

/// Curvature F_{mu nu}: a d x d antisymmetric array of Hermitian N x N
/// matrices. Only mu < nu is stored; the lower triangle is derived, so
/// F_{mu nu} = -F_{nu mu} holds exactly.
class Curvature {
 public:
  Curvature(Eigen::Index d, Eigen::Index n) : d_(d), n_(n), upper_(static_cast<size_t>(d * (d - 1) / 2), CMatrix::Zero(n, n)) {}

  Eigen::Index d() const { return d_; }
  Eigen::Index n() const { return n_; }

  CMatrix operator()(Eigen::Index mu, Eigen::Index nu) const {
    if (mu == nu) return CMatrix::Zero(n_, n_);
    if (mu < nu) return upper_[index(mu, nu)];
    return -upper_[index(nu, mu)];
  }
  /// mutable access for mu < nu
  CMatrix& upper(Eigen::Index mu, Eigen::Index nu) { return upper_[index(mu, nu)]; }
  const CMatrix& upper(Eigen::Index mu, Eigen::Index nu) const { return upper_[index(mu, nu)]; }

  /// F_{mu nu} a^mu b^nu
  CMatrix contract(const RVector& a, const RVector& b) const {
    CMatrix out = CMatrix::Zero(n_, n_);
    for (Eigen::Index mu = 0; mu < d_; ++mu)
      for (Eigen::Index nu = mu + 1; nu < d_; ++nu) {
        const double w = a(mu) * b(nu) - a(nu) * b(mu);
        if (w != 0.0) out += w * upper_[index(mu, nu)];
      }
    return out;
  }

 private:
  size_t index(Eigen::Index mu, Eigen::Index nu) const {
    // row-major packing of the strict upper triangle
    return static_cast<size_t>(mu * d_ - mu * (mu + 1) / 2 + (nu - mu - 1));
  }

  Eigen::Index d_;
  Eigen::Index n_;
  std::vector<CMatrix> upper_;
};

/// Pluggable gauge model. Only `connection` is mandatory; the remaining
/// callbacks are analytic fast paths or data needed for the metric.
struct GaugeModel {
  std::string name;
  Eigen::Index n = 1;  ///< dimension of the degenerate subspace
  Eigen::Index d = 1;  ///< dimension of the control manifold

  /// A_mu(lambda), Hermitian, one per coordinate
  std::function<std::vector<CMatrix>(const ControlPoint&)> connection;
  /// [kappa][mu] = d_kappa A_mu (optional, otherwise central differences)
  std::function<std::vector<std::vector<CMatrix>>(const ControlPoint&)> connection_jacobian;
  /// closed-form F_{mu nu} (optional, otherwise built from the connection)
  std::function<Curvature(const ControlPoint&)> curvature;
  /// ambient-space frame, one column per dark state (optional)
  std::function<CMatrix(const ControlPoint&)> dark_frame;
  /// g_{mu nu}(lambda) (optional if dark_frame is supplied)
  std::function<RMatrix(const ControlPoint&)> metric;
  /// [kappa] = d_kappa g (optional)
  std::function<std::vector<RMatrix>(const ControlPoint&)> metric_jacobian;
  /// set when ||F||_HS is known to be constant
  std::optional<double> constant_curvature_norm;
  /// coordinate periods for closure checks (0 = not periodic); empty = none
  std::vector<double> periods;
  /// coordinate labels for tabular output; empty = x1..xd
  std::vector<std::string> coordinates;
};

struct DifferenceOptions {
  double step = 1e-5;
  bool richardson = false;
};

namespace detail {

template <class F>
auto central_difference(const F& f, const ControlPoint& x, Eigen::Index k, const DifferenceOptions& opt) {
  auto diff = [&](double h) {
    ControlPoint xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    return decltype(f(x))((f(xp) - f(xm)) / (2.0 * h));
  };
  if (!opt.richardson) return diff(opt.step);
  const auto coarse = diff(2.0 * opt.step);
  const auto fine = diff(opt.step);
  return decltype(f(x))((4.0 * fine - coarse) / 3.0);
}

inline double det_guard(const RMatrix& g) { return g.determinant(); }

}  // namespace detail

inline std::vector<CMatrix> connection_at(const GaugeModel& model, const ControlPoint& x) {
  if (x.size() != model.d)
    throw DimensionError("control point has dimension " + std::to_string(x.size()) + ", model " +
                         model.name + " expects " + std::to_string(model.d));
  return model.connection(x);
}

/// d_kappa A_mu, analytic when available.
inline std::vector<std::vector<CMatrix>> connection_jacobian(const GaugeModel& model, const ControlPoint& x,
                                                             const DifferenceOptions& opt = {}) {
  if (model.connection_jacobian) return model.connection_jacobian(x);
  std::vector<std::vector<CMatrix>> out(static_cast<size_t>(model.d));
  for (Eigen::Index k = 0; k < model.d; ++k) {
    auto component = [&](Eigen::Index mu) {
      return [&, mu](const ControlPoint& p) -> CMatrix { return model.connection(p)[static_cast<size_t>(mu)]; };
    };
    for (Eigen::Index mu = 0; mu < model.d; ++mu)
      out[static_cast<size_t>(k)].push_back(detail::central_difference(component(mu), x, k, opt));
  }
  return out;
}

/// Field strength F_{mu nu} = d_mu A_nu - d_nu A_mu - i [A_mu, A_nu].
/// The sign of the commutator is the one for which the holonomy of a small
/// coordinate square of side h (traversed +mu, +nu, -mu, -nu) equals
/// exp(i h^2 F_{mu nu}) + O(h^3) with later segments multiplied on the left.
/// This version always builds F from A and dA, ignoring any closed form.
inline Curvature curvature_from_connection(const GaugeModel& model, const ControlPoint& x,
                                           const DifferenceOptions& opt = {}) {
  const auto a = connection_at(model, x);
  const auto da = connection_jacobian(model, x, opt);
  Curvature f(model.d, model.n);
  for (Eigen::Index mu = 0; mu < model.d; ++mu)
    for (Eigen::Index nu = mu + 1; nu < model.d; ++nu) {
      const auto m = static_cast<size_t>(mu), n = static_cast<size_t>(nu);
      f.upper(mu, nu) = da[m][n] - da[n][m] - I_unit * commutator(a[m], a[n]);
    }
  return f;
}

inline Curvature curvature(const GaugeModel& model, const ControlPoint& x, const DifferenceOptions& opt = {}) {
  if (model.curvature) return model.curvature(x);
  return curvature_from_connection(model, x, opt);
}

/// Projector onto the span of the dark frame.
inline CMatrix frame_projector(const CMatrix& frame) { return frame * frame.adjoint(); }

/// Fubini-Study metric g = 1/2 Tr(dP dP) by central differences of the
/// projector (the frame phase cancels).
inline RMatrix fs_metric_from_frame(const GaugeModel& model, const ControlPoint& x, const DifferenceOptions& opt = {}) {
  if (!model.dark_frame) throw std::logic_error("model " + model.name + " has no dark frame");
  std::vector<CMatrix> dp;
  for (Eigen::Index k = 0; k < model.d; ++k)
    dp.push_back(detail::central_difference(
        [&](const ControlPoint& p) -> CMatrix { return frame_projector(model.dark_frame(p)); }, x, k, opt));
  RMatrix g(model.d, model.d);
  for (Eigen::Index a = 0; a < model.d; ++a)
    for (Eigen::Index b = a; b < model.d; ++b)
      g(a, b) = g(b, a) = 0.5 * (dp[static_cast<size_t>(a)] * dp[static_cast<size_t>(b)]).trace().real();
  return g;
}

/// Wilczek-Zee connection A_mu = i <D_a | d_mu D_b> rebuilt from the frame.
inline std::vector<CMatrix> connection_from_frame(const GaugeModel& model, const ControlPoint& x,
                                                  const DifferenceOptions& opt = {}) {
  if (!model.dark_frame) throw std::logic_error("model " + model.name + " has no dark frame");
  const CMatrix frame = model.dark_frame(x);
  std::vector<CMatrix> out;
  for (Eigen::Index k = 0; k < model.d; ++k) {
    const CMatrix dframe = detail::central_difference(
        [&](const ControlPoint& p) -> CMatrix { return model.dark_frame(p); }, x, k, opt);
    out.push_back(I_unit * frame.adjoint() * dframe);
  }
  return out;
}

inline RMatrix fs_metric(const GaugeModel& model, const ControlPoint& x) {
  if (model.metric) return model.metric(x);
  return fs_metric_from_frame(model, x);
}

inline std::vector<RMatrix> metric_jacobian(const GaugeModel& model, const ControlPoint& x,
                                            const DifferenceOptions& opt = {}) {
  if (model.metric_jacobian) return model.metric_jacobian(x);
  DifferenceOptions o = opt;
  // nested differences when the metric itself comes from the frame
  if (!model.metric) o.step = std::max(o.step, 1e-4);
  std::vector<RMatrix> out;
  for (Eigen::Index k = 0; k < model.d; ++k)
    out.push_back(detail::central_difference([&](const ControlPoint& p) -> RMatrix { return fs_metric(model, p); },
                                             x, k, o));
  return out;
}

inline constexpr double singular_metric_det = 1e-14;

inline RMatrix inverse_metric(const RMatrix& g, const ControlPoint& where) {
  const double det = g.determinant();
  const double scale = std::pow(std::max(g.cwiseAbs().maxCoeff(), 1e-300), static_cast<double>(g.rows()));
  if (!(std::abs(det) > singular_metric_det * scale)) throw SingularMetricError("singular metric", where);
  return g.inverse();
}

/// ||F||_HS^2 = 1/2 <F_{mu nu}, F^{mu nu}> with indices raised by the given
/// inverse metric. Returns the complex sum so callers can check realness.
inline cplx curvature_norm_squared(const Curvature& f, const RMatrix& ginv) {
  cplx acc = 0.0;
  const Eigen::Index d = f.d();
  for (Eigen::Index mu = 0; mu < d; ++mu)
    for (Eigen::Index nu = mu + 1; nu < d; ++nu)
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = a + 1; b < d; ++b) {
          const double w = ginv(mu, a) * ginv(nu, b) - ginv(mu, b) * ginv(nu, a);
          if (w != 0.0) acc += w * hs_inner(f.upper(mu, nu), f.upper(a, b));
        }
  return acc;
}

inline double hs_curvature_norm(const GaugeModel& model, const ControlPoint& x) {
  if (model.constant_curvature_norm) return *model.constant_curvature_norm;
  const RMatrix ginv = inverse_metric(fs_metric(model, x), x);
  const cplx n2 = curvature_norm_squared(curvature(model, x), ginv);
  if (std::abs(n2.imag()) > 1e-8 * std::max(1.0, std::abs(n2.real())))
    throw std::logic_error("curvature norm has an imaginary part; connection is not Hermitian");
  return std::sqrt(std::max(0.0, n2.real()));
}

/// Same as hs_curvature_norm but always evaluated from the curvature, even
/// when the model advertises a constant value.
inline double hs_curvature_norm_evaluated(const GaugeModel& model, const ControlPoint& x) {
  GaugeModel m = model;
  m.constant_curvature_norm.reset();
  return hs_curvature_norm(m, x);
}

/// Operator norm of F viewed as a map from bivectors (metric inner product
/// <B,B'> = 1/2 B_{mu nu} B'^{mu nu}) into the Lie algebra (HS norm).
inline double operator_curvature_norm(const GaugeModel& model, const ControlPoint& x) {
  const Eigen::Index d = model.d;
  const RMatrix g = fs_metric(model, x);
  inverse_metric(g, x);  // singularity check
  const Curvature f = curvature(model, x);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index mu = 0; mu < d; ++mu)
    for (Eigen::Index nu = mu + 1; nu < d; ++nu) pairs.emplace_back(mu, nu);
  const auto p = static_cast<Eigen::Index>(pairs.size());
  if (p == 0) return 0.0;
  // Gram matrix of the coordinate bivectors e_{mu nu}
  RMatrix gram(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c) {
      const auto [m, n] = pairs[static_cast<size_t>(r)];
      const auto [a, b] = pairs[static_cast<size_t>(c)];
      gram(r, c) = g(m, a) * g(n, b) - g(m, b) * g(n, a);
    }
  // image of each basis bivector in an orthonormal real basis of Hermitian matrices
  std::vector<CMatrix> herm_basis = su_basis(model.n);
  herm_basis.insert(herm_basis.begin(), CMatrix::Identity(model.n, model.n));
  RMatrix image(static_cast<Eigen::Index>(herm_basis.size()), p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const auto [m, n] = pairs[static_cast<size_t>(c)];
    for (size_t k = 0; k < herm_basis.size(); ++k)
      image(static_cast<Eigen::Index>(k), c) = hs_inner(herm_basis[k], f.upper(m, n)).real();
  }
  Eigen::LLT<RMatrix> llt(gram);
  if (llt.info() != Eigen::Success) throw SingularMetricError("bivector Gram matrix not positive definite", x);
  // sigma_max(image L^{-T})
  const RMatrix whitened = llt.matrixL().solve(image.transpose()).transpose();
  Eigen::JacobiSVD<RMatrix> svd(whitened);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Built-in models

/// Dark states of the tripod in the ambient basis |1>,|2>,|3>,|e>; chi is the
/// trivial U(1) gauge angle.
inline CMatrix tripod_dark_frame(const ControlPoint& x, double chi = 0.0) {
  const double th = x(0), ph = x(1), vp = x(2);
  const cplx em = std::exp(-0.5 * I_unit * vp), ep = std::exp(0.5 * I_unit * vp);
  CMatrix frame = CMatrix::Zero(4, 2);
  frame(0, 0) = std::sin(ph) * em;
  frame(1, 0) = -std::cos(ph) * ep;
  frame(0, 1) = std::cos(th) * std::cos(ph) * em;
  frame(1, 1) = std::cos(th) * std::sin(ph) * ep;
  frame(2, 1) = -std::sin(th);
  return std::exp(0.5 * I_unit * chi) * frame;
}

/// (A_theta, A_phi, A_varphi) of the tripod dark subspace, SU(2) part.
inline std::vector<CMatrix> tripod_connection(const ControlPoint& x) {
  const double th = x(0), ph = x(1);
  const double c = std::cos(th);
  return {CMatrix::Zero(2, 2), c * pauli::y(),
          0.5 * std::sin(2 * ph) * c * pauli::x() - 0.25 * std::cos(2 * ph) * (1 + c * c) * pauli::z()};
}

inline std::vector<std::vector<CMatrix>> tripod_connection_jacobian(const ControlPoint& x) {
  const double th = x(0), ph = x(1);
  const double c = std::cos(th), s = std::sin(th), s2 = std::sin(2 * ph), c2 = std::cos(2 * ph);
  const CMatrix zero = CMatrix::Zero(2, 2);
  return {
      {zero, -s * pauli::y(), -0.5 * s2 * s * pauli::x() + 0.5 * c2 * c * s * pauli::z()},
      {zero, zero, c2 * c * pauli::x() + 0.5 * s2 * (1 + c * c) * pauli::z()},
      {zero, zero, zero},
  };
}

/// Closed-form FS metric of the tripod: diag(1, sin^2 t, sin^2 t (1 - sin^2 t cos^2 2p) / 4).
inline RMatrix tripod_metric(const ControlPoint& x) {
  const double s = std::sin(x(0)), c2 = std::cos(2 * x(1));
  RMatrix g = RMatrix::Zero(3, 3);
  g(0, 0) = 1.0;
  g(1, 1) = s * s;
  g(2, 2) = 0.25 * s * s * (1.0 - s * s * c2 * c2);
  return g;
}

inline std::vector<RMatrix> tripod_metric_jacobian(const ControlPoint& x) {
  const double s = std::sin(x(0)), c = std::cos(x(0));
  const double c2 = std::cos(2 * x(1)), s2 = std::sin(2 * x(1));
  std::vector<RMatrix> out(3, RMatrix::Zero(3, 3));
  out[0](1, 1) = 2 * s * c;
  out[0](2, 2) = 0.5 * s * c * (1.0 - 2.0 * s * s * c2 * c2);
  out[1](2, 2) = std::pow(s, 4) * c2 * s2;
  return out;
}

inline Curvature tripod_curvature(const ControlPoint& x) {
  const double s = std::sin(x(0)), c = std::cos(x(0));
  const double s2 = std::sin(2 * x(1)), c2 = std::cos(2 * x(1));
  Curvature f(3, 2);
  f.upper(0, 1) = -s * pauli::y();
  f.upper(0, 2) = -0.5 * s2 * s * pauli::x() + 0.5 * c2 * c * s * pauli::z();
  f.upper(1, 2) = 0.5 * c * c2 * s * s * pauli::x() + 0.5 * s2 * s * s * pauli::z();
  return f;
}

inline GaugeModel tripod_model(double chi = 0.0) {
  GaugeModel m;
  m.name = "tripod";
  m.n = 2;
  m.d = 3;
  m.connection = tripod_connection;
  m.connection_jacobian = tripod_connection_jacobian;
  m.curvature = tripod_curvature;
  m.dark_frame = [chi](const ControlPoint& x) { return tripod_dark_frame(x, chi); };
  m.metric = tripod_metric;
  m.metric_jacobian = tripod_metric_jacobian;
  m.constant_curvature_norm = std::sqrt(3.0);
  m.periods = {2 * pi, 2 * pi, 4 * pi};
  m.coordinates = {"theta", "phi", "varphi"};
  return m;
}

/// Spin-1/2 aligned with B(theta, phi); Abelian (N = 1), d = 2.
inline CMatrix spin_half_frame(const ControlPoint& x) {
  CMatrix f(2, 1);
  f(0, 0) = std::cos(0.5 * x(0));
  f(1, 0) = std::exp(I_unit * x(1)) * std::sin(0.5 * x(0));
  return f;
}

inline GaugeModel spin_half_model() {
  GaugeModel m;
  m.name = "spin_half";
  m.n = 1;
  m.d = 2;
  m.connection = [](const ControlPoint& x) {
    const double s = std::sin(0.5 * x(0));
    return std::vector<CMatrix>{CMatrix::Zero(1, 1), CMatrix::Constant(1, 1, -s * s)};
  };
  m.connection_jacobian = [](const ControlPoint& x) {
    return std::vector<std::vector<CMatrix>>{
        {CMatrix::Zero(1, 1), CMatrix::Constant(1, 1, -0.5 * std::sin(x(0)))},
        {CMatrix::Zero(1, 1), CMatrix::Zero(1, 1)}};
  };
  m.dark_frame = spin_half_frame;
  m.metric = [](const ControlPoint& x) {
    RMatrix g = RMatrix::Zero(2, 2);
    g(0, 0) = 0.25;
    g(1, 1) = 0.25 * std::sin(x(0)) * std::sin(x(0));
    return g;
  };
  m.metric_jacobian = [](const ControlPoint& x) {
    std::vector<RMatrix> out(2, RMatrix::Zero(2, 2));
    out[0](1, 1) = 0.25 * std::sin(2 * x(0));
    return out;
  };
  m.constant_curvature_norm = 2.0;
  m.periods = {2 * pi, 2 * pi};
  m.coordinates = {"theta", "phi"};
  return m;
}

/// Euclidean R^3 with the Abelian connection A = (-y/2, x/2, 0); F_xy = 1 and
/// ||F||_HS = 1 everywhere, so the flux functional equals the area.
inline GaugeModel flat_toy_model() {
  GaugeModel m;
  m.name = "flat";
  m.n = 1;
  m.d = 3;
  m.connection = [](const ControlPoint& x) {
    return std::vector<CMatrix>{CMatrix::Constant(1, 1, -0.5 * x(1)), CMatrix::Constant(1, 1, 0.5 * x(0)),
                                CMatrix::Zero(1, 1)};
  };
  m.connection_jacobian = [](const ControlPoint&) {
    const CMatrix z = CMatrix::Zero(1, 1);
    return std::vector<std::vector<CMatrix>>{
        {z, CMatrix::Constant(1, 1, 0.5), z}, {CMatrix::Constant(1, 1, -0.5), z, z}, {z, z, z}};
  };
  m.metric = [](const ControlPoint&) { return RMatrix(RMatrix::Identity(3, 3)); };
  m.metric_jacobian = [](const ControlPoint&) { return std::vector<RMatrix>(3, RMatrix::Zero(3, 3)); };
  m.constant_curvature_norm = 1.0;
  m.coordinates = {"x", "y", "z"};
  return m;
}

/// Constant commuting connection on flat R^2: zero curvature.
inline GaugeModel zero_curvature_model() {
  GaugeModel m;
  m.name = "zero";
  m.n = 2;
  m.d = 2;
  m.connection = [](const ControlPoint&) {
    return std::vector<CMatrix>{0.3 * pauli::z(), 0.7 * pauli::z()};
  };
  m.metric = [](const ControlPoint&) { return RMatrix(RMatrix::Identity(2, 2)); };
  m.metric_jacobian = [](const ControlPoint&) { return std::vector<RMatrix>(2, RMatrix::Zero(2, 2)); };
  return m;
}

/// Model whose connection and metric are derived from a frame by differences.
inline GaugeModel frame_model(std::string name, Eigen::Index n, Eigen::Index d,
                              std::function<CMatrix(const ControlPoint&)> frame) {
  GaugeModel m;
  m.name = std::move(name);
  m.n = n;
  m.d = d;
  m.dark_frame = std::move(frame);
  auto frame_copy = m.dark_frame;
  m.connection = [n, d, frame_copy](const ControlPoint& x) {
    GaugeModel tmp;
    tmp.n = n;
    tmp.d = d;
    tmp.dark_frame = frame_copy;
    return connection_from_frame(tmp, x);
  };
  return m;
}

}  // namespace qgl
