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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/gauge.hpp"
#include "qgl/holonomy.hpp"

namespace qgl {

class SurfaceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Strip surface lambda(s1, s2) sampled on an (n1+1) x (n2+1) grid. Row
/// s2 = 0 collapses to the apex, row s2 = 1 is the boundary contour and the
/// columns s1 = 0 and s1 = 1 coincide.
struct Surface {
  Eigen::Index n1 = 0, n2 = 0;
  std::vector<double> s1;  ///< n1 + 1 values from 0 to 1, increasing
  std::vector<ControlPoint> nodes;  ///< node (i, j) at i * (n2 + 1) + j
  /// lambda(1, s2) - lambda(0, s2); nonzero only by whole coordinate periods
  RVector wrap_shift;
  /// the s2 = 0 row is a single physical point at a coordinate singularity
  /// (polar parametrisation) rather than one repeated coordinate point
  bool polar_apex = false;

  Surface() = default;
  Surface(Eigen::Index n1_, Eigen::Index n2_, Eigen::Index d)
      : n1(n1_), n2(n2_), s1(static_cast<size_t>(n1_ + 1)),
        nodes(static_cast<size_t>((n1_ + 1) * (n2_ + 1)), ControlPoint::Zero(d)), wrap_shift(RVector::Zero(d)) {
    for (Eigen::Index i = 0; i <= n1; ++i) s1[static_cast<size_t>(i)] = static_cast<double>(i) / static_cast<double>(n1);
  }

  Eigen::Index dim() const { return nodes.empty() ? 0 : nodes.front().size(); }
  double h2() const { return 1.0 / static_cast<double>(n2); }
  double s2(Eigen::Index j) const { return static_cast<double>(j) / static_cast<double>(n2); }

  ControlPoint& at(Eigen::Index i, Eigen::Index j) { return nodes[static_cast<size_t>(i * (n2 + 1) + j)]; }
  const ControlPoint& at(Eigen::Index i, Eigen::Index j) const {
    return nodes[static_cast<size_t>(i * (n2 + 1) + j)];
  }
  const ControlPoint& apex() const { return at(0, 0); }

  Contour boundary() const {
    Contour c;
    c.closed = true;
    for (Eigen::Index i = 0; i <= n1; ++i) {
      c.t.push_back(s1[static_cast<size_t>(i)]);
      c.points.push_back(at(i, n2));
    }
    return c;
  }

  Contour fiber(Eigen::Index i) const {
    Contour c;
    for (Eigen::Index j = 0; j <= n2; ++j) {
      c.t.push_back(s2(j));
      c.points.push_back(at(i, j));
    }
    return c;
  }

  void validate(double tol = closure_tolerance) const {
    if (n1 < 3 || n2 < 2) throw SurfaceError("surface grid needs n1 >= 3 and n2 >= 2");
    if (nodes.size() != static_cast<size_t>((n1 + 1) * (n2 + 1)) || s1.size() != static_cast<size_t>(n1 + 1))
      throw SurfaceError("surface grid has the wrong number of nodes");
    if (s1.front() != 0.0 || std::abs(s1.back() - 1.0) > 1e-14) throw SurfaceError("s1 must run from 0 to 1");
    for (size_t i = 1; i < s1.size(); ++i)
      if (!(s1[i] > s1[i - 1])) throw SurfaceError("s1 must be strictly increasing");
    for (const auto& p : nodes)
      if (p.size() != dim() || !p.allFinite()) throw SurfaceError("surface node has the wrong size or is not finite");
    if (wrap_shift.size() != dim()) throw SurfaceError("wrap shift has the wrong dimension");
    if (!polar_apex)
      for (Eigen::Index i = 1; i <= n1; ++i)
        if ((at(i, 0) - apex()).cwiseAbs().maxCoeff() > tol) throw SurfaceError("s2 = 0 row is not a single apex");
    for (Eigen::Index j = 0; j <= n2; ++j)
      if ((at(n1, j) - at(0, j) - wrap_shift).cwiseAbs().maxCoeff() > tol)
        throw SurfaceError("columns s1 = 0 and s1 = 1 differ at row " + std::to_string(j));
  }

  /// d lambda / d s1 at node (i, j): periodic five-point central difference
  /// on a uniform s1 grid, three-point otherwise.
  RVector d1(Eigen::Index i, Eigen::Index j) const {
    auto node = [&](Eigen::Index k) {  // periodic continuation in s1
      const Eigen::Index q = (k >= 0) ? k / n1 : -((-k + n1 - 1) / n1);
      return RVector(at(k - q * n1, j) + static_cast<double>(q) * wrap_shift);
    };
    auto gap = [&](Eigen::Index k) {  // s1 spacing from node k to k + 1
      const Eigen::Index a = ((k % n1) + n1) % n1;
      return s1[static_cast<size_t>(a + 1)] - s1[static_cast<size_t>(a)];
    };
    const Eigen::Index ii = (i == n1) ? 0 : i;
    const double hm = gap(ii - 1), hp = gap(ii);
    if (std::abs(gap(ii - 2) - hp) < 1e-12 && std::abs(hm - hp) < 1e-12 && std::abs(gap(ii + 1) - hp) < 1e-12)
      return (-node(ii + 2) + 8.0 * node(ii + 1) - 8.0 * node(ii - 1) + node(ii - 2)) / (12.0 * hp);
    return (-hp / (hm * (hm + hp))) * node(ii - 1) + ((hp - hm) / (hm * hp)) * node(ii) +
           (hm / (hp * (hm + hp))) * node(ii + 1);
  }

  /// d lambda / d s2 at node (i, j): five-point central inside, one-sided
  /// second order on the apex and boundary rows.
  RVector d2(Eigen::Index i, Eigen::Index j) const {
    const double h = h2();
    if (j == 0) return (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * h);
    if (j == n2) return (3.0 * at(i, n2) - 4.0 * at(i, n2 - 1) + at(i, n2 - 2)) / (2.0 * h);
    if (j >= 2 && j <= n2 - 2)
      return (-at(i, j + 2) + 8.0 * at(i, j + 1) - 8.0 * at(i, j - 1) + at(i, j - 2)) / (12.0 * h);
    return (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
  }
};

/// Base path for transporting F back to a common point.
enum class TransportConvention {
  /// contour start -> apex along the s1 = 0 fiber, then out along the fiber
  /// through the point; the strip ODE then ends exactly at U(C)
  fiber,
  /// along the boundary to c(s1), then inward along the fiber; kept as a
  /// negative control, it does not reproduce U(C)
  boundary_first,
};

struct StokesOptions {
  TransportConvention convention = TransportConvention::fiber;
  LineIntegrator integrator = LineIntegrator::midpoint;
};

namespace detail {

/// Running fiber transports W_i(j) from the apex, j = 0..n2.
inline std::vector<CMatrix> fiber_transport(const GaugeModel& model, const Surface& s, Eigen::Index i,
                                            LineIntegrator integrator) {
  std::vector<CMatrix> w;
  w.reserve(static_cast<size_t>(s.n2 + 1));
  CMatrix u = CMatrix::Identity(model.n, model.n);
  w.push_back(u);
  for (Eigen::Index j = 1; j <= s.n2; ++j) {
    u = segment_propagator(model, s.at(i, j - 1), s.at(i, j), integrator) * u;
    w.push_back(u);
  }
  return w;
}

/// Maps the apex frame to the transport base of the chosen convention for
/// every node of fiber i: F~ = B W^{-1} F_{s1 s2} W B^{-1}.
class TransportedField {
 public:
  TransportedField(const GaugeModel& model, const Surface& s, const StokesOptions& opt)
      : model_(model), s_(s), opt_(opt) {
    if (s.dim() != model.d) throw DimensionError("surface dimension does not match the model");
    s.validate();
    base_ = fiber_transport(model, s, 0, opt.integrator).back();
    if (opt.convention == TransportConvention::boundary_first) {
      Contour b = s.boundary();
      b.closed = false;
      boundary_ = wilson_line_running(model, b, {opt.integrator, false});
    }
  }

  std::vector<CMatrix> column(Eigen::Index i) const {
    const Eigen::Index n2 = s_.n2;
    std::vector<CMatrix> out(static_cast<size_t>(n2 + 1));
    const auto w = fiber_transport(model_, s_, i, opt_.integrator);
    for (Eigen::Index j = 0; j <= n2; ++j) {
      const RVector a = s_.d1(i, j);
      const RVector b = s_.d2(i, j);
      CMatrix fp;
      if (a.cwiseAbs().maxCoeff() == 0.0 || b.cwiseAbs().maxCoeff() == 0.0)
        fp = CMatrix::Zero(model_.n, model_.n);
      else
        fp = curvature(model_, s_.at(i, j)).contract(a, b);
      const size_t jj = static_cast<size_t>(j);
      CMatrix t;
      if (opt_.convention == TransportConvention::fiber) {
        // W_ij^{-1} takes the point back to the apex, base_ carries it to c(0)
        t = base_ * w[jj].adjoint();
      } else {
        // c(0) -> c(s1) along the boundary, then down the fiber to (i, j)
        const CMatrix down = w[jj] * w.back().adjoint();
        t = (down * boundary_[static_cast<size_t>(i)]).adjoint();
      }
      out[jj] = t * fp * t.adjoint();
      out[jj] = 0.5 * (out[jj] + out[jj].adjoint());
    }
    return out;
  }

 private:
  const GaugeModel& model_;
  const Surface& s_;
  StokesOptions opt_;
  CMatrix base_;
  std::vector<CMatrix> boundary_;
};

}  // namespace detail

/// F~_{s1 s2} at one grid node.
inline AlgebraElement transported_curvature(const GaugeModel& model, const Surface& surface, Eigen::Index i,
                                            Eigen::Index j, const StokesOptions& opt = {}) {
  if (i < 0 || i > surface.n1 || j < 0 || j > surface.n2) throw std::out_of_range("transported_curvature: node");
  detail::TransportedField field(model, surface, opt);
  return AlgebraElement(field.column(i)[static_cast<size_t>(j)]);
}

/// F~ on every node, indexed [i][j].
inline std::vector<std::vector<CMatrix>> transported_curvature_grid(const GaugeModel& model, const Surface& surface,
                                                                    const StokesOptions& opt = {}) {
  detail::TransportedField field(model, surface, opt);
  std::vector<std::vector<CMatrix>> out;
  out.reserve(static_cast<size_t>(surface.n1 + 1));
  for (Eigen::Index i = 0; i < surface.n1; ++i) out.push_back(field.column(i));
  out.push_back(out.front());
  return out;
}

/// K(s1) = \int_0^1 F~_{s1 s2} ds2 on each s1 grid line.
struct StripGenerator {
  std::vector<double> s1;
  std::vector<AlgebraElement> values;
};

inline StripGenerator strip_generator_from_grid(const Surface& surface,
                                                const std::vector<std::vector<CMatrix>>& grid) {
  StripGenerator out;
  out.s1 = surface.s1;
  const double h = surface.h2();
  for (const auto& col : grid) {
    CMatrix k = 0.5 * (col.front() + col.back());
    for (size_t j = 1; j + 1 < col.size(); ++j) k += col[j];
    out.values.emplace_back(CMatrix(h * k));
  }
  return out;
}

inline StripGenerator strip_generator(const GaugeModel& model, const Surface& surface,
                                      const StokesOptions& opt = {}) {
  return strip_generator_from_grid(surface, transported_curvature_grid(model, surface, opt));
}

/// dV/ds1 = -i K(s1) V, V(0) = I; exponential midpoint steps with the
/// average of the end-point generators.
inline UnitaryGate stokes_evolve(const StripGenerator& gen) {
  if (gen.values.size() < 2 || gen.values.size() != gen.s1.size())
    throw std::invalid_argument("stokes_evolve: generator needs at least two samples");
  const Eigen::Index n = gen.values.front().dim();
  CMatrix v = CMatrix::Identity(n, n);
  for (size_t k = 1; k < gen.values.size(); ++k) {
    const double h = gen.s1[k] - gen.s1[k - 1];
    v = expi(CMatrix(-0.5 * h * (gen.values[k - 1].matrix() + gen.values[k].matrix()))) * v;
  }
  return UnitaryGate(reunitarize(v));
}

/// Direction of F~ in the generator space, compared with the dominant one.
struct AlignmentField {
  Eigen::Index n1 = 0, n2 = 0;
  std::vector<double> values;  ///< |v(i,j) . v0| at i * (n2 + 1) + j, NaN where F~ vanishes
  RVector dominant;            ///< principal eigenvector of sum v v^T
  double mean = 0.0;           ///< over non-NaN nodes
  double area_weighted_mean = 0.0;  ///< weighted by ||F~||_HS

  double at(Eigen::Index i, Eigen::Index j) const { return values[static_cast<size_t>(i * (n2 + 1) + j)]; }
};

inline AlignmentField abelianity_field_from_grid(const Surface& surface,
                                                 const std::vector<std::vector<CMatrix>>& grid) {
  const Eigen::Index n = grid.front().front().rows();
  const auto basis = generator_basis(n);
  const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
  AlignmentField out;
  out.n1 = surface.n1;
  out.n2 = surface.n2;
  std::vector<RVector> dirs;
  std::vector<double> weights;
  double fmax = 0.0;
  for (const auto& col : grid)
    for (const auto& f : col) fmax = std::max(fmax, hs_norm(f));
  const double floor = 1e-12 * std::max(fmax, 1e-300);
  RMatrix scatter = RMatrix::Zero(m, m);
  for (Eigen::Index i = 0; i <= surface.n1; ++i)
    for (Eigen::Index j = 0; j <= surface.n2; ++j) {
      const CMatrix& f = grid[static_cast<size_t>(i)][static_cast<size_t>(j)];
      RVector v(m);
      for (Eigen::Index k = 0; k < m; ++k) v(k) = hs_inner(basis[static_cast<size_t>(k)], f).real();
      const double w = v.norm();
      if (w <= floor) {
        dirs.emplace_back();
        weights.push_back(0.0);
        continue;
      }
      v /= w;
      // the periodic column is counted once
      if (i < surface.n1) scatter += v * v.transpose();
      dirs.push_back(v);
      weights.push_back(w);
    }
  Eigen::SelfAdjointEigenSolver<RMatrix> es(scatter);
  out.dominant = es.eigenvectors().col(m - 1);
  double sum = 0.0, wsum = 0.0, wtot = 0.0;
  size_t count = 0;
  out.values.resize(dirs.size());
  for (size_t k = 0; k < dirs.size(); ++k) {
    if (weights[k] == 0.0) {
      out.values[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double a = std::min(1.0, std::abs(dirs[k].dot(out.dominant)));
    out.values[k] = a;
    sum += a;
    wsum += weights[k] * a;
    wtot += weights[k];
    ++count;
  }
  out.mean = count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
  out.area_weighted_mean = wtot > 0 ? wsum / wtot : std::numeric_limits<double>::quiet_NaN();
  return out;
}

inline AlignmentField abelianity_field(const GaugeModel& model, const Surface& surface,
                                       const StokesOptions& opt = {}) {
  return abelianity_field_from_grid(surface, transported_curvature_grid(model, surface, opt));
}

/// When all K(s1) commute, V(1) = exp(-i \int K ds1).
struct AbelianReduction {
  bool commuting = false;
  double max_commutator = 0.0;  ///< max ||[K(a), K(b)]||_HS / (||K(a)|| ||K(b)||)
  double deviation = 0.0;       ///< ||V(1) - exp(-i \int K)||_HS
};

inline AbelianReduction abelian_reduction_check(const StripGenerator& gen, double tol = 1e-8) {
  AbelianReduction out;
  const size_t n = gen.values.size();
  for (size_t a = 0; a < n; ++a)
    for (size_t b = a + 1; b < n; ++b) {
      const CMatrix& ka = gen.values[a].matrix();
      const CMatrix& kb = gen.values[b].matrix();
      const double na = hs_norm(ka), nb = hs_norm(kb);
      if (na == 0.0 || nb == 0.0) continue;
      out.max_commutator = std::max(out.max_commutator, hs_norm(commutator(ka, kb)) / (na * nb));
    }
  out.commuting = out.max_commutator < tol;
  CMatrix total = CMatrix::Zero(gen.values.front().dim(), gen.values.front().dim());
  for (size_t k = 1; k < n; ++k)
    total += 0.5 * (gen.s1[k] - gen.s1[k - 1]) * (gen.values[k - 1].matrix() + gen.values[k].matrix());
  const CMatrix v = stokes_evolve(gen).matrix();
  out.deviation = hs_norm(CMatrix(v - expi(CMatrix(-total))));
  return out;
}

}  // namespace qgl
