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

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgl {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I_unit{0.0, 1.0};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unitary N x N matrix: a holonomy or a target gate.
class UnitaryGate {
 public:
  UnitaryGate() = default;
  explicit UnitaryGate(CMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
      throw DimensionError("UnitaryGate: matrix must be square and non-empty");
  }

  static UnitaryGate identity(Eigen::Index n) { return UnitaryGate(CMatrix::Identity(n, n)); }

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  /// max-entry deviation of U^dagger U from the identity
  double unitarity_defect() const {
    return (m_.adjoint() * m_ - CMatrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  }

  UnitaryGate adjoint() const { return UnitaryGate(m_.adjoint()); }

  friend UnitaryGate operator*(const UnitaryGate& a, const UnitaryGate& b) {
    return UnitaryGate(a.m_ * b.m_);
  }

 private:
  CMatrix m_;
};

/// Lie-algebra element stored as a Hermitian generator H (gates are exp(iH)).
/// The anti-Hermitian form used for multipliers relates by K = iH.
class AlgebraElement {
 public:
  AlgebraElement() = default;
  explicit AlgebraElement(CMatrix h) : h_(std::move(h)) {
    if (h_.rows() != h_.cols() || h_.rows() == 0)
      throw DimensionError("AlgebraElement: matrix must be square and non-empty");
  }

  static AlgebraElement zero(Eigen::Index n) { return AlgebraElement(CMatrix::Zero(n, n)); }

  const CMatrix& matrix() const { return h_; }
  Eigen::Index dim() const { return h_.rows(); }
  double hermiticity_defect() const { return (h_ - h_.adjoint()).norm(); }

 private:
  CMatrix h_;
};

namespace pauli {
inline CMatrix x() { return (CMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline CMatrix y() { return (CMatrix(2, 2) << 0, -I_unit, I_unit, 0).finished(); }
inline CMatrix z() { return (CMatrix(2, 2) << 1, 0, 0, -1).finished(); }
inline CMatrix identity() { return CMatrix::Identity(2, 2); }

/// n . sigma for a real 3-vector
inline CMatrix dot(const Eigen::Vector3d& n) { return n(0) * x() + n(1) * y() + n(2) * z(); }

/// Real sigma components v with H = v0 I + v . sigma (H Hermitian 2x2).
inline Eigen::Vector3d components(const CMatrix& h) {
  return {0.5 * (h(0, 1) + h(1, 0)).real(), 0.5 * (h(1, 0) - h(0, 1)).imag(),
          0.5 * (h(0, 0) - h(1, 1)).real()};
}
}  // namespace pauli

/// Hilbert-Schmidt inner product <U,V> = Tr(U^dagger V)/N.
inline cplx hs_inner(const CMatrix& u, const CMatrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw DimensionError("hs_inner: dimension mismatch (" + std::to_string(u.rows()) + " vs " +
                         std::to_string(v.rows()) + ")");
  return (u.adjoint() * v).trace() / static_cast<double>(u.rows());
}
inline cplx hs_inner(const UnitaryGate& u, const UnitaryGate& v) { return hs_inner(u.matrix(), v.matrix()); }
inline cplx hs_inner(const AlgebraElement& a, const AlgebraElement& b) {
  return hs_inner(a.matrix(), b.matrix());
}

inline double hs_norm(const CMatrix& a) {
  return std::sqrt(a.squaredNorm() / static_cast<double>(a.rows()));
}
inline double hs_norm(const AlgebraElement& a) { return hs_norm(a.matrix()); }

/// exp(iH) for Hermitian H. Closed form for 2x2, spectral otherwise; the
/// result is unitary to rounding.
inline CMatrix expi(const CMatrix& h) {
  if (h.rows() == 1) return CMatrix::Constant(1, 1, std::exp(I_unit * h(0, 0).real()));
  if (h.rows() == 2) {
    const double a0 = 0.5 * (h(0, 0) + h(1, 1)).real();
    const Eigen::Vector3d v = pauli::components(h);
    const double r = v.norm();
    const double s = r > 1e-300 ? std::sin(r) / r : 1.0;
    CMatrix out(2, 2);
    // cos r I + i sin r (v/r).sigma
    out(0, 0) = cplx(std::cos(r), s * v(2));
    out(1, 1) = cplx(std::cos(r), -s * v(2));
    out(0, 1) = I_unit * s * cplx(v(0), -v(1));
    out(1, 0) = I_unit * s * cplx(v(0), v(1));
    return std::exp(I_unit * a0) * out;
  }
  const CMatrix herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  const Eigen::VectorXcd phases =
      es.eigenvalues().unaryExpr([](double x) { return std::exp(I_unit * x); });
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}
inline UnitaryGate expi(const AlgebraElement& h) { return UnitaryGate(expi(h.matrix())); }

/// Nearest unitary (polar factor) of a near-unitary matrix.
inline CMatrix reunitarize(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Minimal logarithm: Hermitian H with exp(iH) = U and smallest HS norm.
/// Eigenphases are taken in (-pi, pi]. Phases sitting on the cut (within
/// branch_tol of pi) may be flipped to -pi; the flip pattern minimising |Tr H|
/// is selected, keeping +pi where that does not change |Tr H|.
inline CMatrix log_min(const CMatrix& u, double branch_tol = 1e-9) {
  const Eigen::Index n = u.rows();
  if (n != u.cols()) throw DimensionError("log_min: matrix must be square");
  // U is normal, so its complex Schur form is diagonal with a unitary basis.
  Eigen::ComplexSchur<CMatrix> schur(u);
  const CMatrix& q = schur.matrixU();
  const CMatrix& t = schur.matrixT();
  std::vector<double> phase(static_cast<size_t>(n));
  std::vector<size_t> on_cut;
  for (Eigen::Index k = 0; k < n; ++k) {
    double p = std::arg(t(k, k));
    if (p <= -pi + branch_tol) p = pi;
    phase[static_cast<size_t>(k)] = p;
    if (pi - p < branch_tol) on_cut.push_back(static_cast<size_t>(k));
  }
  if (!on_cut.empty() && on_cut.size() < 20) {
    double base = 0.0;
    for (double p : phase) base += p;
    unsigned best_mask = 0;
    double best = std::abs(base);
    for (unsigned mask = 1; mask < (1u << on_cut.size()); ++mask) {
      const double tr = base - 2.0 * pi * std::popcount(mask);
      if (std::abs(tr) < best - 1e-12) {
        best = std::abs(tr);
        best_mask = mask;
      }
    }
    for (size_t b = 0; b < on_cut.size(); ++b)
      if (best_mask & (1u << b)) phase[on_cut[b]] = -pi;
  }
  RVector ph(n);
  for (Eigen::Index k = 0; k < n; ++k) ph(k) = phase[static_cast<size_t>(k)];
  CMatrix h = q * ph.cast<cplx>().asDiagonal() * q.adjoint();
  return 0.5 * (h + h.adjoint());
}
inline AlgebraElement log_min(const UnitaryGate& u) { return AlgebraElement(log_min(u.matrix())); }

/// Gate magnitude Theta(U) = ||log_min U||_HS; the rotation angle for SU(2).
inline double gate_magnitude(const CMatrix& u) {
  // eigenphase moduli are branch independent, so skip the tie-breaking
  Eigen::ComplexSchur<CMatrix> schur(u, false);
  const auto& t = schur.matrixT();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < t.rows(); ++k) {
    const double p = std::abs(std::arg(t(k, k)));
    acc += p * p;
  }
  return std::sqrt(acc / static_cast<double>(u.rows()));
}
inline double gate_magnitude(const UnitaryGate& u) { return gate_magnitude(u.matrix()); }

/// F = |<U,V>|^2. Global phases are not quotiented out.
inline double fidelity(const UnitaryGate& u, const UnitaryGate& v) { return std::norm(hs_inner(u, v)); }

/// SU(2) rotation exp(i phi n.sigma) for a unit axis n.
inline UnitaryGate su2_rotation(double phi, const Eigen::Vector3d& axis) {
  return UnitaryGate(expi(CMatrix(phi * pauli::dot(axis.normalized()))));
}

/// Orthonormal basis (under hs_inner) of traceless Hermitian N x N matrices:
/// generalised Gell-Mann matrices scaled so <E,E> = 1. For N = 2 this is
/// (sigma_x, sigma_y, sigma_z).
inline std::vector<CMatrix> su_basis(Eigen::Index n) {
  std::vector<CMatrix> basis;
  const double nn = static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      CMatrix s = CMatrix::Zero(n, n);
      s(j, k) = s(k, j) = 1.0;
      basis.push_back(s * std::sqrt(nn / 2.0));
      CMatrix a = CMatrix::Zero(n, n);
      a(j, k) = -I_unit;
      a(k, j) = I_unit;
      basis.push_back(a * std::sqrt(nn / 2.0));
    }
  for (Eigen::Index l = 1; l < n; ++l) {
    CMatrix d = CMatrix::Zero(n, n);
    for (Eigen::Index m = 0; m < l; ++m) d(m, m) = 1.0;
    d(l, l) = -static_cast<double>(l);
    const double norm2 = static_cast<double>(l * (l + 1)) / nn;
    basis.push_back(d / std::sqrt(norm2));
  }
  return basis;
}

/// Real coordinates of a traceless Hermitian matrix in su_basis(N).
inline RVector su_components(const CMatrix& h) {
  const auto basis = su_basis(h.rows());
  RVector v(static_cast<Eigen::Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k) v(static_cast<Eigen::Index>(k)) = hs_inner(basis[k], h).real();
  return v;
}

inline CMatrix from_su_components(const RVector& v, Eigen::Index n) {
  const auto basis = su_basis(n);
  CMatrix h = CMatrix::Zero(n, n);
  for (size_t k = 0; k < basis.size(); ++k) h += v(static_cast<Eigen::Index>(k)) * basis[k];
  return h;
}

/// Orthonormal basis of the generator space: {I} for N = 1, su(N) otherwise.
inline std::vector<CMatrix> generator_basis(Eigen::Index n) {
  if (n == 1) return {CMatrix::Identity(1, 1)};
  return su_basis(n);
}

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

}  // namespace qgl
