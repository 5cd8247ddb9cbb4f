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
#include <optional>
#include <random>
#include <vector>

#include "qgl/algebra.hpp"
#include "qgl/gauge.hpp"
#include "qgl/geodesic.hpp"
#include "qgl/holonomy.hpp"

// Direct transcription of the holonomy-constrained shortest-path problem on a
// truncated Fourier basis. Its minimisers seed the shooting solver.

namespace qgl {

struct FourierPathConfig {
  int harmonics = 4;
  int segments = 128;  ///< quadrature / Wilson-line resolution
  bool closed = true;
  double constraint_tol = 1e-9;
  int max_outer = 25;
  int max_inner = 40;
  /// Weight of the plain coordinate energy; keeps the path away from chart
  /// directions of vanishing metric.
  double coordinate_weight = 1e-3;
  /// Per-coordinate admissible interval; leaving it is penalised.
  std::vector<std::pair<double, double>> bounds;
  double bound_weight = 1e2;
};

/// lambda(s), s in [0, 1]. Closed: c0 + sum_h a_h cos(2 pi h s) + b_h sin(2 pi h s).
/// Open: c0 + s c1 + sum_h b_h sin(pi h s).
class FourierPath {
 public:
  FourierPath(Eigen::Index d, int harmonics, bool closed)
      : d_(d), harmonics_(harmonics), closed_(closed), coef_(RVector::Zero(size_for(d, harmonics, closed))) {}

  static Eigen::Index size_for(Eigen::Index d, int harmonics, bool closed) {
    return closed ? d * (2 * harmonics + 1) : d * (harmonics + 2);
  }

  Eigen::Index d() const { return d_; }
  int harmonics() const { return harmonics_; }
  bool closed() const { return closed_; }
  RVector& coefficients() { return coef_; }
  const RVector& coefficients() const { return coef_; }

  ControlPoint at(double s) const { return eval(s, 0); }
  RVector derivative(double s, int order) const { return eval(s, order); }

  Contour sample(int segments) const {
    Contour c;
    c.closed = closed_;
    for (int k = 0; k <= segments; ++k) {
      const double s = static_cast<double>(k) / segments;
      c.t.push_back(s);
      c.points.push_back(k == segments && closed_ ? at(0.0) : at(s));
    }
    return c;
  }

 private:
  RVector block(Eigen::Index j) const { return coef_.segment(j * d_, d_); }

  RVector eval(double s, int order) const {
    RVector out = order == 0 ? RVector(block(0)) : RVector(RVector::Zero(d_));
    if (closed_) {
      for (int h = 1; h <= harmonics_; ++h) {
        const double w = 2 * pi * h;
        const double c = std::cos(w * s), sn = std::sin(w * s);
        // derivative of order k of cos/sin: rotate by k quarter turns
        double fc, fs;
        switch (order % 4) {
          case 0: fc = c; fs = sn; break;
          case 1: fc = -sn; fs = c; break;
          case 2: fc = -c; fs = -sn; break;
          default: fc = sn; fs = -c; break;
        }
        const double scale = std::pow(w, order);
        out += scale * (fc * block(2 * h - 1) + fs * block(2 * h));
      }
    } else {
      if (order == 0) out += s * block(1);
      if (order == 1) out += block(1);
      for (int h = 1; h <= harmonics_; ++h) {
        const double w = pi * h;
        double f;
        switch (order % 4) {
          case 0: f = std::sin(w * s); break;
          case 1: f = std::cos(w * s); break;
          case 2: f = -std::sin(w * s); break;
          default: f = -std::cos(w * s); break;
        }
        out += std::pow(w, order) * f * block(h + 1);
      }
    }
    return out;
  }

  Eigen::Index d_;
  int harmonics_;
  bool closed_;
  RVector coef_;
};

struct FourierPathResult {
  FourierPath path;
  double weighted_length = 0.0;  ///< g'-length
  double constraint_residual = 0.0;
  bool feasible = false;
};

namespace detail {

inline RVector gate_residual(const UnitaryGate& target, const UnitaryGate& u) {
  const CMatrix err = log_min(CMatrix(target.matrix().adjoint() * u.matrix()));
  if (u.dim() == 1) return RVector::Constant(1, err(0, 0).real());
  return su_components(err);
}

/// [energy terms; sqrt(mu) (r + nu/mu)] for the augmented Lagrangian.
inline std::optional<RVector> fourier_residual(const GaugeModel& model, const UnitaryGate& target,
                                               const FourierPath& path, const FourierPathConfig& cfg, double mu,
                                               const RVector& nu, RVector* gate_part = nullptr) {
  const int segments = cfg.segments;
  const Contour c = path.sample(segments);
  const Eigen::Index nb = static_cast<Eigen::Index>(cfg.bounds.size());
  RVector out(2 * model.d * segments + nb * segments + nu.size());
  out.setZero();
  const double root_n = std::sqrt(static_cast<double>(segments));
  try {
    for (int k = 0; k < segments; ++k) {
      const auto kk = static_cast<size_t>(k);
      const ControlPoint mid = 0.5 * (c.points[kk] + c.points[kk + 1]);
      const RVector dl = (c.points[kk + 1] - c.points[kk]) * segments;
      const RMatrix gp = hs_curvature_norm(model, mid) * fs_metric(model, mid);
      Eigen::LLT<RMatrix> llt(gp);
      if (llt.info() != Eigen::Success) return std::nullopt;
      out.segment(k * model.d, model.d) = (llt.matrixU() * dl) / root_n;
      out.segment((segments + k) * model.d, model.d) = std::sqrt(cfg.coordinate_weight) * dl / root_n;
      for (Eigen::Index b = 0; b < nb; ++b) {
        const auto [lo, hi] = cfg.bounds[static_cast<size_t>(b)];
        const double x = c.points[kk](b);
        out(2 * model.d * segments + b * segments + k) =
            cfg.bound_weight * (std::max(0.0, lo - x) + std::max(0.0, x - hi));
      }
    }
    const RVector r = gate_residual(target, wilson_line(model, c));
    if (gate_part) *gate_part = r;
    out.tail(nu.size()) = std::sqrt(mu) * (r + nu / mu);
  } catch (const SingularMetricError&) {
    return std::nullopt;
  }
  return out;
}

}  // namespace detail

/// g'-length of the path at the given resolution.
inline double weighted_length(const GaugeModel& model, const FourierPath& path, int segments) {
  const Contour c = path.sample(segments);
  double len = 0.0;
  for (size_t k = 1; k < c.size(); ++k) {
    const ControlPoint mid = 0.5 * (c.points[k] + c.points[k - 1]);
    const RVector dl = c.points[k] - c.points[k - 1];
    len += std::sqrt(hs_curvature_norm(model, mid) * dl.dot(fs_metric(model, mid) * dl));
  }
  return len;
}

/// Minimises the g'-energy of the path subject to U(path) = target by an
/// augmented Lagrangian with Levenberg-Marquardt inner solves.
inline FourierPathResult optimize_fourier_path(const GaugeModel& model, const UnitaryGate& target,
                                               FourierPath path, const FourierPathConfig& cfg) {
  const Eigen::Index nr = model.n == 1 ? 1 : model.n * model.n - 1;
  RVector nu = RVector::Zero(nr);
  double mu = 10.0;
  RVector gate;
  double last_violation = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    auto r = detail::fourier_residual(model, target, path, cfg, mu, nu, &gate);
    if (!r) break;
    double lm = 1e-3;
    for (int it = 0; it < cfg.max_inner; ++it) {
      RVector& x = path.coefficients();
      RMatrix j(r->size(), x.size());
      bool ok = true;
      for (Eigen::Index c = 0; c < x.size() && ok; ++c) {
        FourierPath p2 = path;
        const double h = 1e-7 * std::max(1.0, std::abs(x(c)));
        p2.coefficients()(c) += h;
        const auto rp = detail::fourier_residual(model, target, p2, cfg, mu, nu);
        if (!rp) ok = false;
        else j.col(c) = (*rp - *r) / h;
      }
      if (!ok) break;
      const RMatrix jtj = j.transpose() * j;
      const RVector g = j.transpose() * *r;
      bool accepted = false;
      for (int inner = 0; inner < 10 && !accepted; ++inner) {
        RMatrix a = jtj;
        a.diagonal().array() += lm * (1.0 + jtj.diagonal().array());
        FourierPath trial = path;
        trial.coefficients() += a.ldlt().solve(-g);
        RVector gt;
        const auto rt = detail::fourier_residual(model, target, trial, cfg, mu, nu, &gt);
        if (rt && rt->squaredNorm() < r->squaredNorm()) {
          const double gain = r->squaredNorm() - rt->squaredNorm();
          path = trial;
          r = rt;
          gate = gt;
          lm = std::max(lm / 5.0, 1e-12);
          accepted = true;
          if (gain < 1e-14 * std::max(1.0, r->squaredNorm())) it = cfg.max_inner;
        } else {
          lm *= 8.0;
        }
      }
      if (!accepted) break;
    }
    const double violation = gate.cwiseAbs().maxCoeff();
    if (violation < cfg.constraint_tol) break;
    nu += mu * gate;
    if (violation > 0.25 * last_violation) mu *= 4.0;
    last_violation = violation;
  }
  FourierPathResult res{path, 0.0, 0.0, false};
  try {
    res.weighted_length = weighted_length(model, path, 4 * cfg.segments);
    res.constraint_residual = detail::gate_residual(target, wilson_line(model, path.sample(cfg.segments))).cwiseAbs().maxCoeff();
    res.feasible = res.constraint_residual < 1e-6;
  } catch (const SingularMetricError&) {
    res.feasible = false;
  }
  return res;
}

/// Random smooth initial loop (closed) or arc (open) around a point of the box.
inline FourierPath random_fourier_path(Eigen::Index d, const FourierPathConfig& cfg,
                                       const std::vector<std::pair<double, double>>& box, double amplitude,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  FourierPath p(d, cfg.harmonics, cfg.closed);
  RVector& c = p.coefficients();
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto [lo, hi] = static_cast<size_t>(k) < box.size() ? box[static_cast<size_t>(k)] : std::pair{-1.0, 1.0};
    c(k) = lo + (hi - lo) * unit(rng);
  }
  if (cfg.closed) {
    // first harmonic: a random ellipse
    for (Eigen::Index k = 0; k < d; ++k) {
      c(d + k) = amplitude * normal(rng);
      c(2 * d + k) = amplitude * normal(rng);
    }
  } else {
    for (Eigen::Index k = 0; k < d; ++k) c(d + k) = amplitude * normal(rng);
  }
  return p;
}

/// Shooting data (lambda0, unit g'-speed velocity, K0, T) read off a path at
/// s = 0. K0 is fitted by least squares to the driven geodesic equation
/// along the arclength-parametrised path.
struct PathShootingData {
  ControlPoint lambda0;
  RVector velocity0;
  AlgebraElement k0;
  double duration = 0.0;
  double fit_residual = 0.0;
};

inline PathShootingData shooting_data_from_path(const GaugeModel& model, const FourierPath& path,
                                                int samples = 256) {
  PathShootingData out;
  const auto speed = [&](double s) {
    const ControlPoint x = path.at(s);
    const RVector v = path.derivative(s, 1);
    return std::sqrt(hs_curvature_norm(model, x) * v.dot(fs_metric(model, x) * v));
  };
  out.lambda0 = path.at(0.0);
  out.velocity0 = path.derivative(0.0, 1) / speed(0.0);
  out.duration = weighted_length(model, path, 4 * samples);

  // K(t) = U(t)^dagger K0 U(t) is linear in K0: accumulate the normal equations.
  const auto basis = generator_basis(model.n);
  const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
  RMatrix ata = RMatrix::Zero(m, m);
  RVector atb = RVector::Zero(m);
  const Contour c = path.sample(samples);
  const auto running = wilson_line_running(model, c);
  const double hs = 1.0 / samples;
  double b_norm = 0.0;
  for (int k = 1; k < samples; ++k) {
    const double s = k * hs;
    const ControlPoint x = path.at(s);
    const RVector ls = path.derivative(s, 1), lss = path.derivative(s, 2);
    const double sig = speed(s);
    const double dsig = (speed(s + 1e-5) - speed(s - 1e-5)) / 2e-5;
    const RVector v = ls / sig;
    const RVector acc = (lss * sig - ls * dsig) / (sig * sig * sig);
    const GeodesicTerms zero = geodesic_terms(model, x, v, CMatrix::Zero(model.n, model.n));
    const RVector rhs = acc + zero.christoffel;  // what the force must supply
    RMatrix a(model.d, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const CMatrix& u = running[static_cast<size_t>(k)];
      a.col(j) = geodesic_terms(model, x, v, CMatrix(u.adjoint() * basis[static_cast<size_t>(j)] * u)).force;
    }
    ata += a.transpose() * a;
    atb += a.transpose() * rhs;
    b_norm += rhs.squaredNorm();
  }
  const RVector coef = ata.ldlt().solve(atb);
  CMatrix k0 = CMatrix::Zero(model.n, model.n);
  for (Eigen::Index j = 0; j < m; ++j) k0 += coef(j) * basis[static_cast<size_t>(j)];
  out.k0 = AlgebraElement(k0);
  out.fit_residual = std::sqrt(std::max(0.0, b_norm - coef.dot(atb)) / std::max(b_norm, 1e-300));
  return out;
}

}  // namespace qgl
