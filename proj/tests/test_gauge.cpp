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

#include <gtest/gtest.h>

#include <random>

#include "qgl/gauge.hpp"
#include "qgl/holonomy.hpp"

using namespace qgl;

namespace {

ControlPoint random_tripod_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> th(0.15, pi - 0.15), ph(0.1, pi / 2 - 0.1), vp(0.0, 4 * pi);
  return (ControlPoint(3) << th(rng), ph(rng), vp(rng)).finished();
}

// the model stripped to its dark frame: everything else by differences
GaugeModel frame_only(const GaugeModel& m) {
  GaugeModel f = frame_model(m.name + "_frame", m.n, m.d, m.dark_frame);
  f.periods = m.periods;
  return f;
}

}  // namespace

TEST(Gauge, TripodConnectionIsHermitianAndMatchesFrame) {
  const GaugeModel m = tripod_model();
  const GaugeModel f = frame_only(m);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const ControlPoint x = random_tripod_point(rng);
    const auto a = connection_at(m, x);
    const auto b = connection_at(f, x);
    for (size_t mu = 0; mu < 3; ++mu) {
      EXPECT_LT((a[mu] - a[mu].adjoint()).cwiseAbs().maxCoeff(), 1e-15);
      // the frame also carries a U(1) part; the closed forms are its SU(2) part
      const CMatrix traceless = b[mu] - 0.5 * b[mu].trace() * CMatrix::Identity(2, 2);
      EXPECT_LT((a[mu] - traceless).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Gauge, AnalyticCurvatureMatchesConnectionDerivatives) {
  const GaugeModel m = tripod_model();
  const GaugeModel f = frame_only(m);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 30; ++k) {
    const ControlPoint x = random_tripod_point(rng);
    const Curvature fa = curvature(m, x);
    const Curvature fb = curvature_from_connection(f, x, {1e-4, true});
    for (Eigen::Index mu = 0; mu < 3; ++mu)
      for (Eigen::Index nu = mu + 1; nu < 3; ++nu) {
        const CMatrix traceless = fb(mu, nu) - 0.5 * fb(mu, nu).trace() * CMatrix::Identity(2, 2);
        EXPECT_LT((fa(mu, nu) - traceless).cwiseAbs().maxCoeff(), 1e-7);
      }
  }
}

TEST(Gauge, CurvatureAntisymmetryIsExact) {
  const Curvature f = tripod_curvature((ControlPoint(3) << 0.7, 0.4, 1.1).finished());
  for (Eigen::Index mu = 0; mu < 3; ++mu) {
    EXPECT_EQ(f(mu, mu).norm(), 0.0);
    for (Eigen::Index nu = 0; nu < 3; ++nu) EXPECT_EQ((f(mu, nu) + f(nu, mu)).norm(), 0.0);
  }
}

// Sign oracle: holonomy of a small coordinate square (+mu, +nu, -mu, -nu)
// equals exp(i h^2 F_{mu nu}) to O(h^3).
TEST(Gauge, SmallLoopHolonomyFixesCurvatureSign) {
  const GaugeModel m = tripod_model();
  const ControlPoint x = (ControlPoint(3) << 0.9, 0.5, 0.7).finished();
  for (Eigen::Index mu = 0; mu < 3; ++mu)
    for (Eigen::Index nu = mu + 1; nu < 3; ++nu) {
      std::vector<double> errs;
      for (double h : {2e-3, 1e-3}) {
        RVector e1 = RVector::Zero(3), e2 = RVector::Zero(3);
        e1(mu) = h;
        e2(nu) = h;
        const ControlPoint c = x - 0.5 * (e1 + e2);
        Contour sq;
        sq.closed = true;
        const std::vector<ControlPoint> corners{c, c + e1, c + e1 + e2, c + e2, c};
        int t = 0;
        for (size_t s = 0; s + 1 < corners.size(); ++s)
          for (int k = 0; k < 16; ++k) {
            sq.t.push_back(t++);
            sq.points.push_back(corners[s] + (corners[s + 1] - corners[s]) * (k / 16.0));
          }
        sq.t.push_back(t);
        sq.points.push_back(c);
        const CMatrix u = wilson_line(m, sq, {LineIntegrator::magnus4}).matrix();
        const CMatrix predicted = expi(CMatrix(h * h * curvature(m, x)(mu, nu)));
        const CMatrix wrong = expi(CMatrix(-h * h * curvature(m, x)(mu, nu)));
        const double err = (u - predicted).cwiseAbs().maxCoeff();
        errs.push_back(err);
        if (curvature(m, x)(mu, nu).norm() > 1e-3) {
          EXPECT_LT(err, 0.1 * (u - wrong).cwiseAbs().maxCoeff());
        }
      }
      EXPECT_LT(errs[1], 0.2 * errs[0] + 1e-13);  // at least third order
    }
}

TEST(Gauge, TripodHsNormIsSqrtThreeFromConnection) {
  GaugeModel m = tripod_model();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const ControlPoint x = random_tripod_point(rng);
    EXPECT_NEAR(hs_curvature_norm_evaluated(m, x), std::sqrt(3.0), 1e-10);
  }
}

TEST(Gauge, TripodMetricMatchesProjectorDifferences) {
  const GaugeModel m = tripod_model();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 30; ++k) {
    const ControlPoint x = random_tripod_point(rng);
    EXPECT_LT((fs_metric(m, x) - fs_metric_from_frame(m, x, {1e-4, true})).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Gauge, MetricIsGaugeInvariant) {
  // a constant U(1) rephasing of the frame leaves the projector unchanged
  const GaugeModel a = tripod_model(0.0), b = tripod_model(1.3);
  const ControlPoint x = (ControlPoint(3) << 1.1, 0.3, 2.0).finished();
  EXPECT_LT((fs_metric_from_frame(a, x) - fs_metric_from_frame(b, x)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Gauge, MetricJacobianMatchesDifferences) {
  const GaugeModel m = tripod_model();
  GaugeModel plain = m;
  plain.metric_jacobian = nullptr;
  const ControlPoint x = (ControlPoint(3) << 0.8, 0.35, 0.2).finished();
  const auto ja = metric_jacobian(m, x), jb = metric_jacobian(plain, x);
  for (size_t k = 0; k < 3; ++k) EXPECT_LT((ja[k] - jb[k]).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Gauge, SpinHalfReferenceValues) {
  const GaugeModel m = spin_half_model();
  const ControlPoint x = (ControlPoint(2) << 0.9, 0.4).finished();
  // F_{theta phi} = d_theta A_phi = -sin(theta)/2, metric diag(1/4, sin^2/4)
  EXPECT_NEAR(curvature_from_connection(m, x)(0, 1)(0, 0).real(), -0.5 * std::sin(0.9), 1e-9);
  EXPECT_NEAR(hs_curvature_norm_evaluated(m, x), 2.0, 1e-8);
  EXPECT_LT((fs_metric(m, x) - fs_metric_from_frame(m, x, {1e-4, true})).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Gauge, FlatToyModel) {
  const GaugeModel m = flat_toy_model();
  const ControlPoint x = (ControlPoint(3) << 0.3, -1.2, 0.5).finished();
  EXPECT_NEAR(curvature_from_connection(m, x)(0, 1)(0, 0).real(), 1.0, 1e-9);
  EXPECT_NEAR(hs_curvature_norm_evaluated(m, x), 1.0, 1e-12);
  EXPECT_NEAR(operator_curvature_norm(m, x), 1.0, 1e-12);
}

TEST(Gauge, ZeroCurvatureModel) {
  const GaugeModel m = zero_curvature_model();
  const ControlPoint x = (ControlPoint(2) << 0.3, 0.1).finished();
  EXPECT_LT(curvature(m, x)(0, 1).norm(), 1e-12);
  EXPECT_NEAR(hs_curvature_norm(m, x), 0.0, 1e-12);
}

TEST(Gauge, OperatorNormNeverExceedsHsNorm) {
  const GaugeModel m = tripod_model();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const ControlPoint x = random_tripod_point(rng);
    const double op = operator_curvature_norm(m, x);
    EXPECT_GT(op, 0.0);
    EXPECT_LE(op, hs_curvature_norm(m, x) + 1e-12);
  }
}

TEST(Gauge, SingularMetricIsReported) {
  const GaugeModel m = tripod_model();
  const ControlPoint pole = (ControlPoint(3) << 0.0, 0.3, 0.2).finished();
  EXPECT_THROW(inverse_metric(fs_metric(m, pole), pole), SingularMetricError);
  EXPECT_THROW(hs_curvature_norm_evaluated(m, pole), SingularMetricError);
}

TEST(Gauge, RichardsonImprovesDifferences) {
  const GaugeModel f = frame_only(spin_half_model());
  const ControlPoint x = (ControlPoint(2) << 0.9, 0.4).finished();
  const double exact = -0.5 * std::sin(0.9);
  const double plain = curvature_from_connection(f, x, {1e-3, false})(0, 1)(0, 0).real();
  const double rich = curvature_from_connection(f, x, {1e-3, true})(0, 1)(0, 0).real();
  EXPECT_LT(std::abs(rich - exact), std::abs(plain - exact));
}
