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

#include "qgl/fixtures.hpp"
#include "qgl/stokes.hpp"

using namespace qgl;

namespace {

const StokesOptions magnus{TransportConvention::fiber, LineIntegrator::magnus4};

const CMatrix& tripod_reference() {
  static const CMatrix u =
      wilson_line(tripod_model(), builtin_loop("tripod_fixture", 3).sample(20000), {LineIntegrator::magnus4}).matrix();
  return u;
}

double stokes_error(Eigen::Index n, const StokesOptions& opt = magnus) {
  const Surface s = builtin_surface("tripod_fixture", 3, n, n);
  return hs_norm(CMatrix(stokes_evolve(strip_generator(tripod_model(), s, opt)).matrix() - tripod_reference()));
}

}  // namespace

TEST(Stokes, TripodFixtureConvergesAtSecondOrder) {
  const double e32 = stokes_error(32), e64 = stokes_error(64), e128 = stokes_error(128);
  EXPECT_GT(std::log2(e32 / e64), 1.8);
  EXPECT_GT(std::log2(e64 / e128), 1.8);
  EXPECT_LT(e128, 1e-5);
}

TEST(Stokes, ReferenceIsConverged) {
  const CMatrix coarse =
      wilson_line(tripod_model(), builtin_loop("tripod_fixture", 3).sample(10000), {LineIntegrator::magnus4}).matrix();
  EXPECT_LT(hs_norm(CMatrix(coarse - tripod_reference())), 1e-7);
}

TEST(Stokes, BoundaryFirstConventionDoesNotReproduceTheLoop) {
  StokesOptions bf = magnus;
  bf.convention = TransportConvention::boundary_first;
  const double e64 = stokes_error(64, bf), e128 = stokes_error(128, bf);
  EXPECT_GT(e128, 1e-3);
  EXPECT_GT(e128, 0.5 * e64);  // no convergence
}

TEST(Stokes, TransportedCurvatureIsHermitian) {
  const Surface s = builtin_surface("tripod_fixture", 3, 16, 16);
  const auto grid = transported_curvature_grid(tripod_model(), s);
  for (const auto& col : grid)
    for (const auto& f : col) EXPECT_LT((f - f.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  const AlgebraElement one = transported_curvature(tripod_model(), s, 3, 5);
  EXPECT_LT((one.matrix() - grid[3][5]).norm(), 1e-14);
  EXPECT_THROW(transported_curvature(tripod_model(), s, 17, 0), std::out_of_range);
}

TEST(Stokes, AbelianCapReducesToFluxExponential) {
  // spin-1/2 polar cap: commuting strip generators, V(1) = exp(-i \int K)
  const GaugeModel m = spin_half_model();
  const Surface s = polar_cap(2, 1.2, 16, 16);
  const StripGenerator gen = strip_generator(m, s);
  const AbelianReduction r = abelian_reduction_check(gen);
  EXPECT_TRUE(r.commuting);
  EXPECT_LT(r.deviation, 1e-9);
  // and the flux approaches the Berry phase -Omega/2 under refinement
  const double exact = -pi * (1 - std::cos(1.2));
  auto phase = [&](Eigen::Index n) {
    return std::arg(stokes_evolve(strip_generator(m, polar_cap(2, 1.2, n, n))).matrix()(0, 0));
  };
  const double e16 = std::abs(phase(16) - exact), e32 = std::abs(phase(32) - exact);
  EXPECT_LT(e32, 1e-3);
  EXPECT_GT(std::log2(e16 / e32), 1.8);
}

TEST(Stokes, HemisphereFluxIsPi) {
  const UnitaryGate v = stokes_evolve(strip_generator(spin_half_model(), polar_cap(2, pi / 2, 256, 256)));
  EXPECT_NEAR(std::abs(std::arg(v.matrix()(0, 0))), pi, 1e-4);
}

TEST(Stokes, NonAbelianFixtureDoesNotCommute) {
  const StripGenerator gen = strip_generator(tripod_model(), builtin_surface("tripod_fixture", 3, 16, 16));
  const AbelianReduction r = abelian_reduction_check(gen);
  EXPECT_FALSE(r.commuting);
  EXPECT_GT(r.max_commutator, 1e-3);
}

TEST(Stokes, AlignmentFieldIsUnitOnAbelianSurface) {
  const AlignmentField f = abelianity_field(spin_half_model(), polar_cap(2, 1.0, 8, 8));
  EXPECT_NEAR(f.mean, 1.0, 1e-12);
  const AlignmentField t = abelianity_field(tripod_model(), builtin_surface("tripod_fixture", 3, 16, 16));
  EXPECT_GT(t.mean, 0.0);
  EXPECT_LE(t.mean, 1.0 + 1e-12);
  for (double v : t.values)
    if (!std::isnan(v)) {
      EXPECT_GE(v, -1e-12);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
}

TEST(Stokes, SurfaceValidation) {
  Surface s = builtin_surface("tripod_fixture", 3, 8, 8);
  Surface bad_apex = s;
  bad_apex.at(3, 0)(0) += 0.1;
  EXPECT_THROW(bad_apex.validate(), SurfaceError);
  Surface bad_seam = s;
  bad_seam.at(8, 4)(1) += 0.1;
  EXPECT_THROW(bad_seam.validate(), SurfaceError);
  Surface tiny(2, 2, 3);
  EXPECT_THROW(tiny.validate(), SurfaceError);
  EXPECT_THROW(strip_generator(spin_half_model(), s), DimensionError);
}

TEST(Stokes, PolarCapDerivatives) {
  const Surface s = polar_cap(2, 1.0, 16, 8);
  for (Eigen::Index i : {0, 5, 16}) {
    EXPECT_LT((s.d1(i, 4) - (RVector(2) << 0.0, 2 * pi).finished()).norm(), 1e-12);
    EXPECT_LT((s.d2(i, 4) - (RVector(2) << 1.0, 0.0).finished()).norm(), 1e-12);
  }
}
