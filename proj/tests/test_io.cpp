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

#include <filesystem>

#include "qgl/bounds.hpp"
#include "qgl/expression.hpp"
#include "qgl/fixtures.hpp"
#include "qgl/io.hpp"
#include "qgl/models.hpp"

using namespace qgl;

namespace {

std::string thrown_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

json spin_half_json() {
  return json::parse(R"j({
    "name": "bloch", "n": 1, "d": 2, "coordinates": ["theta", "phi"],
    "connection": [[[0]], [["-sin(theta/2)^2"]]],
    "metric": [[0.25, 0], [0, "0.25*sin(theta)^2"]],
    "periods": [0, "ignored"]
  })j");
}

}  // namespace

TEST(Expression, PrecedenceAndFunctions) {
  const std::vector<std::string> v{"x", "y"};
  const double xy[2] = {2.0, 3.0};
  EXPECT_DOUBLE_EQ(Expression("1 + 2 * x ^ 2", v)(xy), 9.0);
  EXPECT_DOUBLE_EQ(Expression("-x^2", v)(xy), -4.0);
  EXPECT_DOUBLE_EQ(Expression("2^3^2", v)(xy), 512.0);
  EXPECT_DOUBLE_EQ(Expression("(x - y) / 2 - -1", v)(xy), 0.5);
  EXPECT_DOUBLE_EQ(Expression("atan2(y, x) + max(x, y) - min(1, 2)", v)(xy), std::atan2(3.0, 2.0) + 2.0);
  EXPECT_DOUBLE_EQ(Expression("sqrt(abs(-x)) * exp(0) + log(e)", v)(xy), std::sqrt(2.0) + 1.0);
  EXPECT_DOUBLE_EQ(Expression("cos(pi)", v)(xy), -1.0);
  EXPECT_DOUBLE_EQ(Expression("k * x", v, {{"k", 0.5}})(xy), 1.0);
  EXPECT_DOUBLE_EQ(Expression("1.5e-1", v)(xy), 0.15);
}

TEST(Expression, Errors) {
  const std::vector<std::string> v{"x"};
  EXPECT_THROW(Expression("x +", v), ExpressionError);
  EXPECT_THROW(Expression("foo(x)", v), ExpressionError);
  EXPECT_THROW(Expression("zz", v), ExpressionError);
  EXPECT_THROW(Expression("sin(x, x)", v), ExpressionError);
  EXPECT_THROW(Expression("(x", v), ExpressionError);
  EXPECT_THROW(Expression("x x", v), ExpressionError);
  EXPECT_NE(thrown_message([&] { Expression("x + $", v); }).find("column"), std::string::npos);
}

TEST(CustomModel, ExpressionSpinHalfMatchesBuiltin) {
  json j = spin_half_json();
  j["periods"] = {0, 2 * pi};
  const GaugeModel c = custom_model_from_json(j);
  const GaugeModel b = spin_half_model();
  EXPECT_EQ(c.name, "bloch");
  EXPECT_EQ(coordinate_names(c), (std::vector<std::string>{"theta", "phi"}));
  for (double th : {0.4, 1.1, 2.2}) {
    const ControlPoint x = (ControlPoint(2) << th, 0.7).finished();
    EXPECT_LT((fs_metric(c, x) - fs_metric(b, x)).norm(), 1e-14);
    EXPECT_NEAR(curvature(c, x)(0, 1)(0, 0).real(), curvature(b, x)(0, 1)(0, 0).real(), 1e-8);
  }
  const UnitaryGate u = wilson_line(c, latitude_loop(2, pi / 2).sample(256));
  EXPECT_NEAR(std::abs(std::arg(u.matrix()(0, 0))), pi, 1e-12);
}

TEST(CustomModel, FrameOnlyModel) {
  // spin-1/2 lower state as a frame; connection and metric follow from it
  const json j = json::parse(R"j({
    "n": 1, "d": 2, "coordinates": ["theta", "phi"],
    "frame": [[{"re": "-sin(theta/2)*cos(phi)", "im": "-sin(theta/2)*sin(phi)"}], ["cos(theta/2)"]]
  })j");
  const GaugeModel c = custom_model_from_json(j);
  const ControlPoint x = (ControlPoint(2) << 1.0, 0.3).finished();
  EXPECT_LT((fs_metric(c, x) - fs_metric(spin_half_model(), x)).norm(), 1e-7);
  EXPECT_NEAR(hs_curvature_norm_evaluated(c, x), 2.0, 1e-6);
}

TEST(CustomModel, TabulatedEntriesInterpolate) {
  const json j = json::parse(R"j({
    "n": 1, "d": 2, "grid": [[0, 1, 2], [0, 1]],
    "connection": [[[{"table": [0, 0, 0, 0, 0, 0]}]], [[{"table": [0, 0, 1, 1, 2, 2]}]]],
    "metric": [[1, 0], [0, 1]]
  })j");
  const GaugeModel c = custom_model_from_json(j);
  // A_2 = x1 on the grid, so F_12 = 1 and the interpolation is exact
  const ControlPoint x = (ControlPoint(2) << 0.75, 0.4).finished();
  EXPECT_NEAR(connection_at(c, x)[1](0, 0).real(), 0.75, 1e-15);
  EXPECT_NEAR(curvature(c, x)(0, 1)(0, 0).real(), 1.0, 1e-8);
  // clamped outside the grid
  EXPECT_NEAR(connection_at(c, (ControlPoint(2) << 5.0, -3.0).finished())[1](0, 0).real(), 2.0, 1e-15);
}

TEST(CustomModel, Errors) {
  json j = spin_half_json();
  j.erase("periods");
  json bad = j;
  bad["connection"][1][0][0] = {{"im", "1"}};
  EXPECT_NE(thrown_message([&] { custom_model_from_json(bad); }).find("Hermitian"), std::string::npos);
  bad = j;
  bad.erase("metric");
  EXPECT_THROW(custom_model_from_json(bad), ModelError);
  bad = j;
  bad["n"] = 0;
  EXPECT_THROW(custom_model_from_json(bad), ModelError);
  bad = j;
  bad["connection"][1][0][0] = "sin(";
  EXPECT_NE(thrown_message([&] { custom_model_from_json(bad); }).find("connection[1][0][0]"), std::string::npos);
  bad = j;
  bad["connection"][0] = json::parse(R"([[{"table": [1.0]}]])");
  EXPECT_THROW(custom_model_from_json(bad), ModelError);
  EXPECT_THROW(custom_model_from_json(spin_half_json()), std::exception);  // string period
  EXPECT_THROW(model_by_name("mobius"), ModelError);
  EXPECT_THROW(model_by_name("custom:/nonexistent/model.json"), ModelError);
  EXPECT_EQ(model_by_name("tripod").d, 3);
}

TEST(CustomModel, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "qgl_test_model.json";
  json j = spin_half_json();
  j["periods"] = {0, 2 * pi};
  write_text_file(path.string(), j.dump());
  const GaugeModel m = model_by_name("custom:" + path.string());
  EXPECT_EQ(m.periods.size(), 2u);
  write_text_file(path.string(), "{ not json");
  EXPECT_THROW(load_custom_model(path.string()), ModelError);
  std::filesystem::remove(path);
}

TEST(Io, ContourCsvRoundTrip) {
  const Contour c = builtin_loop("tripod_fixture", 3).sample(17);
  const std::string text = contour_to_csv(c, {"theta", "phi", "varphi"});
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,theta,phi,varphi");
  const Contour r = contour_from_csv(text, true);
  ASSERT_EQ(r.size(), c.size());
  for (size_t k = 0; k < c.size(); ++k) {
    EXPECT_EQ(r.t[k], c.t[k]);
    EXPECT_EQ((r.points[k] - c.points[k]).norm(), 0.0);
  }
  EXPECT_TRUE(r.closed);
}

TEST(Io, ContourCsvErrorsNameTheLine) {
  EXPECT_NE(thrown_message([] { contour_from_csv("t,x\n0,1\n1,abc\n"); }).find("line 3"), std::string::npos);
  EXPECT_NE(thrown_message([] { contour_from_csv("0,1\n1,2,3\n"); }).find("line 2"), std::string::npos);
  EXPECT_NE(thrown_message([] { contour_from_csv("0,1\n0,2\n"); }).find("line 2"), std::string::npos);
  EXPECT_THROW(contour_from_csv("t,x\n"), ContourError);
  EXPECT_THROW(contour_from_csv("0\n"), ContourError);
  EXPECT_NO_THROW(contour_from_csv("0,1\r\n\n1,2\r\n"));
}

TEST(Io, SurfaceAndContourJsonRoundTrip) {
  const Surface s = polar_cap(2, 1.0, 8, 4);
  const Surface r = surface_from_json(json::parse(to_json(s).dump()));
  EXPECT_EQ(r.n1, s.n1);
  EXPECT_EQ(r.polar_apex, s.polar_apex);
  EXPECT_EQ(r.wrap_shift, s.wrap_shift);
  for (size_t k = 0; k < s.nodes.size(); ++k) EXPECT_EQ(r.nodes[k], s.nodes[k]);
  json bad = to_json(s);
  bad["nodes"].erase(0);
  EXPECT_THROW(surface_from_json(bad), SurfaceError);
  const Contour c = latitude_loop(2, 0.5).sample(5);
  const Contour cr = contour_from_json(json::parse(to_json(c).dump()));
  EXPECT_EQ(cr.points.back(), c.points.back());
  EXPECT_EQ(cr.closed, c.closed);
}

TEST(Io, BoundReportRoundTripIsExact) {
  const BoundReport b = evaluate_bounds(tripod_model(), builtin_surface("tripod_fixture", 3, 16, 8));
  const BoundReport r = bound_report_from_json(json::parse(to_json(b).dump()));
  EXPECT_EQ(r.theta_target, b.theta_target);
  EXPECT_EQ(r.area_fs, b.area_fs);
  EXPECT_EQ(r.efficiency, b.efficiency);
  EXPECT_EQ(r.all_satisfied(), b.all_satisfied());
}

TEST(Io, MatrixAndDoubleFormatting) {
  const CMatrix m = su2_rotation(0.3, Eigen::Vector3d(1, 2, 3)).matrix();
  EXPECT_EQ(cmatrix_from_json(json::parse(to_json(m).dump())), m);
  EXPECT_EQ(std::stod(format_double(pi)), pi);
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Io, TargetGates) {
  EXPECT_LT((parse_target_gate("sy", pi / 3, 2).matrix() - expi(CMatrix(pi / 3 * pauli::y()))).norm(), 1e-14);
  EXPECT_LT((parse_target_gate("axis:0,0,2", 0.5, 2).matrix() - expi(CMatrix(0.5 * pauli::z()))).norm(), 1e-14);
  EXPECT_EQ(parse_target_gate("identity", 1.0, 3).dim(), 3);
  EXPECT_THROW(parse_target_gate("sx", 1.0, 3), FormatError);
  EXPECT_THROW(parse_target_gate("axis:1,2", 1.0, 2), FormatError);
  EXPECT_THROW(parse_target_gate("axis:0,0,0", 1.0, 2), FormatError);
  EXPECT_THROW(parse_target_gate("hadamard", 1.0, 2), FormatError);
  const auto path = std::filesystem::temp_directory_path() / "qgl_test_gate.json";
  write_text_file(path.string(), to_json(CMatrix(pauli::x())).dump());
  EXPECT_EQ(parse_target_gate("matrix:" + path.string(), 0.0, 2).matrix(), pauli::x());
  write_text_file(path.string(), to_json(CMatrix(2.0 * pauli::x())).dump());
  EXPECT_THROW(parse_target_gate("matrix:" + path.string(), 0.0, 2), FormatError);
  std::filesystem::remove(path);
}
