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

// Named loops and surfaces shared by the CLI, the tests and the examples.

#include <optional>
#include <string>

#include "qgl/holonomy.hpp"
#include "qgl/stokes.hpp"

namespace qgl {

/// Smooth tripod loop away from every metric degeneracy.
inline ControlPoint tripod_fixture_loop(double s) {
  const double a = 2 * pi * s;
  ControlPoint x(3);
  x << 1.0 + 0.4 * std::cos(a), 0.6 + 0.35 * std::sin(a), 1.0 + 0.9 * std::sin(a) + 0.3 * std::cos(2 * a);
  return x;
}

inline ControlPoint tripod_fixture_apex() { return (ControlPoint(3) << 1.0, 0.6, 1.0).finished(); }

/// Straight-line cone from `apex` over a closed parametric loop on [0, 1].
inline Surface parametric_cone(const std::function<ControlPoint(double)>& loop, const ControlPoint& apex,
                               Eigen::Index n1, Eigen::Index n2) {
  Surface s(n1, n2, apex.size());
  for (Eigen::Index i = 0; i <= n1; ++i) {
    const ControlPoint b = loop(static_cast<double>(i % n1) / static_cast<double>(n1));
    for (Eigen::Index j = 0; j <= n2; ++j) s.at(i, j) = apex + s.s2(j) * (b - apex);
  }
  return s;
}

/// Latitude circle theta = theta0, phi = 0 .. 2 pi on the first two
/// coordinates; remaining coordinates fixed at zero.
inline ParametricPath latitude_loop(Eigen::Index d, double theta0) {
  ParametricPath p;
  p.closed = true;
  p.at = [d, theta0](double s) {
    ControlPoint x = ControlPoint::Zero(d);
    x(0) = theta0;
    x(1) = 2 * pi * s;
    return x;
  };
  return p;
}

/// Polar cap theta in [0, theta0] bounded by the latitude loop: apex at the
/// pole, phi wraps by 2 pi across the seam.
inline Surface polar_cap(Eigen::Index d, double theta0, Eigen::Index n1, Eigen::Index n2) {
  Surface s(n1, n2, d);
  s.polar_apex = true;
  s.wrap_shift(1) = 2 * pi;
  for (Eigen::Index i = 0; i <= n1; ++i)
    for (Eigen::Index j = 0; j <= n2; ++j) {
      ControlPoint x = ControlPoint::Zero(d);
      x(0) = theta0 * s.s2(j);
      x(1) = 2 * pi * s.s1[static_cast<size_t>(i)];
      s.at(i, j) = x;
    }
  return s;
}

/// Circle of radius r in the first two coordinates.
inline ParametricPath circle_loop(Eigen::Index d, double r) {
  ParametricPath p;
  p.closed = true;
  p.at = [d, r](double s) {
    ControlPoint x = ControlPoint::Zero(d);
    x(0) = r * std::cos(2 * pi * s);
    x(1) = r * std::sin(2 * pi * s);
    return x;
  };
  return p;
}

/// Built-in loops by name: "equator", "latitude:<theta>", "circle:<r>",
/// "tripod_fixture".
inline ParametricPath builtin_loop(const std::string& name, Eigen::Index d) {
  auto number_after = [&](size_t prefix) {
    try {
      size_t used = 0;
      const double v = std::stod(name.substr(prefix), &used);
      if (used != name.size() - prefix) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ContourError("bad number in loop name '" + name + "'");
    }
  };
  if (name == "equator") return latitude_loop(d, pi / 2);
  if (name.rfind("latitude:", 0) == 0) return latitude_loop(d, number_after(9));
  if (name.rfind("circle:", 0) == 0) return circle_loop(d, number_after(7));
  if (name == "tripod_fixture") {
    if (d != 3) throw ContourError("tripod_fixture needs a three-dimensional control space");
    ParametricPath p;
    p.closed = true;
    p.at = tripod_fixture_loop;
    return p;
  }
  throw ContourError("unknown loop '" + name + "' (equator, latitude:<theta>, circle:<r>, tripod_fixture)");
}

/// Spanning surface for a built-in loop: the polar cap for latitude loops
/// (which wind in phi), otherwise the straight cone from `apex` (default:
/// the fixture apex, or the loop centroid).
inline Surface builtin_surface(const std::string& loop_name, Eigen::Index d, Eigen::Index n1, Eigen::Index n2,
                               std::optional<ControlPoint> apex = std::nullopt) {
  if (loop_name == "equator") return polar_cap(d, pi / 2, n1, n2);
  if (loop_name.rfind("latitude:", 0) == 0) return polar_cap(d, builtin_loop(loop_name, d).at(0.0)(0), n1, n2);
  const ParametricPath path = builtin_loop(loop_name, d);
  if (!apex) {
    if (loop_name == "tripod_fixture") {
      apex = tripod_fixture_apex();
    } else {
      ControlPoint c = ControlPoint::Zero(d);
      for (int k = 0; k < 256; ++k) c += path.at(k / 256.0);
      apex = c / 256.0;
    }
  }
  if (apex->size() != d) throw DimensionError("apex has the wrong dimension");
  return parametric_cone(path.at, *apex, n1, n2);
}

}  // namespace qgl
