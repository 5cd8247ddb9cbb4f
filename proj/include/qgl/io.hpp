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

// CSV and JSON serialisation. Every number is written with 17 significant
// digits so files round-trip bit-exactly. Column schemas are listed in
// docs/formats.md.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qgl/bounds.hpp"
#include "qgl/brachistochrone.hpp"
#include "qgl/models.hpp"
#include "qgl/stokes.hpp"
#include "qgl/surface.hpp"

namespace qgl {

using json = nlohmann::json;

class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- matrices and vectors -------------------------------------------------

inline json to_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline RVector rvector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// {"re": [[...]], "im": [[...]]}, row-major
inline json to_json(const CMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ir = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ir.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  return {{"re", re}, {"im", im}};
}

inline CMatrix cmatrix_from_json(const json& j) {
  const auto re = j.at("re").get<std::vector<std::vector<double>>>();
  std::vector<std::vector<double>> im;
  if (j.contains("im")) im = j.at("im").get<std::vector<std::vector<double>>>();
  const auto rows = static_cast<Eigen::Index>(re.size());
  if (rows == 0) throw FormatError("matrix has no rows");
  const auto cols = static_cast<Eigen::Index>(re.front().size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(re[static_cast<size_t>(r)].size()) != cols) throw FormatError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double i = im.empty() ? 0.0 : im.at(static_cast<size_t>(r)).at(static_cast<size_t>(c));
      m(r, c) = cplx(re[static_cast<size_t>(r)][static_cast<size_t>(c)], i);
    }
  }
  return m;
}

// ---- target gates ----------------------------------------------------------

/// "identity", "sx" | "sy" | "sz" (exp(i phi sigma)), "axis:a,b,c" or
/// "matrix:<file>" holding {"re": ..., "im": ...}.
inline UnitaryGate parse_target_gate(const std::string& text, double phi, Eigen::Index n) {
  auto su2 = [&](const Eigen::Vector3d& axis) {
    if (n != 2) throw FormatError("target '" + text + "' needs a two-dimensional degenerate subspace");
    if (!(axis.norm() > 0.0)) throw FormatError("target axis must be nonzero");
    return su2_rotation(phi, axis);
  };
  if (text == "identity") return UnitaryGate::identity(n);
  if (text == "sx") return su2(Eigen::Vector3d::UnitX());
  if (text == "sy") return su2(Eigen::Vector3d::UnitY());
  if (text == "sz") return su2(Eigen::Vector3d::UnitZ());
  if (text.rfind("axis:", 0) == 0) {
    std::stringstream ss(text.substr(5));
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("bad axis component '" + cell + "'");
      }
    }
    if (v.size() != 3) throw FormatError("axis needs three components");
    return su2(Eigen::Vector3d(v[0], v[1], v[2]));
  }
  if (text.rfind("matrix:", 0) == 0) {
    json j;
    try {
      j = json::parse(read_text_file(text.substr(7)));
    } catch (const json::exception& e) {
      throw FormatError("target matrix: " + std::string(e.what()));
    }
    const CMatrix m = cmatrix_from_json(j);
    if (m.rows() != n || m.cols() != n) throw FormatError("target matrix has the wrong dimension");
    const UnitaryGate u(m);
    if (u.unitarity_defect() > 1e-8) throw FormatError("target matrix is not unitary");
    return u;
  }
  throw FormatError("unknown target '" + text + "' (identity, sx, sy, sz, axis:a,b,c, matrix:<file>)");
}

// ---- contours --------------------------------------------------------------

/// Header `t,<coordinate names>`, one row per sample.
inline std::string contour_to_csv(const Contour& c, const std::vector<std::string>& names = {}) {
  std::string out = "t";
  for (Eigen::Index k = 0; k < c.dim(); ++k)
    out += "," + (static_cast<Eigen::Index>(names.size()) == c.dim() ? names[static_cast<size_t>(k)]
                                                                     : "x" + std::to_string(k + 1));
  out += "\n";
  for (size_t r = 0; r < c.size(); ++r) {
    out += format_double(c.t[r]);
    for (Eigen::Index k = 0; k < c.dim(); ++k) out += "," + format_double(c.points[r](k));
    out += "\n";
  }
  return out;
}

/// Parses `t,x1,...,xd` rows; a first line that is not numeric is taken as a
/// header. Errors name the offending line.
inline Contour contour_from_csv(const std::string& text, bool closed = false) {
  Contour c;
  c.closed = closed;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    const bool header_slot = first;
    first = false;
    if (!numeric) {
      if (header_slot) continue;
      throw ContourError("contour CSV line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (vals.size() < 2)
      throw ContourError("contour CSV line " + std::to_string(lineno) + ": need t and at least one coordinate");
    const auto dim = static_cast<Eigen::Index>(vals.size()) - 1;
    if (!c.points.empty() && dim != c.dim())
      throw ContourError("contour CSV line " + std::to_string(lineno) + ": expected " + std::to_string(c.dim() + 1) +
                         " fields, got " + std::to_string(vals.size()));
    if (!c.t.empty() && !(vals[0] > c.t.back()))
      throw ContourError("contour CSV line " + std::to_string(lineno) + ": time is not increasing");
    c.t.push_back(vals[0]);
    c.points.push_back(Eigen::Map<const RVector>(vals.data() + 1, dim));
  }
  if (c.points.empty()) throw ContourError("contour CSV has no data rows");
  return c;
}

inline json to_json(const Contour& c) {
  json pts = json::array();
  for (const auto& p : c.points) pts.push_back(to_json(p));
  return {{"closed", c.closed}, {"t", c.t}, {"points", pts}};
}

inline Contour contour_from_json(const json& j) {
  Contour c;
  c.closed = j.value("closed", false);
  c.t = j.at("t").get<std::vector<double>>();
  for (const auto& p : j.at("points")) c.points.push_back(rvector_from_json(p));
  return c;
}

// ---- surfaces ----------------------------------------------------------------

/// Nodes flattened as [i][j][k] with i along s1 (n1 + 1 values), j along s2.
inline json to_json(const Surface& s) {
  std::vector<double> flat;
  flat.reserve(s.nodes.size() * static_cast<size_t>(s.dim()));
  for (const auto& p : s.nodes)
    for (Eigen::Index k = 0; k < p.size(); ++k) flat.push_back(p(k));
  return {{"n1", s.n1},     {"n2", s.n2},         {"d", s.dim()},
          {"s1", s.s1},     {"wrap_shift", to_json(s.wrap_shift)},
          {"polar_apex", s.polar_apex}, {"nodes", flat}};
}

inline Surface surface_from_json(const json& j) {
  const auto n1 = j.at("n1").get<Eigen::Index>(), n2 = j.at("n2").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  if (n1 < 1 || n2 < 1 || d < 1) throw SurfaceError("surface JSON: grid dimensions must be positive");
  Surface s(n1, n2, d);
  if (j.contains("s1")) s.s1 = j.at("s1").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(s.s1.size()) != n1 + 1) throw SurfaceError("surface JSON: s1 needs n1 + 1 values");
  if (j.contains("wrap_shift")) s.wrap_shift = rvector_from_json(j.at("wrap_shift"));
  s.polar_apex = j.value("polar_apex", false);
  const auto flat = j.at("nodes").get<std::vector<double>>();
  if (flat.size() != s.nodes.size() * static_cast<size_t>(d))
    throw SurfaceError("surface JSON: expected " + std::to_string(s.nodes.size() * static_cast<size_t>(d)) +
                       " node coordinates, got " + std::to_string(flat.size()));
  for (size_t k = 0; k < s.nodes.size(); ++k)
    s.nodes[k] = Eigen::Map<const RVector>(flat.data() + k * static_cast<size_t>(d), d);
  return s;
}

/// Heat-map rows `s1,s2,value` (NaN where the curvature vanishes).
inline std::string alignment_to_csv(const Surface& s, const AlignmentField& f) {
  std::string out = "s1,s2,value\n";
  for (Eigen::Index i = 0; i <= f.n1; ++i)
    for (Eigen::Index j = 0; j <= f.n2; ++j)
      out += format_double(s.s1[static_cast<size_t>(i)]) + "," + format_double(s.s2(j)) + "," +
             format_double(f.at(i, j)) + "\n";
  return out;
}

// ---- reports -----------------------------------------------------------------

inline json to_json(const BoundReport& r) {
  return {{"theta", r.theta_target},   {"mt_lhs", r.mt_lhs},
          {"area", r.area_fs},         {"hs_bound", r.hs_bound},
          {"op_bound", r.op_bound},    {"flux", r.flux},
          {"eta", r.efficiency},       {"mt_satisfied", r.mt_satisfied},
          {"hs_satisfied", r.hs_satisfied}, {"op_satisfied", r.op_satisfied},
          {"all_satisfied", r.all_satisfied()}};
}

inline BoundReport bound_report_from_json(const json& j) {
  BoundReport r;
  r.theta_target = j.at("theta").get<double>();
  r.mt_lhs = j.at("mt_lhs").get<double>();
  r.area_fs = j.at("area").get<double>();
  r.hs_bound = j.at("hs_bound").get<double>();
  r.op_bound = j.at("op_bound").get<double>();
  r.flux = j.at("flux").get<double>();
  r.efficiency = j.at("eta").get<double>();
  r.mt_satisfied = j.at("mt_satisfied").get<bool>();
  r.hs_satisfied = j.at("hs_satisfied").get<bool>();
  r.op_satisfied = j.at("op_satisfied").get<bool>();
  return r;
}

/// Full parameter set of a shooting solution; the sampled path lives in the
/// trajectory CSV named by `trajectory_file`.
inline json to_json(const ShootingSolution& s, const std::string& trajectory_file = "") {
  json j = {{"mode", to_string(s.mode)},
            {"converged", s.converged},
            {"seed", s.seed},
            {"lambda0", to_json(s.lambda0)},
            {"velocity0", to_json(s.velocity0)},
            {"k0", to_json(s.k0.matrix())},
            {"duration", s.duration},
            {"fidelity_error", s.fidelity_error},
            {"closure_error", s.closure_error},
            {"fs_length", s.fs_length},
            {"weighted_speed_drift", s.weighted_speed_drift},
            {"residual_norm", s.residual_norm},
            {"iterations", s.iterations},
            {"gate", to_json(s.gate.matrix())},
            {"samples", s.contour.size()}};
  if (!trajectory_file.empty()) j["trajectory_file"] = trajectory_file;
  return j;
}

// ---- sweep ---------------------------------------------------------------------

inline constexpr const char* sweep_csv_header = "alpha,seed,eta,hs_bound,op_bound,theta,area,alignment_mean\n";

/// Converged cells only, alpha-major then seed.
inline std::string sweep_to_csv(const SweepResult& r) {
  std::string out = sweep_csv_header;
  for (const auto& c : r.cells) {
    if (!c.converged) continue;
    out += format_double(c.alpha) + "," + std::to_string(c.seed) + "," + format_double(c.bounds.efficiency) + "," +
           format_double(c.bounds.hs_bound) + "," + format_double(c.bounds.op_bound) + "," +
           format_double(c.bounds.theta_target) + "," + format_double(c.bounds.area_fs) + "," +
           format_double(c.alignment_mean) + "\n";
  }
  return out;
}

inline std::string sweep_failures_to_csv(const SweepResult& r) {
  std::string out = "alpha,seed,reason\n";
  for (const auto& c : r.cells) {
    if (c.converged) continue;
    std::string reason = c.failure;
    std::replace(reason.begin(), reason.end(), '"', '\'');
    out += format_double(c.alpha) + "," + std::to_string(c.seed) + ",\"" + reason + "\"\n";
  }
  return out;
}

inline std::string sweep_summary_to_csv(const SweepResult& r) {
  std::string out = "alpha,converged,failed,eta_min,eta_median,eta_std,eta_range,best_seed,best_alignment,alignment_mean\n";
  for (const auto& s : r.summary)
    out += format_double(s.alpha) + "," + std::to_string(s.converged) + "," + std::to_string(s.failed) + "," +
           format_double(s.eta_min) + "," + format_double(s.eta_median) + "," + format_double(s.eta_dispersion) +
           "," + format_double(s.eta_range) + "," + std::to_string(s.best_seed) + "," +
           format_double(s.best_alignment) + "," + format_double(s.alignment_mean) + "\n";
  return out;
}

}  // namespace qgl
