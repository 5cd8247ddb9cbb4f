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

// Model lookup by name and the declarative custom-model format (see
// docs/formats.md for the schema).

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qgl/expression.hpp"
#include "qgl/gauge.hpp"

namespace qgl {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Samples on a tensor grid, multilinear interpolation, clamped outside.
class GridTable {
 public:
  GridTable(std::shared_ptr<const std::vector<std::vector<double>>> axes, std::vector<double> values)
      : axes_(std::move(axes)), values_(std::move(values)) {
    size_t total = 1;
    for (const auto& a : *axes_) total *= a.size();
    if (values_.size() != total)
      throw ModelError("table has " + std::to_string(values_.size()) + " values, grid needs " + std::to_string(total));
  }

  double operator()(const double* x) const {
    const size_t d = axes_->size();
    std::vector<size_t> lo(d);
    std::vector<double> w(d);
    for (size_t k = 0; k < d; ++k) {
      const auto& a = (*axes_)[k];
      if (a.size() == 1) {
        lo[k] = 0;
        w[k] = 0.0;
        continue;
      }
      const double v = std::clamp(x[k], a.front(), a.back());
      size_t i = static_cast<size_t>(std::upper_bound(a.begin(), a.end(), v) - a.begin());
      i = std::clamp<size_t>(i, 1, a.size() - 1) - 1;
      lo[k] = i;
      w[k] = (v - a[i]) / (a[i + 1] - a[i]);
    }
    double acc = 0.0;
    for (size_t corner = 0; corner < (size_t{1} << d); ++corner) {
      double weight = 1.0;
      size_t flat = 0;
      for (size_t k = 0; k < d; ++k) {
        const bool up = (corner >> k) & 1u;
        if (up && (*axes_)[k].size() == 1) {
          weight = 0.0;
          break;
        }
        weight *= up ? w[k] : 1.0 - w[k];
        flat = flat * (*axes_)[k].size() + lo[k] + (up ? 1 : 0);
      }
      if (weight != 0.0) acc += weight * values_[flat];
    }
    return acc;
  }

 private:
  std::shared_ptr<const std::vector<std::vector<double>>> axes_;
  std::vector<double> values_;
};

using ScalarFn = std::function<double(const double*)>;

struct ModelContext {
  std::vector<std::string> coordinates;
  std::map<std::string, double> parameters;
  std::shared_ptr<const std::vector<std::vector<double>>> grid;
};

inline ScalarFn scalar_entry(const nlohmann::json& j, const ModelContext& ctx, const std::string& where) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return [v](const double*) { return v; };
  }
  if (j.is_string()) {
    try {
      return Expression(j.get<std::string>(), ctx.coordinates, ctx.parameters);
    } catch (const ExpressionError& e) {
      throw ModelError(where + ": " + e.what());
    }
  }
  if (j.is_object() && j.contains("table")) {
    if (!ctx.grid) throw ModelError(where + ": tabulated entry needs a top-level \"grid\"");
    return GridTable(ctx.grid, j.at("table").get<std::vector<double>>());
  }
  throw ModelError(where + ": expected a number, an expression string or {\"table\": [...]}");
}

using ComplexFn = std::function<cplx(const double*)>;

/// number | "expr" | {"table": [...]} (real) or {"re": ..., "im": ...}
inline ComplexFn complex_entry(const nlohmann::json& j, const ModelContext& ctx, const std::string& where) {
  if (j.is_object() && (j.contains("re") || j.contains("im"))) {
    const ScalarFn re = j.contains("re") ? scalar_entry(j.at("re"), ctx, where + ".re") : ScalarFn{};
    const ScalarFn im = j.contains("im") ? scalar_entry(j.at("im"), ctx, where + ".im") : ScalarFn{};
    return [re, im](const double* x) { return cplx(re ? re(x) : 0.0, im ? im(x) : 0.0); };
  }
  const ScalarFn re = scalar_entry(j, ctx, where);
  return [re](const double* x) { return cplx(re(x), 0.0); };
}

using MatrixFn = std::function<CMatrix(const double*)>;

inline MatrixFn matrix_entry(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const ModelContext& ctx,
                             const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ModelError(where + ": expected " + std::to_string(rows) + " rows");
  std::vector<ComplexFn> cells;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ModelError(where + "[" + std::to_string(r) + "]: expected " + std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c)
      cells.push_back(complex_entry(row[static_cast<size_t>(c)], ctx,
                                    where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]"));
  }
  return [cells, rows, cols](const double* x) {
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = cells[static_cast<size_t>(r * cols + c)](x);
    return m;
  };
}

}  // namespace detail

/// Builds a model from the declarative JSON description.
inline GaugeModel custom_model_from_json(const nlohmann::json& j) {
  using detail::ModelContext;
  if (!j.is_object()) throw ModelError("custom model: top level must be an object");
  for (const char* key : {"n", "d"})
    if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<int>() < 1)
      throw ModelError(std::string("custom model: \"") + key + "\" must be a positive integer");
  const Eigen::Index n = j.at("n").get<int>(), d = j.at("d").get<int>();

  ModelContext ctx;
  if (j.contains("coordinates")) {
    ctx.coordinates = j.at("coordinates").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(ctx.coordinates.size()) != d)
      throw ModelError("custom model: \"coordinates\" must list d names");
  } else {
    for (Eigen::Index k = 0; k < d; ++k) ctx.coordinates.push_back("x" + std::to_string(k + 1));
  }
  if (j.contains("parameters")) ctx.parameters = j.at("parameters").get<std::map<std::string, double>>();
  if (j.contains("grid")) {
    auto axes = j.at("grid").get<std::vector<std::vector<double>>>();
    if (static_cast<Eigen::Index>(axes.size()) != d) throw ModelError("custom model: \"grid\" needs one axis per coordinate");
    for (const auto& a : axes)
      if (a.empty() || !std::is_sorted(a.begin(), a.end()) || std::adjacent_find(a.begin(), a.end()) != a.end())
        throw ModelError("custom model: grid axes must be non-empty and strictly increasing");
    ctx.grid = std::make_shared<const std::vector<std::vector<double>>>(std::move(axes));
  }

  GaugeModel m;
  m.name = j.value("name", std::string("custom"));
  m.n = n;
  m.d = d;
  m.coordinates = ctx.coordinates;

  if (j.contains("frame")) {
    const auto& f = j.at("frame");
    if (!f.is_array() || f.empty()) throw ModelError("custom model: \"frame\" must be a non-empty matrix");
    const auto ambient = static_cast<Eigen::Index>(f.size());
    auto frame = detail::matrix_entry(f, ambient, n, ctx, "frame");
    m.dark_frame = [frame](const ControlPoint& x) { return frame(x.data()); };
  }
  if (j.contains("connection")) {
    const auto& c = j.at("connection");
    if (!c.is_array() || static_cast<Eigen::Index>(c.size()) != d)
      throw ModelError("custom model: \"connection\" must hold d matrices");
    std::vector<detail::MatrixFn> comps;
    for (Eigen::Index mu = 0; mu < d; ++mu)
      comps.push_back(detail::matrix_entry(c[static_cast<size_t>(mu)], n, n, ctx,
                                           "connection[" + std::to_string(mu) + "]"));
    m.connection = [comps](const ControlPoint& x) {
      std::vector<CMatrix> out;
      for (const auto& a : comps) out.push_back(a(x.data()));
      return out;
    };
  } else if (m.dark_frame) {
    auto frame = m.dark_frame;
    m.connection = [frame, n, d](const ControlPoint& x) {
      GaugeModel tmp;
      tmp.n = n;
      tmp.d = d;
      tmp.dark_frame = frame;
      return connection_from_frame(tmp, x);
    };
  } else {
    throw ModelError("custom model: needs \"connection\" or \"frame\"");
  }
  if (j.contains("metric")) {
    auto g = detail::matrix_entry(j.at("metric"), d, d, ctx, "metric");
    m.metric = [g](const ControlPoint& x) { return RMatrix(g(x.data()).real()); };
  } else if (!m.dark_frame) {
    throw ModelError("custom model: needs \"metric\" or \"frame\"");
  }
  if (j.contains("periods")) {
    m.periods = j.at("periods").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(m.periods.size()) != d) throw ModelError("custom model: \"periods\" needs d entries");
  }

  // Hermiticity probe at a generic point
  ControlPoint probe(d);
  for (Eigen::Index k = 0; k < d; ++k) probe(k) = 0.37 + 0.11 * static_cast<double>(k);
  if (ctx.grid)
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& a = (*ctx.grid)[static_cast<size_t>(k)];
      probe(k) = 0.5 * (a.front() + a.back());
    }
  const auto a = m.connection(probe);
  for (size_t mu = 0; mu < a.size(); ++mu) {
    const double skew = (a[mu] - a[mu].adjoint()).cwiseAbs().maxCoeff();
    if (!(skew < 1e-9 * std::max(1.0, a[mu].cwiseAbs().maxCoeff())))
      throw ModelError("custom model: connection[" + std::to_string(mu) + "] is not Hermitian");
  }
  return m;
}

inline GaugeModel load_custom_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("model file " + path + ": " + e.what());
  }
  try {
    return custom_model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("model file " + path + ": " + e.what());
  }
}

/// "tripod", "spin_half", "flat", "zero" or "custom:<file>".
inline GaugeModel model_by_name(const std::string& name) {
  if (name == "tripod") return tripod_model();
  if (name == "spin_half") return spin_half_model();
  if (name == "flat") return flat_toy_model();
  if (name == "zero") return zero_curvature_model();
  if (name.rfind("custom:", 0) == 0) return load_custom_model(name.substr(7));
  throw ModelError("unknown model '" + name + "' (tripod, spin_half, flat, zero, custom:<file>)");
}

/// Coordinate labels used in CSV headers.
inline std::vector<std::string> coordinate_names(const GaugeModel& m) {
  if (static_cast<Eigen::Index>(m.coordinates.size()) == m.d) return m.coordinates;
  std::vector<std::string> out;
  for (Eigen::Index k = 0; k < m.d; ++k) out.push_back("x" + std::to_string(k + 1));
  return out;
}

}  // namespace qgl
