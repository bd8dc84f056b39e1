/*******************************************************************************
* Copyright 2026 The tilq Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#ifndef TILQ_IO_HPP
#define TILQ_IO_HPP

/**
 * @file
 * @brief Scenario JSON, CSV field dumps and the JSON summaries written by
 * the command-line tool.
 *
 * Kernel and function specs are {"type": ..., "params": ...}. Kernels of
 * (s, t): constant, discounted {rate, base}, difference {slope, intercept},
 * table {s_nodes, t_nodes, values}, sum [spec, ...]. Functions of one time:
 * constant, affine {slope, intercept}, exponential {rate, anchor, base},
 * table {nodes, values}, sum [spec, ...]. A bare number or nested array is
 * shorthand for a constant. Matrices are row-major nested arrays.
 */

#include <tilq/equilibrium.hpp>
#include <tilq/fbsde_sim.hpp>
#include <tilq/fields.hpp>
#include <tilq/kernel.hpp>
#include <tilq/problem.hpp>
#include <tilq/scenarios.hpp>
#include <tilq/verify.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilq::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

/// Malformed or invalid input; line and column are 1-based, 0 when unknown.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column)
  {
  }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// %.17g, so every double survives a text round trip.
inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

inline std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(const std::string& text, const std::string& source)
{
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << source << ":" << line << ":" << column << ": malformed JSON";
    const std::string what = e.what();
    const auto colon = what.rfind(": ");
    if (colon != std::string::npos) msg << ": " << what.substr(colon + 2);
    throw InputError(msg.str(), line, column);
  }
}

// ---- matrices, kernels, functions ------------------------------------------------

inline Json matrix_to_json(const Matrix& m)
{
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double number_from_json(const Json& j, const std::string& what)
{
  if (!j.is_number()) throw InputError(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(what + ": non-finite number");
  return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what)
{
  if (j.is_number()) return Matrix::Constant(1, 1, number_from_json(j, what));
  if (!j.is_array() || j.empty()) throw InputError(what + ": expected a number or a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw InputError(what + ": rows must be non-empty arrays");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InputError(what + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          number_from_json(j[r][c], what + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline std::vector<double> numbers_from_json(const Json& j, const std::string& what)
{
  if (!j.is_array()) throw InputError(what + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_from_json(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<Matrix> matrices_from_json(const Json& j, const std::string& what)
{
  if (!j.is_array()) throw InputError(what + ": expected an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

inline const Json& member(const Json& j, const char* key, const std::string& what)
{
  if (!j.is_object() || !j.contains(key)) throw InputError(what + ": missing '" + key + "'");
  return j.at(key);
}

inline Json spec_json(const char* type, Json params)
{
  Json out;
  out["type"] = type;
  out["params"] = std::move(params);
  return out;
}

inline Json kernel_to_json(const Kernel& k)
{
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantKernel>) {
          return spec_json("constant", matrix_to_json(v.value));
        } else if constexpr (std::is_same_v<T, DiscountedKernel>) {
          return spec_json("discounted", Json{{"rate", v.rate}, {"base", matrix_to_json(v.base)}});
        } else if constexpr (std::is_same_v<T, DifferenceKernel>) {
          return spec_json("difference", Json{{"slope", matrix_to_json(v.slope)}, {"intercept", matrix_to_json(v.intercept)}});
        } else if constexpr (std::is_same_v<T, TableKernel>) {
          Json vals = Json::array();
          for (const auto& m : v.values) vals.push_back(matrix_to_json(m));
          return spec_json("table", Json{{"s_nodes", v.s_nodes}, {"t_nodes", v.t_nodes}, {"values", vals}});
        } else {
          Json terms = Json::array();
          for (const auto& t : v.terms) terms.push_back(kernel_to_json(t));
          return spec_json("sum", terms);
        }
      },
      k.variant());
}

inline Kernel kernel_from_json(const Json& j, const std::string& what)
{
  if (j.is_number() || j.is_array()) return Kernel::constant(matrix_from_json(j, what));
  const std::string type = member(j, "type", what).is_string() ? j.at("type").get<std::string>() : "";
  const Json& p = member(j, "params", what);
  const std::string at = what + ".params";
  try {
    if (type == "constant") return Kernel::constant(matrix_from_json(p, at));
    if (type == "discounted") {
      return Kernel(DiscountedKernel{number_from_json(member(p, "rate", at), at + ".rate"),
                                     matrix_from_json(member(p, "base", at), at + ".base")});
    }
    if (type == "difference") {
      return Kernel(DifferenceKernel{matrix_from_json(member(p, "slope", at), at + ".slope"),
                                     matrix_from_json(member(p, "intercept", at), at + ".intercept")});
    }
    if (type == "table") {
      return Kernel(TableKernel{numbers_from_json(member(p, "s_nodes", at), at + ".s_nodes"),
                                numbers_from_json(member(p, "t_nodes", at), at + ".t_nodes"),
                                matrices_from_json(member(p, "values", at), at + ".values")});
    }
    if (type == "sum") {
      if (!p.is_array() || p.empty()) throw InputError(at + ": expected a non-empty array of kernel specs");
      SumKernel s;
      for (std::size_t i = 0; i < p.size(); ++i) s.terms.push_back(kernel_from_json(p[i], at + "[" + std::to_string(i) + "]"));
      return Kernel(std::move(s));
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(what + ": " + e.what());
  }
  throw InputError(what + ": unknown kernel type '" + type + "'");
}

inline Json function_to_json(const TimeFunction& f)
{
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantFunction>) {
          return spec_json("constant", matrix_to_json(v.value));
        } else if constexpr (std::is_same_v<T, AffineFunction>) {
          return spec_json("affine", Json{{"slope", matrix_to_json(v.slope)}, {"intercept", matrix_to_json(v.intercept)}});
        } else if constexpr (std::is_same_v<T, ExponentialFunction>) {
          return spec_json("exponential",
                           Json{{"rate", v.rate}, {"anchor", v.anchor}, {"base", matrix_to_json(v.base)}});
        } else if constexpr (std::is_same_v<T, TableFunction>) {
          Json vals = Json::array();
          for (const auto& m : v.values) vals.push_back(matrix_to_json(m));
          return spec_json("table", Json{{"nodes", v.nodes}, {"values", vals}});
        } else {
          Json terms = Json::array();
          for (const auto& t : v.terms) terms.push_back(function_to_json(t));
          return spec_json("sum", terms);
        }
      },
      f.variant());
}

inline TimeFunction function_from_json(const Json& j, const std::string& what)
{
  if (j.is_number() || j.is_array()) return TimeFunction::constant(matrix_from_json(j, what));
  const std::string type = member(j, "type", what).is_string() ? j.at("type").get<std::string>() : "";
  const Json& p = member(j, "params", what);
  const std::string at = what + ".params";
  try {
    if (type == "constant") return TimeFunction::constant(matrix_from_json(p, at));
    if (type == "affine") {
      return TimeFunction(AffineFunction{matrix_from_json(member(p, "slope", at), at + ".slope"),
                                         matrix_from_json(member(p, "intercept", at), at + ".intercept")});
    }
    if (type == "exponential") {
      return TimeFunction(ExponentialFunction{number_from_json(member(p, "rate", at), at + ".rate"),
                                              number_from_json(member(p, "anchor", at), at + ".anchor"),
                                              matrix_from_json(member(p, "base", at), at + ".base")});
    }
    if (type == "table") {
      return TimeFunction(TableFunction{numbers_from_json(member(p, "nodes", at), at + ".nodes"),
                                        matrices_from_json(member(p, "values", at), at + ".values")});
    }
    if (type == "sum") {
      if (!p.is_array() || p.empty()) throw InputError(at + ": expected a non-empty array of function specs");
      SumFunction s;
      for (std::size_t i = 0; i < p.size(); ++i) {
        s.terms.push_back(function_from_json(p[i], at + "[" + std::to_string(i) + "]"));
      }
      return TimeFunction(std::move(s));
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(what + ": " + e.what());
  }
  throw InputError(what + ": unknown function type '" + type + "'");
}

// ---- scenarios --------------------------------------------------------------------

inline Json scenario_to_json(const NamedScenario& sc)
{
  const auto& s = sc.spec;
  Json j;
  j["name"] = sc.name;
  j["dims"] = Json{{"n", s.dims.n}, {"m", s.dims.m}, {"k", s.dims.k}};
  j["horizon"] = s.grid.horizon();
  j["grid_steps"] = s.grid.steps();
  Json c;
  c["A"] = function_to_json(s.coeffs.A);
  c["B"] = function_to_json(s.coeffs.B);
  c["C"] = function_to_json(s.coeffs.C);
  c["D"] = function_to_json(s.coeffs.D);
  c["Ahat"] = function_to_json(s.coeffs.Ahat);
  c["Bhat"] = function_to_json(s.coeffs.Bhat);
  c["Chat"] = function_to_json(s.coeffs.Chat);
  c["Dhat"] = function_to_json(s.coeffs.Dhat);
  c["H"] = matrix_to_json(s.coeffs.H);
  j["coeffs"] = std::move(c);
  Json w;
  w["Q"] = kernel_to_json(s.weights.Q);
  w["R"] = kernel_to_json(s.weights.R);
  w["M"] = kernel_to_json(s.weights.M);
  w["N"] = kernel_to_json(s.weights.N);
  w["G1"] = function_to_json(s.weights.G1);
  w["G2"] = function_to_json(s.weights.G2);
  j["weights"] = std::move(w);
  j["theta0"] = sc.theta0;
  return j;
}

inline std::size_t count_from_json(const Json& j, const std::string& what)
{
  if (!j.is_number_integer() || j.get<long long>() < 0) throw InputError(what + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

/// Builds and validates; grid_steps > 0 overrides the file.
inline NamedScenario scenario_from_json(const Json& j, const std::string& source, std::size_t grid_steps = 0)
{
  if (!j.is_object()) throw InputError(source + ": scenario must be a JSON object");
  NamedScenario sc;
  sc.name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "scenario";
  const Json& d = member(j, "dims", source);
  ProblemSpec& s = sc.spec;
  s.dims.n = static_cast<Index>(count_from_json(member(d, "n", source + ".dims"), source + ".dims.n"));
  s.dims.m = static_cast<Index>(count_from_json(member(d, "m", source + ".dims"), source + ".dims.m"));
  s.dims.k = static_cast<Index>(count_from_json(member(d, "k", source + ".dims"), source + ".dims.k"));
  if (s.dims.n == 0 || s.dims.m == 0 || s.dims.k == 0) throw InputError(source + ".dims: sizes must be positive");
  const double T = number_from_json(member(j, "horizon", source), source + ".horizon");
  if (!(T > 0.0)) throw InputError(source + ".horizon: must be positive");
  std::size_t N = j.contains("grid_steps") ? count_from_json(j["grid_steps"], source + ".grid_steps") : 1000;
  if (grid_steps > 0) N = grid_steps;
  if (N == 0) throw InputError(source + ".grid_steps: must be positive");
  s.grid = TimeGrid(T, N);
  s.coeffs.T = T;

  static const Json empty = Json::object();
  const Json& c = j.contains("coeffs") ? member(j, "coeffs", source) : empty;
  const std::string cw = source + ".coeffs";
  if (!c.is_object()) throw InputError(cw + ": expected an object");
  auto fn = [&](const char* key, Index r, Index cc) {
    if (!c.contains(key)) return TimeFunction::zero(r, cc);
    return function_from_json(c[key], cw + "." + key);
  };
  s.coeffs.A = fn("A", s.dims.n, s.dims.n);
  s.coeffs.B = fn("B", s.dims.n, s.dims.k);
  s.coeffs.C = fn("C", s.dims.n, s.dims.n);
  s.coeffs.D = fn("D", s.dims.n, s.dims.k);
  s.coeffs.Ahat = fn("Ahat", s.dims.m, s.dims.n);
  s.coeffs.Bhat = fn("Bhat", s.dims.m, s.dims.k);
  s.coeffs.Chat = fn("Chat", s.dims.m, s.dims.m);
  s.coeffs.Dhat = fn("Dhat", s.dims.m, s.dims.m);
  s.coeffs.H = c.contains("H") ? matrix_from_json(c["H"], cw + ".H") : Matrix::Zero(s.dims.m, s.dims.n);

  const Json& w = j.contains("weights") ? member(j, "weights", source) : empty;
  const std::string ww = source + ".weights";
  if (!w.is_object()) throw InputError(ww + ": expected an object");
  auto ker = [&](const char* key, Index r) {
    if (!w.contains(key)) return Kernel::zero(r, r);
    return kernel_from_json(w[key], ww + "." + key);
  };
  auto wfn = [&](const char* key, Index r) {
    if (!w.contains(key)) return TimeFunction::zero(r, r);
    return function_from_json(w[key], ww + "." + key);
  };
  s.weights.Q = ker("Q", s.dims.n);
  s.weights.R = ker("R", s.dims.k);
  s.weights.M = ker("M", s.dims.m);
  s.weights.N = ker("N", s.dims.m);
  s.weights.G1 = wfn("G1", s.dims.n);
  s.weights.G2 = wfn("G2", s.dims.m);
  if (j.contains("theta0")) sc.theta0 = number_from_json(j["theta0"], source + ".theta0");

  const auto rep = validate(s);
  if (!rep.ok()) {
    std::string msg = source + ": invalid scenario:";
    for (const auto& issue : rep.issues) msg += "\n  " + issue;
    throw InputError(msg);
  }
  return sc;
}

inline NamedScenario parse_scenario(const std::string& text, const std::string& source, std::size_t grid_steps = 0)
{
  return scenario_from_json(parse_json(text, source), source, grid_steps);
}

inline NamedScenario load_scenario(const std::string& path, std::size_t grid_steps = 0)
{
  return parse_scenario(read_file(path), path, grid_steps);
}

// ---- CSV --------------------------------------------------------------------------

inline std::string field_header(const std::string& prefix, Index rows, Index cols)
{
  std::string h = "t";
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) h += "," + prefix + "_" + std::to_string(r) + "_" + std::to_string(c);
  }
  return h;
}

/// One row per grid node: t, then entries row-major.
inline std::string field_csv(const std::string& prefix, const OneTimeField& f)
{
  std::string out = field_header(prefix, f.rows(), f.cols()) + "\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    out += format_double(f.grid().node(i));
    const auto m = f.at(i);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) out += "," + format_double(m(r, c));
    }
    out += "\n";
  }
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a field written by field_csv; the row count and t column must match the grid.
inline OneTimeField read_field_csv(const std::string& path, const TimeGrid& grid, Index rows, Index cols,
                                   const std::string& prefix)
{
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file", 1, 1);
  if (line != field_header(prefix, rows, cols)) throw InputError(path + ": unexpected header '" + line + "'", 1, 1);
  OneTimeField f(grid, rows, cols);
  std::size_t i = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (i >= grid.size()) throw InputError(path + ": more rows than grid nodes", lineno, 1);
    const auto cells = split_csv_line(line);
    if (cells.size() != static_cast<std::size_t>(1 + rows * cols)) throw InputError(path + ": wrong column count", lineno, 1);
    std::vector<double> vals;
    for (const auto& cell : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty() || !std::isfinite(v)) {
        throw InputError(path + ": bad number '" + cell + "'", lineno, 1);
      }
      vals.push_back(v);
    }
    if (std::abs(vals[0] - grid.node(i)) > 1e-12 * (1.0 + grid.horizon())) {
      throw InputError(path + ": t column does not match the scenario grid", lineno, 1);
    }
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = vals[static_cast<std::size_t>(1 + r * cols + c)];
    }
    f.at(i) = m;
    ++i;
  }
  if (i != grid.size()) throw InputError(path + ": expected " + std::to_string(grid.size()) + " rows, got " + std::to_string(i));
  return f;
}

inline std::string diagnostics_csv(const EquilibriumSolution& sol)
{
  std::string out = "window,lo,hi,t_lo,t_hi,iterations,halvings,final_residual,max_ratio\n";
  for (std::size_t w = 0; w < sol.windows.size(); ++w) {
    const auto& d = sol.windows[w];
    out += std::to_string(w) + "," + std::to_string(d.lo) + "," + std::to_string(d.hi) + "," + format_double(d.t_lo) + "," +
           format_double(d.t_hi) + "," + std::to_string(d.iterations) + "," + std::to_string(d.halvings) + "," +
           format_double(d.final_residual) + "," + format_double(d.max_ratio) + "\n";
  }
  return out;
}

inline std::string spike_csv(const SpikeReport& rep)
{
  std::string out =
      "eps,delta,stderr,theory_quadratic,theory_first_order,scale,eps_steps,first_order,first_order_stderr,quadratic,"
      "quadratic_stderr\n";
  for (const auto& r : rep.rows) {
    out += format_double(r.eps) + "," + format_double(r.delta) + "," + format_double(r.stderr_) + "," +
           format_double(r.theory_quadratic) + "," + format_double(r.theory_first_order) + "," + format_double(r.scale) +
           "," + std::to_string(r.eps_steps) + "," + format_double(r.first_order) + "," +
           format_double(r.first_order_stderr) + "," + format_double(r.quadratic) + "," +
           format_double(r.quadratic_stderr) + "\n";
  }
  return out;
}

/// Long format: path, t, then x, y, z, u components.
inline std::string paths_csv(const PathBundle& b)
{
  std::string out = "path,t";
  for (Index i = 0; i < b.n; ++i) out += ",x_" + std::to_string(i);
  for (Index i = 0; i < b.m; ++i) out += ",y_" + std::to_string(i);
  for (Index i = 0; i < b.m; ++i) out += ",z_" + std::to_string(i);
  for (Index i = 0; i < b.k; ++i) out += ",u_" + std::to_string(i);
  out += "\n";
  for (std::size_t p = 0; p < b.paths; ++p) {
    for (std::size_t r = 0; r < b.nodes(); ++r) {
      out += std::to_string(p) + "," + format_double(b.fine_grid.node(b.start + r));
      for (auto view : {b.x(p, r), b.y(p, r), b.z(p, r), b.u(p, r)}) {
        for (Index i = 0; i < view.size(); ++i) out += "," + format_double(view(i));
      }
      out += "\n";
    }
  }
  return out;
}

// ---- JSON reports -----------------------------------------------------------------

inline Json constraints_json(const ConstraintReport& c)
{
  Json j;
  j["l2_membership"] = Json{{"pass", c.l2_ok}, {"sup", c.l2_sup}, {"grid_l2_norm", c.l2_norm},
                            {"note", "finite grid-quadrature norm"}};
  j["range_inclusion"] = Json{{"pass", c.range_pass()}, {"worst_residual", c.range_worst},
                              {"worst_node", c.range_worst_node}, {"failing_nodes", c.range_failures}};
  j["psd"] = Json{{"pass", c.psd_pass()}, {"worst_eigenvalue", c.psd_worst}, {"worst_node", c.psd_worst_node},
                  {"failing_nodes", c.psd_failures}};
  j["pass"] = c.all_pass();
  return j;
}

/// Deterministic run summary; no timings so reruns compare byte for byte.
inline Json summary_json(const NamedScenario& sc, const EquilibriumSolution& sol, const SolverConfig& cfg)
{
  Json j;
  j["scenario"] = sc.name;
  j["grid_steps"] = sc.spec.grid.steps();
  j["horizon"] = sc.spec.grid.horizon();
  j["theta0"] = sc.theta0;
  j["tolerances"] = Json{{"fp_tolerance", cfg.fp_tolerance},
                         {"contraction_target", cfg.contraction_target},
                         {"damping", cfg.damping},
                         {"delta_floor", cfg.delta_floor},
                         {"denominator_floor", cfg.denominator_floor},
                         {"range_tol", cfg.constraint_tol.range},
                         {"psd_tol", cfg.constraint_tol.psd},
                         {"enforce_assumption", cfg.enforce_assumption}};
  j["assumption"] = Json{{"name", sol.assumption.name}, {"pass", sol.assumption.pass}, {"value", sol.assumption.value},
                         {"notes", sol.assumption.notes}};
  Json windows = Json::array();
  std::size_t iterations = 0;
  for (const auto& w : sol.windows) {
    iterations += w.iterations;
    windows.push_back(Json{{"lo", w.lo},
                           {"hi", w.hi},
                           {"t_lo", w.t_lo},
                           {"t_hi", w.t_hi},
                           {"iterations", w.iterations},
                           {"halvings", w.halvings},
                           {"final_residual", w.final_residual},
                           {"max_ratio", w.max_ratio}});
  }
  j["windows"] = std::move(windows);
  j["total_iterations"] = iterations;
  j["fixed_point_residual"] = sol.fixed_point_residual;
  j["consistency_error"] = sol.consistency_error;
  j["floor_nodes"] = sol.floor_nodes;
  j["constraints"] = constraints_json(sol.constraints);
  return j;
}

inline Json suite_json(const SuiteReport& rep)
{
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json e{{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}};
    if (!c.note.empty()) e["note"] = c.note;
    checks.push_back(std::move(e));
  }
  return Json{{"suite", rep.suite}, {"pass", rep.pass()}, {"checks", std::move(checks)}};
}

inline Json spike_json(const SpikeReport& rep)
{
  return Json{{"t", rep.t},
              {"t_node", rep.t_node},
              {"paths", rep.paths},
              {"base_cost", Json{{"mean", rep.base_cost.mean}, {"stderr", rep.base_cost.stderr_}}},
              {"liminf_pass", rep.liminf_pass},
              {"all_nonnegative", rep.all_nonnegative},
              {"converges", rep.converges},
              {"note", rep.note}};
}

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string scenario_path;
  Json overrides = Json::object();
  std::uint64_t seed = 0;
  std::string output_dir;
  double wall_clock_seconds = 0.0;

  Json to_json() const
  {
    return Json{{"command", command},     {"argv", argv},
                {"scenario", scenario_path}, {"overrides", overrides},
                {"seed", seed},           {"output_dir", output_dir},
                {"tool_version", tool_version}, {"wall_clock_seconds", wall_clock_seconds}};
  }
};

/// const:<v>
inline double parse_theta0(const std::string& text)
{
  const std::string prefix = "const:";
  if (text.rfind(prefix, 0) != 0) throw InputError("--theta0 must look like const:<value>, got '" + text + "'");
  const std::string body = text.substr(prefix.size());
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (body.empty() || used != body.size() || !std::isfinite(v)) throw InputError("--theta0: bad value '" + body + "'");
  return v;
}

}  // namespace tilq::io

#endif  // TILQ_IO_HPP
