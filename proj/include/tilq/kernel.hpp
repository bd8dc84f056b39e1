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

#ifndef TILQ_KERNEL_HPP
#define TILQ_KERNEL_HPP

/**
 * @file
 * @brief Closed families of matrix-valued functions used to describe a problem:
 * TimeFunction for coefficients of one time variable and Kernel for weights of
 * two time variables (s, t).
 *
 * Both families are plain data, so scenarios serialize losslessly and every
 * evaluation is a pure function of its arguments.
 */

#include <tilq/matrixkit.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tilq {

namespace detail {

// Index j with nodes[j] <= x < nodes[j+1] and weight in [0,1]; clamped at the ends.
inline std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double x)
{
  if (nodes.size() == 1 || x <= nodes.front()) return {0, 0.0};
  if (x >= nodes.back()) return {nodes.size() - 2, 1.0};
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  const auto j = static_cast<std::size_t>(std::distance(nodes.begin(), it)) - 1;
  return {j, (x - nodes[j]) / (nodes[j + 1] - nodes[j])};
}

inline void check_nodes(const std::vector<double>& nodes, const char* what)
{
  if (nodes.empty()) throw std::invalid_argument(std::string("table: empty ") + what + " nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) {
      throw std::invalid_argument(std::string("table: ") + what + " nodes must be strictly increasing");
    }
  }
}

inline void check_same_shape(const std::vector<Matrix>& values)
{
  for (const auto& v : values) {
    if (v.rows() != values.front().rows() || v.cols() != values.front().cols()) {
      throw std::invalid_argument("table: all entries must share one shape");
    }
  }
}

}  // namespace detail

class TimeFunction;

/// f(u) = value
struct ConstantFunction {
  Matrix value;
};
/// f(u) = slope * u + intercept
struct AffineFunction {
  Matrix slope;
  Matrix intercept;
};
/// f(u) = base * exp(rate * (u - anchor))
struct ExponentialFunction {
  double rate = 0.0;
  double anchor = 0.0;
  Matrix base;
};
/// piecewise-linear through (nodes[i], values[i]), constant beyond the ends
struct TableFunction {
  std::vector<double> nodes;
  std::vector<Matrix> values;
};
struct SumFunction {
  std::vector<TimeFunction> terms;
};

class TimeFunction {
 public:
  using Variant = std::variant<ConstantFunction, AffineFunction, ExponentialFunction, TableFunction, SumFunction>;

  TimeFunction() : TimeFunction(ConstantFunction{Matrix::Zero(1, 1)}) {}

  explicit TimeFunction(Variant v) : v_(std::move(v))
  {
    std::visit([this](const auto& f) { init(f); }, v_);
  }

  static TimeFunction constant(Matrix value) { return TimeFunction(ConstantFunction{std::move(value)}); }
  static TimeFunction constant(double value) { return constant(Matrix::Constant(1, 1, value)); }
  static TimeFunction zero(Index rows, Index cols) { return constant(Matrix::Zero(rows, cols)); }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Variant& variant() const { return v_; }

  Matrix operator()(double u) const
  {
    return std::visit([u](const auto& f) { return eval(f, u); }, v_);
  }

  /// The function does not depend on u.
  bool is_constant() const { return std::holds_alternative<ConstantFunction>(v_); }

  /// Every matrix parameter, visited recursively.
  template <class F>
  void for_each_matrix(F&& fn) const
  {
    std::visit([&fn](const auto& f) { visit_matrices(f, fn); }, v_);
  }

 private:
  void init(const ConstantFunction& f) { shape(f.value); }
  void init(const AffineFunction& f)
  {
    if (f.slope.rows() != f.intercept.rows() || f.slope.cols() != f.intercept.cols()) {
      throw std::invalid_argument("affine: slope and intercept shapes differ");
    }
    shape(f.slope);
  }
  void init(const ExponentialFunction& f) { shape(f.base); }
  void init(const TableFunction& f)
  {
    detail::check_nodes(f.nodes, "time");
    if (f.values.size() != f.nodes.size()) throw std::invalid_argument("table: value count must match nodes");
    detail::check_same_shape(f.values);
    shape(f.values.front());
  }
  void init(const SumFunction& f)
  {
    if (f.terms.empty()) throw std::invalid_argument("sum: needs at least one term");
    rows_ = f.terms.front().rows();
    cols_ = f.terms.front().cols();
    for (const auto& t : f.terms) {
      if (t.rows() != rows_ || t.cols() != cols_) throw std::invalid_argument("sum: term shapes differ");
    }
  }
  void shape(const Matrix& m)
  {
    rows_ = m.rows();
    cols_ = m.cols();
  }

  static Matrix eval(const ConstantFunction& f, double) { return f.value; }
  static Matrix eval(const AffineFunction& f, double u) { return f.slope * u + f.intercept; }
  static Matrix eval(const ExponentialFunction& f, double u) { return f.base * std::exp(f.rate * (u - f.anchor)); }
  static Matrix eval(const TableFunction& f, double u)
  {
    const auto [j, w] = detail::locate(f.nodes, u);
    if (f.nodes.size() == 1) return f.values.front();
    return (1.0 - w) * f.values[j] + w * f.values[j + 1];
  }
  static Matrix eval(const SumFunction& f, double u)
  {
    Matrix out = f.terms.front()(u);
    for (std::size_t i = 1; i < f.terms.size(); ++i) out += f.terms[i](u);
    return out;
  }

  template <class F>
  static void visit_matrices(const ConstantFunction& f, F& fn) { fn(f.value); }
  template <class F>
  static void visit_matrices(const AffineFunction& f, F& fn) { fn(f.slope); fn(f.intercept); }
  template <class F>
  static void visit_matrices(const ExponentialFunction& f, F& fn) { fn(f.base); }
  template <class F>
  static void visit_matrices(const TableFunction& f, F& fn)
  {
    for (const auto& v : f.values) fn(v);
  }
  template <class F>
  static void visit_matrices(const SumFunction& f, F& fn)
  {
    for (const auto& t : f.terms) t.for_each_matrix(fn);
  }

  Variant v_;
  Index rows_ = 1;
  Index cols_ = 1;
};

class Kernel;

/// K(s,t) = value
struct ConstantKernel {
  Matrix value;
};
/// K(s,t) = exp(-rate * (s - t)) * base
struct DiscountedKernel {
  double rate = 0.0;
  Matrix base;
};
/// K(s,t) = slope * (s - t) + intercept
struct DifferenceKernel {
  Matrix slope;
  Matrix intercept;
};
/// Bilinear interpolation on the rectangle s_nodes x t_nodes; values[is * t_count + it].
struct TableKernel {
  std::vector<double> s_nodes;
  std::vector<double> t_nodes;
  std::vector<Matrix> values;
};
struct SumKernel {
  std::vector<Kernel> terms;
};

class Kernel {
 public:
  using Variant = std::variant<ConstantKernel, DiscountedKernel, DifferenceKernel, TableKernel, SumKernel>;

  Kernel() : Kernel(ConstantKernel{Matrix::Zero(1, 1)}) {}

  explicit Kernel(Variant v) : v_(std::move(v))
  {
    std::visit([this](const auto& k) { init(k); }, v_);
  }

  static Kernel constant(Matrix value) { return Kernel(ConstantKernel{std::move(value)}); }
  static Kernel constant(double value) { return constant(Matrix::Constant(1, 1, value)); }
  static Kernel zero(Index rows, Index cols) { return constant(Matrix::Zero(rows, cols)); }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Variant& variant() const { return v_; }

  Matrix operator()(double s, double t) const
  {
    return std::visit([s, t](const auto& k) { return eval(k, s, t); }, v_);
  }

  /// Scalar shortcut for 1x1 kernels.
  double scalar(double s, double t) const
  {
    return std::visit([s, t](const auto& k) { return eval_scalar(k, s, t); }, v_);
  }

  bool is_constant() const { return std::holds_alternative<ConstantKernel>(v_); }

  template <class F>
  void for_each_matrix(F&& fn) const
  {
    std::visit([&fn](const auto& k) { visit_matrices(k, fn); }, v_);
  }

 private:
  void init(const ConstantKernel& k) { shape(k.value); }
  void init(const DiscountedKernel& k) { shape(k.base); }
  void init(const DifferenceKernel& k)
  {
    if (k.slope.rows() != k.intercept.rows() || k.slope.cols() != k.intercept.cols()) {
      throw std::invalid_argument("difference: slope and intercept shapes differ");
    }
    shape(k.slope);
  }
  void init(const TableKernel& k)
  {
    detail::check_nodes(k.s_nodes, "s");
    detail::check_nodes(k.t_nodes, "t");
    if (k.values.size() != k.s_nodes.size() * k.t_nodes.size()) {
      throw std::invalid_argument("table: value count must be s_nodes * t_nodes");
    }
    detail::check_same_shape(k.values);
    shape(k.values.front());
  }
  void init(const SumKernel& k)
  {
    if (k.terms.empty()) throw std::invalid_argument("sum: needs at least one term");
    rows_ = k.terms.front().rows();
    cols_ = k.terms.front().cols();
    for (const auto& t : k.terms) {
      if (t.rows() != rows_ || t.cols() != cols_) throw std::invalid_argument("sum: term shapes differ");
    }
  }
  void shape(const Matrix& m)
  {
    rows_ = m.rows();
    cols_ = m.cols();
  }

  static Matrix eval(const ConstantKernel& k, double, double) { return k.value; }
  static Matrix eval(const DiscountedKernel& k, double s, double t)
  {
    // s == t returns base exactly
    return (s == t) ? k.base : Matrix(k.base * std::exp(-k.rate * (s - t)));
  }
  static Matrix eval(const DifferenceKernel& k, double s, double t) { return k.slope * (s - t) + k.intercept; }
  static Matrix eval(const TableKernel& k, double s, double t)
  {
    const std::size_t nt = k.t_nodes.size();
    const auto [is, ws] = detail::locate(k.s_nodes, s);
    const auto [it, wt] = detail::locate(k.t_nodes, t);
    const std::size_t is1 = (k.s_nodes.size() == 1) ? is : is + 1;
    const std::size_t it1 = (nt == 1) ? it : it + 1;
    return (1.0 - ws) * ((1.0 - wt) * k.values[is * nt + it] + wt * k.values[is * nt + it1]) +
           ws * ((1.0 - wt) * k.values[is1 * nt + it] + wt * k.values[is1 * nt + it1]);
  }
  static Matrix eval(const SumKernel& k, double s, double t)
  {
    Matrix out = k.terms.front()(s, t);
    for (std::size_t i = 1; i < k.terms.size(); ++i) out += k.terms[i](s, t);
    return out;
  }

  static double eval_scalar(const ConstantKernel& k, double, double) { return k.value(0, 0); }
  static double eval_scalar(const DiscountedKernel& k, double s, double t)
  {
    return (s == t) ? k.base(0, 0) : k.base(0, 0) * std::exp(-k.rate * (s - t));
  }
  static double eval_scalar(const DifferenceKernel& k, double s, double t)
  {
    return k.slope(0, 0) * (s - t) + k.intercept(0, 0);
  }
  static double eval_scalar(const TableKernel& k, double s, double t) { return eval(k, s, t)(0, 0); }
  static double eval_scalar(const SumKernel& k, double s, double t)
  {
    double out = 0.0;
    for (const auto& term : k.terms) out += term.scalar(s, t);
    return out;
  }

  template <class F>
  static void visit_matrices(const ConstantKernel& k, F& fn) { fn(k.value); }
  template <class F>
  static void visit_matrices(const DiscountedKernel& k, F& fn) { fn(k.base); }
  template <class F>
  static void visit_matrices(const DifferenceKernel& k, F& fn) { fn(k.slope); fn(k.intercept); }
  template <class F>
  static void visit_matrices(const TableKernel& k, F& fn)
  {
    for (const auto& v : k.values) fn(v);
  }
  template <class F>
  static void visit_matrices(const SumKernel& k, F& fn)
  {
    for (const auto& t : k.terms) t.for_each_matrix(fn);
  }

  Variant v_;
  Index rows_ = 1;
  Index cols_ = 1;
};

}  // namespace tilq

#endif  // TILQ_KERNEL_HPP
