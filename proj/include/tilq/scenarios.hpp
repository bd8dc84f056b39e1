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

#ifndef TILQ_SCENARIOS_HPP
#define TILQ_SCENARIOS_HPP

/**
 * @file
 * @brief Built-in problem instances.
 *
 * - example25: n = k = 1, A = D = 0, B = C = 1, R(s,t) = s - t, Q >= 0 and
 *   G1(t) = -int_t^T e^{-(T-r)} Q(r,t) dr; all backward data zero. The
 *   theta0 = 0 branch has P1(t;t) = 0, the theta0 = -1/2 branch violates
 *   the range condition.
 * - trivial: R = N = D = 1, everything else zero.
 * - smoke: a generic instance satisfying the 1-d positivity floor.
 * - classical1d / classical2d: no backward part and t-free weights.
 */

#include <tilq/fields.hpp>
#include <tilq/kernel.hpp>
#include <tilq/problem.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilq {

/// Gauss-Legendre on [a, b] with `panels` composite 8-point panels.
inline double gauss_integrate(const std::function<double(double)>& f, double a, double b, int panels = 64)
{
  static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                             0.9602898564975363};
  static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                             0.1012285362903763};
  if (b <= a) return 0.0;
  const double width = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    for (int i = 0; i < 4; ++i) acc += w[i] * half * (f(mid - half * x[i]) + f(mid + half * x[i]));
  }
  return acc;
}

struct NamedScenario {
  std::string name;
  ProblemSpec spec;
  double theta0 = 0.0;  ///< constant theta0 used by `solve` unless overridden
};

namespace detail {

inline Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

inline ProblemSpec zero_spec(Dimensions dims, double T, std::size_t steps)
{
  ProblemSpec s;
  s.dims = dims;
  s.grid = TimeGrid(T, steps);
  auto& c = s.coeffs;
  c.T = T;
  c.A = TimeFunction::zero(dims.n, dims.n);
  c.B = TimeFunction::zero(dims.n, dims.k);
  c.C = TimeFunction::zero(dims.n, dims.n);
  c.D = TimeFunction::zero(dims.n, dims.k);
  c.Ahat = TimeFunction::zero(dims.m, dims.n);
  c.Bhat = TimeFunction::zero(dims.m, dims.k);
  c.Chat = TimeFunction::zero(dims.m, dims.m);
  c.Dhat = TimeFunction::zero(dims.m, dims.m);
  c.H = Matrix::Zero(dims.m, dims.n);
  auto& w = s.weights;
  w.Q = Kernel::zero(dims.n, dims.n);
  w.R = Kernel::zero(dims.k, dims.k);
  w.M = Kernel::zero(dims.m, dims.m);
  w.N = Kernel::zero(dims.m, dims.m);
  w.G1 = TimeFunction::zero(dims.n, dims.n);
  w.G2 = TimeFunction::zero(dims.m, dims.m);
  return s;
}

}  // namespace detail

/// G1(t) = -int_t^T e^{-(T-r)} Q(r,t) dr; closed form for constant and discounted Q, tabulated on the grid otherwise.
inline TimeFunction example25_terminal_weight(const Kernel& Q, const TimeGrid& grid)
{
  const double T = grid.horizon();
  auto exp_term = [T](double rate, double base) {
    // base * e^{rate (u - T)}
    return TimeFunction(ExponentialFunction{rate, T, detail::mat1(base)});
  };
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double scale = 0.0;
  if (const auto* c = std::get_if<ConstantKernel>(&Q.variant())) {
    lambda = 0.0;
    scale = c->value(0, 0);
  } else if (const auto* d = std::get_if<DiscountedKernel>(&Q.variant())) {
    lambda = d->rate;
    scale = d->base(0, 0);
  }
  if (std::isfinite(lambda) && std::abs(lambda - 1.0) > 1e-12) {
    // -scale (e^{-lambda (T-t)} - e^{-(T-t)}) / (1 - lambda)
    const double k = scale / (1.0 - lambda);
    return TimeFunction(SumFunction{{exp_term(lambda, -k), exp_term(1.0, k)}});
  }
  TableFunction table;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    table.nodes.push_back(t);
    const double g = -gauss_integrate([&](double r) { return std::exp(-(T - r)) * Q.scalar(r, t); }, t, T);
    table.values.push_back(detail::mat1(g));
  }
  return TimeFunction(std::move(table));
}

/// Closed form of P1(t;t) on the theta0 = -1/2 branch: int_t^T (1 - e^{-(T-r)}) Q(r,t) dr + (T-t)^2 / 8.
inline double example25_half_branch_p1(const Kernel& Q, double t, double T)
{
  if (const auto* c = std::get_if<ConstantKernel>(&Q.variant())) {
    const double tau = T - t;
    return c->value(0, 0) * (tau - 1.0 + std::exp(-tau)) + tau * tau / 8.0;
  }
  return gauss_integrate([&](double r) { return (1.0 - std::exp(-(T - r))) * Q.scalar(r, t); }, t, T) +
         (T - t) * (T - t) / 8.0;
}

inline ProblemSpec example25_spec(std::size_t steps, Kernel Q = Kernel::constant(1.0), double T = 1.0)
{
  if (Q.rows() != 1 || Q.cols() != 1) throw std::invalid_argument("example25: Q must be scalar");
  ProblemSpec s = detail::zero_spec({1, 1, 1}, T, steps);
  s.coeffs.B = TimeFunction::constant(1.0);
  s.coeffs.C = TimeFunction::constant(1.0);
  s.weights.R = Kernel(DifferenceKernel{detail::mat1(1.0), detail::mat1(0.0)});
  s.weights.G1 = example25_terminal_weight(Q, s.grid);
  s.weights.Q = std::move(Q);
  return s;
}

inline ProblemSpec trivial_spec(std::size_t steps)
{
  ProblemSpec s = detail::zero_spec({1, 1, 1}, 1.0, steps);
  s.coeffs.D = TimeFunction::constant(1.0);
  s.weights.R = Kernel::constant(1.0);
  s.weights.N = Kernel::constant(1.0);
  return s;
}

inline ProblemSpec smoke_spec(std::size_t steps)
{
  ProblemSpec s = detail::zero_spec({1, 1, 1}, 1.0, steps);
  auto& c = s.coeffs;
  c.A = TimeFunction::constant(0.1);
  c.B = TimeFunction::constant(0.5);
  c.C = TimeFunction::constant(0.5);
  c.D = TimeFunction::constant(1.0);
  c.Ahat = TimeFunction::constant(0.2);
  c.Bhat = TimeFunction::constant(0.2);
  c.Chat = TimeFunction::constant(0.2);
  c.Dhat = TimeFunction::constant(0.2);
  c.H = detail::mat1(0.3);
  auto& w = s.weights;
  w.Q = Kernel::constant(0.5);
  w.M = Kernel::constant(0.5);
  w.R = Kernel(DifferenceKernel{detail::mat1(0.1), detail::mat1(1.0)});
  w.N = Kernel(DifferenceKernel{detail::mat1(0.1), detail::mat1(1.0)});
  w.G1 = TimeFunction::constant(0.4);
  w.G2 = TimeFunction::constant(0.3);
  return s;
}

inline ProblemSpec classical1d_spec(std::size_t steps)
{
  ProblemSpec s = detail::zero_spec({1, 1, 1}, 1.0, steps);
  s.coeffs.B = TimeFunction::constant(1.0);
  s.coeffs.D = TimeFunction::constant(1.0);
  s.weights.Q = Kernel::constant(1.0);
  s.weights.R = Kernel::constant(1.0);
  s.weights.G1 = TimeFunction::constant(1.0);
  return s;
}

inline ProblemSpec classical2d_spec(std::size_t steps)
{
  ProblemSpec s = detail::zero_spec({2, 1, 1}, 1.0, steps);
  Matrix A(2, 2), B(2, 1), C(2, 2), D(2, 1);
  A << 0.0, 0.5, -0.5, 0.1;
  B << 0.0, 1.0;
  C << 0.2, 0.0, 0.1, 0.2;
  D << 0.1, 0.3;
  s.coeffs.A = TimeFunction::constant(A);
  s.coeffs.B = TimeFunction::constant(B);
  s.coeffs.C = TimeFunction::constant(C);
  s.coeffs.D = TimeFunction::constant(D);
  Matrix Q(2, 2);
  Q << 1.0, 0.2, 0.2, 0.5;
  s.weights.Q = Kernel::constant(Q);
  s.weights.R = Kernel::constant(1.0);
  s.weights.G1 = TimeFunction::constant(Matrix(0.5 * Matrix::Identity(2, 2)));
  return s;
}

inline std::vector<std::string> builtin_names()
{
  return {"example25", "example25_half", "trivial", "smoke", "classical1d", "classical2d"};
}

inline NamedScenario builtin_scenario(const std::string& name, std::size_t steps = 1000)
{
  if (name == "example25") return {name, example25_spec(steps), 0.0};
  if (name == "example25_half") return {name, example25_spec(steps), -0.5};
  if (name == "trivial") return {name, trivial_spec(steps), 0.0};
  if (name == "smoke") return {name, smoke_spec(steps), 0.0};
  if (name == "classical1d") return {name, classical1d_spec(steps), 0.0};
  if (name == "classical2d") return {name, classical2d_spec(steps), 0.0};
  throw std::invalid_argument("unknown built-in scenario '" + name + "'");
}

}  // namespace tilq

#endif  // TILQ_SCENARIOS_HPP
