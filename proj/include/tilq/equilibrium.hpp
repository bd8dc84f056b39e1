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

#ifndef TILQ_EQUILIBRIUM_HPP
#define TILQ_EQUILIBRIUM_HPP

/**
 * @file
 * @brief Scalar (n = m = k = 1) equilibrium strategy by windowed Picard
 * iteration on the integral form of the Riccati system.
 *
 * With Ptil1(t) = P1(t;t) + P3(t;t) and Ptil2 = P2, a strategy Theta maps to
 *
 *   Ptil2(t) = H + int_t^T (alpha Ptil2 + Ahat_th) ds,   alpha = A_th + Chat + Dhat C_th
 *   Ptil1(t) = G1(t) L(T,t) + int_t^T [Q + Th^2 R + Ptil2^2 M + C_th^2 Ptil2^2 N](s,t) L(s,t) ds
 *   L(s,t)   = exp(int_t^s (2 A_th + C_th^2) dr)
 *
 * and the scalar feedback rule turns (Ptil1, Ptil2) back into a strategy.
 * [0, T] is tiled backward by windows short enough for the map to contract;
 * values on later windows are frozen while an earlier one iterates.
 */

#include <tilq/fields.hpp>
#include <tilq/parallel.hpp>
#include <tilq/problem.hpp>
#include <tilq/riccati.hpp>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilq {

struct SolverConfig {
  double fp_tolerance = 1e-10;
  std::size_t max_iterations_per_window = 200;
  double initial_window = 0.0;  ///< time units; <= 0 means T/4
  double contraction_target = 0.5;
  double damping = 1.0;
  std::size_t min_window_nodes = 1;
  bool enforce_assumption = true;
  double delta_floor = 1e-8;          ///< positivity floor demanded before solving
  double denominator_floor = 1e-14;   ///< below this the feedback falls back to theta0
  ConstraintTolerances constraint_tol;
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { NonContractive, NoConvergence, AssumptionViolated, NonFinite };

  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

  static const char* name(Kind k)
  {
    switch (k) {
      case Kind::NonContractive: return "NonContractive";
      case Kind::NoConvergence: return "NoConvergence";
      case Kind::AssumptionViolated: return "AssumptionViolated";
      case Kind::NonFinite: return "NonFinite";
    }
    return "Unknown";
  }

 private:
  Kind kind_;
};

struct IntegralState {
  OneTimeField p2_tilde;
  OneTimeField p1_tilde;
  TwoTimeField lambda_factor;
  Strategy theta;
};

struct WindowDiagnostics {
  std::size_t lo = 0;  ///< first node of the window
  std::size_t hi = 0;  ///< last node of the window
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t iterations = 0;
  std::size_t halvings = 0;
  double final_residual = 0.0;  ///< |F(theta) - theta| on the window after convergence
  double max_ratio = 0.0;       ///< largest measured diff_k / diff_{k-1}
  std::vector<double> ratios;
};

struct EquilibriumSolution {
  Strategy theta_star;
  Strategy theta0;
  IntegralState integral_state;
  RiccatiFields riccati;
  ConstraintReport constraints;
  std::vector<WindowDiagnostics> windows;
  std::vector<std::size_t> floor_nodes;  ///< nodes where the feedback used the theta0 fallback
  AssumptionReport assumption;
  double consistency_error = 0.0;  ///< max |Ptil1 - (P1 + P3)(t;t)|
  double fixed_point_residual = 0.0;
  double elapsed_seconds = 0.0;
};

/// Node window [lo, hi] of the backward tiling.
struct Window {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

namespace detail {

inline void require_one_dim(const ProblemSpec& spec, const char* who)
{
  if (!spec.dims.one_dim()) throw std::invalid_argument(std::string(who) + ": requires n = m = k = 1");
}

/// Node samples of every coefficient and triangle tables of the running weights.
class ScalarData {
 public:
  explicit ScalarData(const ProblemSpec& spec) : grid_(spec.grid), n_(spec.grid.steps()), h_(spec.grid.step())
  {
    const auto& c = spec.coeffs;
    const auto& w = spec.weights;
    const std::size_t sz = n_ + 1;
    for (auto* v : {&A, &B, &C, &D, &Ah, &Bh, &Ch, &Dh, &G1, &G2, &Rd, &Nd}) v->resize(sz);
    for (std::size_t i = 0; i < sz; ++i) {
      const double t = grid_.node(i);
      A[i] = c.A(t)(0, 0);
      B[i] = c.B(t)(0, 0);
      C[i] = c.C(t)(0, 0);
      D[i] = c.D(t)(0, 0);
      Ah[i] = c.Ahat(t)(0, 0);
      Bh[i] = c.Bhat(t)(0, 0);
      Ch[i] = c.Chat(t)(0, 0);
      Dh[i] = c.Dhat(t)(0, 0);
      G1[i] = w.G1(t)(0, 0);
      G2[i] = w.G2(t)(0, 0);
      Rd[i] = w.R.scalar(t, t);
      Nd[i] = w.N.scalar(t, t);
    }
    H = c.H(0, 0);
    const std::size_t cells = sz * (sz + 1) / 2;
    for (auto* v : {&Q, &R, &M, &N}) v->resize(cells);
    parallel_for(0, sz, [&](std::size_t i) {
      const double t = grid_.node(i);
      const std::size_t base = row(i);
      for (std::size_t j = i; j < sz; ++j) {
        const double s = grid_.node(j);
        Q[base + j - i] = w.Q.scalar(s, t);
        R[base + j - i] = w.R.scalar(s, t);
        M[base + j - i] = w.M.scalar(s, t);
        N[base + j - i] = w.N.scalar(s, t);
      }
    }, 16);
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t steps() const { return n_; }
  double step() const { return h_; }
  std::size_t row(std::size_t i) const { return i * (n_ + 1) - i * (i - 1) / 2; }

  std::vector<double> A, B, C, D, Ah, Bh, Ch, Dh, G1, G2, Rd, Nd;
  std::vector<double> Q, R, M, N;  ///< (s_j, t_i) at row(i) + j - i
  double H = 0.0;

 private:
  TimeGrid grid_;
  std::size_t n_;
  double h_;
};

/// Ptil2 on nodes [lo, N] by the implicit trapezoid rule.
inline void p2_tilde_scalar(const ScalarData& d, const std::vector<double>& th, std::size_t lo, std::vector<double>& p2)
{
  const std::size_t n = d.steps();
  const double h = d.step();
  p2.resize(n + 1);
  auto alpha = [&](std::size_t j) {
    const double ct = d.C[j] + d.D[j] * th[j];
    return d.A[j] + d.B[j] * th[j] + d.Ch[j] + d.Dh[j] * ct;
  };
  auto beta = [&](std::size_t j) { return d.Ah[j] + d.Bh[j] * th[j]; };
  p2[n] = d.H;
  double a1 = alpha(n), b1 = beta(n);
  for (std::size_t j = n; j-- > lo;) {
    const double a0 = alpha(j), b0 = beta(j);
    p2[j] = (p2[j + 1] * (1.0 + 0.5 * h * a1) + 0.5 * h * (b0 + b1)) / (1.0 - 0.5 * h * a0);
    a1 = a0;
    b1 = b0;
  }
}

/// Cumulative trapezoid exponent E_j of 2 A_th + C_th^2 with E_lo = 0.
inline void exponent_scalar(const ScalarData& d, const std::vector<double>& th, std::size_t lo, std::vector<double>& e)
{
  const std::size_t n = d.steps();
  const double h = d.step();
  e.assign(n + 1, 0.0);
  auto rate = [&](std::size_t j) {
    const double ct = d.C[j] + d.D[j] * th[j];
    return 2.0 * (d.A[j] + d.B[j] * th[j]) + ct * ct;
  };
  double r0 = rate(lo);
  for (std::size_t j = lo; j < n; ++j) {
    const double r1 = rate(j + 1);
    e[j + 1] = e[j] + 0.5 * h * (r0 + r1);
    r0 = r1;
  }
}

/// Ptil1 at nodes [lo, hi] given Ptil2 and the exponent on [lo, N].
inline void p1_tilde_scalar(const ScalarData& d, const std::vector<double>& th, const std::vector<double>& p2,
                            const std::vector<double>& e, std::size_t lo, std::size_t hi, std::vector<double>& p1)
{
  const std::size_t n = d.steps();
  const double h = d.step();
  p1.resize(n + 1);
  parallel_for(lo, hi + 1, [&](std::size_t i) {
    const std::size_t base = d.row(i);
    auto integrand = [&](std::size_t j) {
      const std::size_t c = base + j - i;
      const double ct = d.C[j] + d.D[j] * th[j];
      const double q2 = p2[j] * p2[j];
      return (d.Q[c] + th[j] * th[j] * d.R[c] + q2 * d.M[c] + ct * ct * q2 * d.N[c]) * std::exp(e[j] - e[i]);
    };
    double acc = 0.0;
    if (i < n) {
      acc = 0.5 * integrand(i) + 0.5 * integrand(n);
      for (std::size_t j = i + 1; j < n; ++j) acc += integrand(j);
      acc *= h;
    }
    p1[i] = d.G1[i] * std::exp(e[n] - e[i]) + acc;
  }, 32);
}

struct MapResult {
  double max_change = 0.0;
  std::vector<std::size_t> floor_nodes;
};

/// Applies the scalar feedback rule on [lo, hi]; writes into out (other nodes untouched).
inline MapResult feedback_scalar(const ScalarData& d, const std::vector<double>& th, const std::vector<double>& th0,
                                 const std::vector<double>& p1, const std::vector<double>& p2, std::size_t lo,
                                 std::size_t hi, double floor, std::vector<double>& out)
{
  MapResult res;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double q2 = p2[i] * p2[i];
    const double den = d.Rd[i] + d.D[i] * d.D[i] * (p1[i] + q2 * d.Nd[i]);
    const double num = (d.B[i] + d.D[i] * d.C[i]) * p1[i] + d.Bh[i] * d.G2[i] * p2[i] +
                       (d.D[i] * d.C[i] * d.Nd[i] + (d.B[i] + d.D[i] * d.Dh[i]) * d.G2[i]) * q2;
    double next;
    if (std::abs(den) > floor) {
      next = -num / den;
    } else {
      next = th0[i];
      res.floor_nodes.push_back(i);
    }
    if (!std::isfinite(next)) {
      throw SolverError(SolverError::Kind::NonFinite,
                        "fixed-point map produced a non-finite value at t = " + std::to_string(d.grid().node(i)));
    }
    res.max_change = std::max(res.max_change, std::abs(next - th[i]));
    out[i] = next;
  }
  return res;
}

inline std::vector<double> scalars(const OneTimeField& f)
{
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) v[i] = f.scalar(i);
  return v;
}

inline OneTimeField scalar_field(const TimeGrid& g, const std::vector<double>& v)
{
  OneTimeField f(g, 1, 1);
  for (std::size_t i = 0; i < f.size(); ++i) f.scalar(i) = v[i];
  return f;
}

}  // namespace detail

/// L(s,t) = exp(int_t^s (2 A_th + C_th^2)), the second moment of the scalar transition.
inline TwoTimeField second_moment_factor(const ProblemSpec& spec, const Strategy& theta)
{
  detail::require_one_dim(spec, "second_moment_factor");
  detail::check_strategy(spec, theta, "second_moment_factor");
  const detail::ScalarData d(spec);
  std::vector<double> e;
  detail::exponent_scalar(d, detail::scalars(theta), 0, e);
  TwoTimeField out(spec.grid, 1, 1);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    out.scalar(i, i) = 1.0;
    for (std::size_t j = i + 1; j < spec.grid.size(); ++j) out.scalar(j, i) = std::exp(e[j] - e[i]);
  }
  return out;
}

inline OneTimeField p2_tilde_from_theta(const ProblemSpec& spec, const Strategy& theta)
{
  detail::require_one_dim(spec, "p2_tilde_from_theta");
  detail::check_strategy(spec, theta, "p2_tilde_from_theta");
  const detail::ScalarData d(spec);
  std::vector<double> p2;
  detail::p2_tilde_scalar(d, detail::scalars(theta), 0, p2);
  return detail::scalar_field(spec.grid, p2);
}

inline OneTimeField p1_tilde_from_theta(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2_tilde,
                                        const TwoTimeField& lambda)
{
  detail::require_one_dim(spec, "p1_tilde_from_theta");
  detail::check_strategy(spec, theta, "p1_tilde_from_theta");
  const detail::ScalarData d(spec);
  const auto th = detail::scalars(theta);
  const auto p2 = detail::scalars(p2_tilde);
  const std::size_t n = spec.grid.steps();
  const double h = spec.grid.step();
  std::vector<double> p1(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const std::size_t base = d.row(i);
    auto integrand = [&](std::size_t j) {
      const std::size_t c = base + j - i;
      const double ct = d.C[j] + d.D[j] * th[j];
      const double q2 = p2[j] * p2[j];
      return (d.Q[c] + th[j] * th[j] * d.R[c] + q2 * d.M[c] + ct * ct * q2 * d.N[c]) * lambda.scalar(j, i);
    };
    double acc = 0.0;
    if (i < n) {
      acc = 0.5 * integrand(i) + 0.5 * integrand(n);
      for (std::size_t j = i + 1; j < n; ++j) acc += integrand(j);
      acc *= h;
    }
    p1[i] = d.G1[i] * lambda.scalar(n, i) + acc;
  }
  return detail::scalar_field(spec.grid, p1);
}

/// One application of the map on the window; nodes outside the window are copied from theta.
inline Strategy fixed_point_map(const ProblemSpec& spec, const Strategy& theta, const Strategy& theta0, Window window,
                                double denominator_floor = SolverConfig{}.denominator_floor)
{
  detail::require_one_dim(spec, "fixed_point_map");
  detail::check_strategy(spec, theta, "fixed_point_map");
  detail::check_strategy(spec, theta0, "fixed_point_map");
  if (window.lo > window.hi || window.hi > spec.grid.steps()) throw std::invalid_argument("fixed_point_map: bad window");
  const detail::ScalarData d(spec);
  const auto th = detail::scalars(theta);
  const auto th0 = detail::scalars(theta0);
  std::vector<double> p2, e, p1;
  detail::p2_tilde_scalar(d, th, window.lo, p2);
  detail::exponent_scalar(d, th, window.lo, e);
  detail::p1_tilde_scalar(d, th, p2, e, window.lo, window.hi, p1);
  std::vector<double> out = th;
  detail::feedback_scalar(d, th, th0, p1, p2, window.lo, window.hi, denominator_floor, out);
  return detail::scalar_field(spec.grid, out);
}

/// Riccati fields, constraints and consistency for a given scalar strategy.
inline EquilibriumSolution assemble_solution(const ProblemSpec& spec, const Strategy& theta, const Strategy& theta0,
                                             const SolverConfig& cfg = {})
{
  detail::require_one_dim(spec, "assemble_solution");
  EquilibriumSolution sol;
  sol.theta_star = theta;
  sol.theta0 = theta0;
  const detail::ScalarData d(spec);
  const auto th = detail::scalars(theta);
  const auto th0 = detail::scalars(theta0);
  std::vector<double> p2, e, p1;
  detail::p2_tilde_scalar(d, th, 0, p2);
  detail::exponent_scalar(d, th, 0, e);
  detail::p1_tilde_scalar(d, th, p2, e, 0, spec.grid.steps(), p1);
  std::vector<double> image = th;
  const auto map = detail::feedback_scalar(d, th, th0, p1, p2, 0, spec.grid.steps(), cfg.denominator_floor, image);
  sol.fixed_point_residual = map.max_change;
  sol.floor_nodes = map.floor_nodes;

  sol.integral_state.theta = theta;
  sol.integral_state.p2_tilde = detail::scalar_field(spec.grid, p2);
  sol.integral_state.p1_tilde = detail::scalar_field(spec.grid, p1);
  sol.integral_state.lambda_factor = second_moment_factor(spec, theta);

  sol.riccati = solve_riccati(spec, theta);
  sol.constraints = check_constraints(spec, sol.riccati.p1_diag, sol.riccati.p3_diag, sol.riccati.p2, cfg.constraint_tol);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double diff = std::abs(p1[i] - sol.riccati.p1_diag.scalar(i) - sol.riccati.p3_diag.scalar(i));
    sol.consistency_error = std::max(sol.consistency_error, diff);
  }
  return sol;
}

/// Windowed Picard iteration from theta = 0 on each fresh window.
inline EquilibriumSolution solve_equilibrium(const ProblemSpec& spec, const Strategy& theta0, const SolverConfig& cfg = {})
{
  const auto started = std::chrono::steady_clock::now();
  if (!spec.dims.one_dim()) {
    throw SolverError(SolverError::Kind::AssumptionViolated, "equilibrium solver requires n = m = k = 1");
  }
  detail::check_strategy(spec, theta0, "solve_equilibrium");
  if (!(cfg.fp_tolerance > 0.0)) throw std::invalid_argument("solve_equilibrium: fp_tolerance must be positive");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw std::invalid_argument("solve_equilibrium: damping must lie in (0, 1]");
  if (!(cfg.contraction_target > 0.0 && cfg.contraction_target < 1.0)) {
    throw std::invalid_argument("solve_equilibrium: contraction_target must lie in (0, 1)");
  }

  AssumptionReport assumption = check_one_dim_positivity(spec, cfg.delta_floor);
  if (!assumption.pass && cfg.enforce_assumption) {
    std::string why = "positivity assumption failed";
    for (const auto& note : assumption.notes) why += "; " + note;
    throw SolverError(SolverError::Kind::AssumptionViolated, why);
  }

  const detail::ScalarData d(spec);
  const std::size_t n = spec.grid.steps();
  const double h = spec.grid.step();
  const auto th0 = detail::scalars(theta0);
  std::vector<double> th(n + 1, 0.0), next(n + 1, 0.0), p2, e, p1;

  const double window_time = cfg.initial_window > 0.0 ? cfg.initial_window : 0.25 * spec.grid.horizon();
  std::size_t width = static_cast<std::size_t>(std::llround(window_time / h));
  width = std::max<std::size_t>(width, std::max<std::size_t>(cfg.min_window_nodes, 1));

  std::vector<WindowDiagnostics> windows;
  std::vector<std::size_t> floor_nodes;
  std::size_t hi = n;
  bool done = false;
  while (!done) {
    WindowDiagnostics diag;
    bool accepted = false;
    while (!accepted) {
      // first window holds node N plus `width` earlier nodes
      const std::size_t span = (hi == n) ? width : width - 1;
      const std::size_t lo = (hi >= span) ? hi - span : 0;
      for (std::size_t i = lo; i <= hi; ++i) th[i] = 0.0;
      next = th;
      diag.lo = lo;
      diag.hi = hi;
      diag.ratios.clear();
      diag.max_ratio = 0.0;
      double prev = std::numeric_limits<double>::infinity();
      bool contractive = true, converged = false;
      std::size_t it = 0;
      for (; it < cfg.max_iterations_per_window; ++it) {
        detail::p2_tilde_scalar(d, th, lo, p2);
        detail::exponent_scalar(d, th, lo, e);
        detail::p1_tilde_scalar(d, th, p2, e, lo, hi, p1);
        const auto map = detail::feedback_scalar(d, th, th0, p1, p2, lo, hi, cfg.denominator_floor, next);
        const double diff = map.max_change;
        for (std::size_t i = lo; i <= hi; ++i) th[i] = (1.0 - cfg.damping) * th[i] + cfg.damping * next[i];
        if (std::isfinite(prev) && prev > 1e-13) {
          const double ratio = diff / prev;
          diag.ratios.push_back(ratio);
          diag.max_ratio = std::max(diag.max_ratio, ratio);
          if (ratio >= cfg.contraction_target && diff > cfg.fp_tolerance) {
            contractive = false;
            ++it;
            break;
          }
        }
        prev = diff;
        if (diff <= cfg.fp_tolerance) {
          converged = true;
          ++it;
          break;
        }
      }
      diag.iterations = it;
      if (!contractive) {
        if (width / 2 < std::max<std::size_t>(cfg.min_window_nodes, 1)) {
          throw SolverError(SolverError::Kind::NonContractive,
                            "no contracting window at t = " + std::to_string(spec.grid.node(hi)) +
                                " (ratio " + std::to_string(diag.max_ratio) + ")");
        }
        width /= 2;
        ++diag.halvings;
        continue;
      }
      if (!converged) {
        throw SolverError(SolverError::Kind::NoConvergence,
                          "window ending at t = " + std::to_string(spec.grid.node(hi)) + " did not converge in " +
                              std::to_string(cfg.max_iterations_per_window) + " iterations");
      }
      // residual of the accepted iterate
      detail::p2_tilde_scalar(d, th, lo, p2);
      detail::exponent_scalar(d, th, lo, e);
      detail::p1_tilde_scalar(d, th, p2, e, lo, hi, p1);
      std::vector<double> probe = th;
      const auto fin = detail::feedback_scalar(d, th, th0, p1, p2, lo, hi, cfg.denominator_floor, probe);
      diag.final_residual = fin.max_change;
      floor_nodes.insert(floor_nodes.end(), fin.floor_nodes.begin(), fin.floor_nodes.end());
      accepted = true;
    }
    diag.t_lo = spec.grid.node(diag.lo);
    diag.t_hi = spec.grid.node(diag.hi);
    windows.push_back(diag);
    if (diag.lo == 0) {
      done = true;
    } else {
      hi = diag.lo - 1;
    }
  }

  EquilibriumSolution sol = assemble_solution(spec, detail::scalar_field(spec.grid, th), theta0, cfg);
  sol.windows = std::move(windows);
  sol.assumption = assumption;
  sol.floor_nodes = std::move(floor_nodes);
  double worst = 0.0;
  for (const auto& w : sol.windows) worst = std::max(worst, w.final_residual);
  sol.fixed_point_residual = worst;
  sol.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sol;
}

}  // namespace tilq

#endif  // TILQ_EQUILIBRIUM_HPP
