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

#ifndef TILQ_VERIFY_HPP
#define TILQ_VERIFY_HPP

/**
 * @file
 * @brief Named verification suites: the two branches of the singular
 * control-weight example, the classical (time-consistent) reduction and the
 * equilibrium checks of a computed solution.
 */

#include <tilq/equilibrium.hpp>
#include <tilq/fbsde_sim.hpp>
#include <tilq/problem.hpp>
#include <tilq/riccati.hpp>
#include <tilq/scenarios.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilq {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string note;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool pass() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }

  /// value <= bound
  void at_most(std::string name, double value, double bound, std::string note = {})
  {
    checks.push_back({std::move(name), value, bound, std::isfinite(value) && value <= bound, std::move(note)});
  }
  void require(std::string name, bool ok, double value = 0.0, std::string note = {})
  {
    checks.push_back({std::move(name), value, 0.0, ok, std::move(note)});
  }
  const CheckResult* find(const std::string& name) const
  {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline double sup_abs(const OneTimeField& f)
{
  double out = 0.0;
  for (double v : f.raw()) out = std::max(out, std::abs(v));
  return out;
}

inline Strategy constant_strategy(const ProblemSpec& spec, double value)
{
  return Strategy(spec.grid, spec.dims.k, spec.dims.n, value);
}

}  // namespace detail

/// Both branches of the singular-weight example at the given resolution.
struct Example25Result {
  EquilibriumSolution zero_branch;
  EquilibriumSolution half_branch;
  double p1_zero_error = 0.0;   ///< max |P1(t;t)| on the theta0 = 0 branch
  double p1_half_error = 0.0;   ///< max |P1(t;t) - closed form| on the theta0 = -1/2 branch
  double p1_half_at_zero = 0.0; ///< computed P1(0;0) on the theta0 = -1/2 branch
  double p1_half_expected = 0.0;
};

inline Example25Result run_example25(std::size_t grid_steps, const Kernel& Q = Kernel::constant(1.0))
{
  const ProblemSpec spec = example25_spec(grid_steps, Q);
  SolverConfig cfg;
  cfg.enforce_assumption = false;
  Example25Result out;
  out.zero_branch = solve_equilibrium(spec, detail::constant_strategy(spec, 0.0), cfg);
  out.half_branch = solve_equilibrium(spec, detail::constant_strategy(spec, -0.5), cfg);
  const double T = spec.grid.horizon();
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    out.p1_zero_error = std::max(out.p1_zero_error, std::abs(out.zero_branch.riccati.p1_diag.scalar(i)));
    const double want = example25_half_branch_p1(spec.weights.Q, spec.grid.node(i), T);
    out.p1_half_error = std::max(out.p1_half_error, std::abs(out.half_branch.riccati.p1_diag.scalar(i) - want));
  }
  out.p1_half_at_zero = out.half_branch.riccati.p1_diag.scalar(0);
  out.p1_half_expected = example25_half_branch_p1(spec.weights.Q, 0.0, T);
  return out;
}

inline SuiteReport suite_example_2_5(std::size_t grid_steps, const Kernel& Q = Kernel::constant(1.0))
{
  SuiteReport rep;
  rep.suite = "example25";
  const auto r = run_example25(grid_steps, Q);
  const std::size_t n = grid_steps;

  double dev0 = 0.0, dev_half = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    dev0 = std::max(dev0, std::abs(r.zero_branch.theta_star.scalar(i)));
    dev_half = std::max(dev_half, std::abs(r.half_branch.theta_star.scalar(i) + 0.5));
  }
  rep.at_most("zero_branch.theta_is_zero", dev0, 1e-12);
  rep.at_most("zero_branch.p1_diag_max_abs", r.p1_zero_error, 1e-6);
  const auto& c0 = r.zero_branch.constraints;
  rep.require("zero_branch.l2_membership", c0.l2_ok, c0.l2_sup);
  rep.require("zero_branch.range_inclusion", c0.range_pass(), c0.range_worst);
  rep.require("zero_branch.psd", c0.psd_pass(), c0.psd_worst);

  rep.at_most("half_branch.theta_is_minus_half", dev_half, 1e-12);
  rep.at_most("half_branch.p1_at_zero_error", std::abs(r.p1_half_at_zero - r.p1_half_expected), 1e-4,
              "expected " + std::to_string(r.p1_half_expected));
  rep.at_most("half_branch.p1_diag_error", r.p1_half_error, 1e-4);
  const auto& c1 = r.half_branch.constraints;
  std::size_t interior_fail = 0;
  for (std::size_t i = 1; i < n; ++i) interior_fail += c1.range_ok[i] ? 0 : 1;
  rep.require("half_branch.range_fails_at_interior_nodes", interior_fail == n - 1, static_cast<double>(interior_fail),
              "failing interior nodes out of " + std::to_string(n - 1));
  return rep;
}

/// Classical feedback from dP/ds + PA + A^T P + C^T P C + Q - S^T (R + D^T P D)^{-1} S = 0, S = B^T P + D^T P C.
struct ClassicalRiccati {
  std::vector<Matrix> P;
  std::vector<Matrix> theta;
};

inline ClassicalRiccati classical_riccati(const ProblemSpec& spec)
{
  const auto& c = spec.coeffs;
  const auto& w = spec.weights;
  const auto& g = spec.grid;
  const std::size_t n = g.steps();
  const double h = g.step();
  const double t_ref = 0.0;
  auto rhs = [&](double s, const Matrix& P) -> Matrix {
    const Matrix A = c.A(s), B = c.B(s), C = c.C(s), D = c.D(s);
    const Matrix S = B.transpose() * P + D.transpose() * P * C;
    const Matrix K = w.R(s, t_ref) + D.transpose() * P * D;
    const Matrix out = P * A + A.transpose() * P + C.transpose() * P * C + w.Q(s, t_ref) -
                       S.transpose() * K.ldlt().solve(S);
    return -out;
  };
  ClassicalRiccati out;
  out.P.resize(n + 1);
  out.theta.resize(n + 1);
  out.P[n] = w.G1(t_ref);
  for (std::size_t j = n; j-- > 0;) {
    const double s1 = g.node(j + 1), s0 = g.node(j), sm = 0.5 * (s0 + s1);
    const Matrix& y = out.P[j + 1];
    const Matrix k1 = rhs(s1, y);
    const Matrix k2 = rhs(sm, y - 0.5 * h * k1);
    const Matrix k3 = rhs(sm, y - 0.5 * h * k2);
    const Matrix k4 = rhs(s0, y - h * k3);
    const Matrix next = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.P[j] = 0.5 * (next + next.transpose());
  }
  for (std::size_t j = 0; j <= n; ++j) {
    const double s = g.node(j);
    const Matrix B = c.B(s), C = c.C(s), D = c.D(s);
    const Matrix& P = out.P[j];
    const Matrix K = w.R(s, t_ref) + D.transpose() * P * D;
    out.theta[j] = -K.ldlt().solve(Matrix(B.transpose() * P + D.transpose() * P * C));
  }
  return out;
}

/// Empty when the problem has no backward part and t-free weights; otherwise the reasons.
inline std::vector<std::string> classical_reduction_violations(const ProblemSpec& spec)
{
  std::vector<std::string> why;
  const auto& c = spec.coeffs;
  const auto& w = spec.weights;
  const auto& g = spec.grid;
  if (c.H.size() > 0 && c.H.cwiseAbs().maxCoeff() != 0.0) why.push_back("H is nonzero");
  auto zero_fn = [&](const TimeFunction& f, const char* name) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (f(g.node(i)).cwiseAbs().maxCoeff() != 0.0) {
        why.push_back(std::string(name) + " is nonzero");
        return;
      }
    }
  };
  zero_fn(c.Ahat, "Ahat");
  zero_fn(c.Bhat, "Bhat");
  zero_fn(c.Chat, "Chat");
  zero_fn(c.Dhat, "Dhat");
  zero_fn(w.G2, "G2");
  const auto nodes = detail::sample_nodes(g, 65);
  auto zero_kernel = [&](const Kernel& k, const char* name) {
    for (std::size_t a : nodes) {
      for (std::size_t b : nodes) {
        if (b > a) continue;
        if (k(g.node(a), g.node(b)).cwiseAbs().maxCoeff() != 0.0) {
          why.push_back(std::string(name) + " is nonzero");
          return;
        }
      }
    }
  };
  zero_kernel(w.M, "M");
  zero_kernel(w.N, "N");
  auto t_free = [&](const Kernel& k, const char* name) {
    for (std::size_t a : nodes) {
      const double s = g.node(a);
      const Matrix ref = k(s, 0.0);
      for (std::size_t b : nodes) {
        if (b > a) continue;
        if ((k(s, g.node(b)) - ref).cwiseAbs().maxCoeff() != 0.0) {
          why.push_back(std::string(name) + " depends on t");
          return;
        }
      }
    }
  };
  t_free(w.Q, "Q");
  t_free(w.R, "R");
  const Matrix g1 = w.G1(0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if ((w.G1(g.node(i)) - g1).cwiseAbs().maxCoeff() != 0.0) {
      why.push_back("G1 depends on t");
      break;
    }
  }
  return why;
}

inline SuiteReport suite_classical_reduction(const ProblemSpec& spec)
{
  const auto why = classical_reduction_violations(spec);
  if (!why.empty()) {
    std::string msg = "suite_classical_reduction: spec is not a classical reduction:";
    for (const auto& w : why) msg += " " + w + ";";
    throw std::invalid_argument(msg);
  }
  SuiteReport rep;
  rep.suite = "classical";
  const auto oracle = classical_riccati(spec);
  Strategy theta_cl(spec.grid, spec.dims.k, spec.dims.n);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) theta_cl.at(i) = oracle.theta[i];
  const double scale = 1.0 + detail::sup_abs(theta_cl);

  if (spec.dims.one_dim()) {
    SolverConfig cfg;
    cfg.enforce_assumption = false;
    const auto sol = solve_equilibrium(spec, detail::constant_strategy(spec, 0.0), cfg);
    double diff = 0.0;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      diff = std::max(diff, std::abs(sol.theta_star.scalar(i) - theta_cl.scalar(i)));
    }
    rep.at_most("theta_matches_classical_feedback", diff, 1e-6);
    const auto res = characterization_residual(spec, sol.theta_star, sol.riccati);
    rep.at_most("characterization_residual", detail::sup_abs(res), 1e-6 * (1.0 + detail::sup_abs(sol.theta_star)));
    double p_diff = 0.0;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      p_diff = std::max(p_diff, std::abs(sol.riccati.p1_diag.scalar(i) - oracle.P[i](0, 0)));
    }
    rep.at_most("p1_diag_matches_classical_riccati", p_diff, 1e-6 * (1.0 + oracle.P[0].cwiseAbs().maxCoeff()));
  } else {
    const auto fields = solve_riccati(spec, theta_cl);
    const auto res = characterization_residual(spec, theta_cl, fields);
    rep.at_most("characterization_residual", detail::sup_abs(res), 1e-6 * scale);
    double p_diff = 0.0, p_scale = 1.0;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      p_diff = std::max(p_diff, spectral_norm(Matrix(fields.p1_diag.at(i)) - oracle.P[i]));
      p_scale = std::max(p_scale, 1.0 + spectral_norm(oracle.P[i]));
    }
    rep.at_most("p1_diag_matches_classical_riccati", p_diff, 1e-6 * p_scale);
  }
  return rep;
}

struct EquilibriumSuiteOptions {
  bool spike = true;
  std::vector<double> times{0.0, 0.25, 0.5, 0.75};  ///< fractions of T
  SpikeSpec spike_spec{Vector::Ones(1), {1.0, -1.0, 2.0, -2.0}, default_epsilon_ladder()};
};

/// Simulation sub-steps needed so the smallest eps covers at least one step.
inline std::size_t sub_steps_for(const TimeGrid& grid, const std::vector<double>& eps, std::size_t requested)
{
  double smallest = grid.step();
  for (double e : eps) smallest = std::min(smallest, e);
  const auto need = static_cast<std::size_t>(std::ceil(grid.step() / smallest - 1e-9));
  return std::max<std::size_t>(std::max<std::size_t>(requested, 1), need);
}

inline SuiteReport suite_equilibrium(const ProblemSpec& spec, const EquilibriumSolution& sol, const SimConfig& sim_cfg,
                                     const EquilibriumSuiteOptions& opt = {})
{
  SuiteReport rep;
  rep.suite = "equilibrium";
  const auto& th = sol.theta_star;
  const auto res = characterization_residual(spec, th, sol.riccati);
  const double th_sup = detail::sup_abs(th);
  rep.at_most("characterization_residual", detail::sup_abs(res), 1e-6 * (1.0 + th_sup));
  const auto& c = sol.constraints;
  rep.require("l2_membership", c.l2_ok, c.l2_sup);
  rep.require("range_inclusion", c.range_pass(), c.range_worst);
  rep.require("psd", c.psd_pass(), c.psd_worst);
  double p1_sup = 0.0;
  if (!sol.integral_state.p1_tilde.raw().empty()) p1_sup = detail::sup_abs(sol.integral_state.p1_tilde);
  rep.at_most("consistency_p1_tilde_vs_riccati", sol.consistency_error, 1e-6 * (1.0 + p1_sup));

  if (opt.spike) {
    SimConfig cfg = sim_cfg;
    cfg.sub_steps = sub_steps_for(spec.grid, opt.spike_spec.epsilons, sim_cfg.sub_steps);
    for (double frac : opt.times) {
      cfg.t_start = spec.grid.nearest_node(frac * spec.grid.horizon());
      const auto sr = spike_test(spec, th, sol.riccati.p2, sol.riccati, cfg, opt.spike_spec);
      std::ostringstream tag;
      tag << "spike.t=" << sr.t;
      rep.require(tag.str() + ".all_delta_nonnegative", sr.all_nonnegative);
      rep.require(tag.str() + ".converges_to_expansion", sr.converges, sr.rows.empty() ? 0.0 : sr.rows.back().delta);
    }
  }
  return rep;
}

}  // namespace tilq

#endif  // TILQ_VERIFY_HPP
