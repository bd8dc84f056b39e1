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

#include <tilq/equilibrium.hpp>
#include <tilq/fbsde_sim.hpp>
#include <tilq/scenarios.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace tilq {
namespace {

Strategy constant(const ProblemSpec& spec, double v) { return Strategy(spec.grid, 1, 1, v); }

TEST(SecondMoment, Trivial)
{
  const auto spec = detail::zero_spec({1, 1, 1}, 1.0, 20);
  const auto l = second_moment_factor(spec, constant(spec, 0.0));
  for (double v : l.raw()) EXPECT_EQ(v, 1.0);
}

TEST(SecondMoment, ConstantCoefficients)
{
  auto spec = detail::zero_spec({1, 1, 1}, 1.0, 50);
  spec.coeffs.A = TimeFunction::constant(0.1);
  spec.coeffs.B = TimeFunction::constant(0.5);
  spec.coeffs.C = TimeFunction::constant(0.3);
  spec.coeffs.D = TimeFunction::constant(1.0);
  const double th = -0.2, a = 0.1 + 0.5 * th, c = 0.3 + th;
  const auto l = second_moment_factor(spec, constant(spec, th));
  for (std::size_t i = 0; i <= 50; i += 5) {
    for (std::size_t j = i; j <= 50; j += 7) {
      const double dt = spec.grid.node(j) - spec.grid.node(i);
      EXPECT_NEAR(l.scalar(j, i), std::exp((2.0 * a + c * c) * dt), 1e-13);
    }
  }
}

TEST(SecondMoment, MonteCarloCrossCheck)
{
  const auto spec = smoke_spec(100);
  const auto th = constant(spec, -0.3);
  const auto l = second_moment_factor(spec, th);
  SimConfig cfg;
  cfg.paths = 20000;
  const OneTimeField p2(spec.grid, 1, 1);
  const auto b = simulate_closed_loop(spec, th, p2, cfg);
  std::vector<double> x2(cfg.paths);
  for (std::size_t p = 0; p < cfg.paths; ++p) x2[p] = std::pow(b.x(p, b.nodes() - 1)(0), 2);
  const auto est = detail::mean_stderr(x2);
  EXPECT_LE(std::abs(est.mean - l.scalar(100, 0)), 3.0 * est.stderr_) << est.mean << " vs " << l.scalar(100, 0);
}

TEST(P1Tilde, Oracles)
{
  auto spec = detail::zero_spec({1, 1, 1}, 1.0, 40);
  const auto th = constant(spec, 0.0);
  const auto p2 = p2_tilde_from_theta(spec, th);
  auto l = second_moment_factor(spec, th);
  const auto field = p1_tilde_from_theta(spec, th, p2, l);
  for (double v : field.raw()) EXPECT_EQ(v, 0.0);

  spec.weights.G1 = TimeFunction::constant(0.7);
  const auto terminal = p1_tilde_from_theta(spec, th, p2, l);
  for (double v : terminal.raw()) EXPECT_EQ(v, 0.7);

  spec.weights.G1 = TimeFunction::zero(1, 1);
  spec.weights.Q = Kernel::constant(1.0);
  const auto p1 = p1_tilde_from_theta(spec, th, p2, l);
  for (std::size_t i = 0; i <= 40; ++i) EXPECT_NEAR(p1.scalar(i), 1.0 - spec.grid.node(i), 1e-14);
}

TEST(FixedPointMap, TrivialZeroIsFixed)
{
  const auto spec = trivial_spec(50);
  const auto out = fixed_point_map(spec, constant(spec, 0.0), constant(spec, 0.0), Window{0, 50});
  for (double v : out.raw()) EXPECT_EQ(v, 0.0);
}

TEST(FixedPointMap, ContractsOnShortWindows)
{
  const auto spec = smoke_spec(400);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const Window w{300, 400};
  for (int rep = 0; rep < 5; ++rep) {
    Strategy a = constant(spec, 0.0), b = constant(spec, 0.0);
    for (std::size_t i = w.lo; i <= w.hi; ++i) {
      a.scalar(i) = u(gen);
      b.scalar(i) = a.scalar(i) + 0.1 * u(gen);
    }
    const auto fa = fixed_point_map(spec, a, a, w), fb = fixed_point_map(spec, b, b, w);
    EXPECT_LT(max_abs_diff(fa, fb), 0.5 * max_abs_diff(a, b));
  }
}

TEST(FixedPointMap, RejectsBadWindow)
{
  const auto spec = trivial_spec(10);
  EXPECT_THROW(fixed_point_map(spec, constant(spec, 0.0), constant(spec, 0.0), Window{5, 11}), std::invalid_argument);
  EXPECT_THROW(fixed_point_map(spec, constant(spec, 0.0), constant(spec, 0.0), Window{6, 5}), std::invalid_argument);
}

TEST(Solve, TrivialScenario)
{
  const auto spec = trivial_spec(200);
  const auto sol = solve_equilibrium(spec, constant(spec, 0.0));
  for (double v : sol.theta_star.raw()) EXPECT_EQ(v, 0.0);
  for (double v : sol.integral_state.p1_tilde.raw()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(sol.constraints.all_pass());
  for (const auto& w : sol.windows) EXPECT_EQ(w.iterations, 1u);
  EXPECT_EQ(sol.windows.front().hi, 200u);
  EXPECT_EQ(sol.windows.back().lo, 0u);
}

TEST(Solve, WindowsTileTheGrid)
{
  const auto spec = smoke_spec(300);
  const auto sol = solve_equilibrium(spec, constant(spec, 0.0));
  std::size_t expect_hi = 300;
  for (const auto& w : sol.windows) {
    EXPECT_EQ(w.hi, expect_hi);
    EXPECT_LE(w.lo, w.hi);
    EXPECT_LT(w.max_ratio, 0.5);
    EXPECT_LE(w.final_residual, 1e-10);
    if (w.lo == 0) break;
    expect_hi = w.lo - 1;
  }
  EXPECT_EQ(sol.windows.back().lo, 0u);
}

TEST(Solve, SmokeInvariants)
{
  const auto spec = smoke_spec(400);
  SolverConfig cfg;
  const auto sol = solve_equilibrium(spec, constant(spec, 0.0), cfg);
  EXPECT_TRUE(sol.assumption.pass);
  EXPECT_TRUE(sol.constraints.all_pass());
  EXPECT_LE(sol.fixed_point_residual, cfg.fp_tolerance);
  double p1_sup = 0.0;
  for (double v : sol.integral_state.p1_tilde.raw()) {
    EXPECT_GE(v, -1e-12);
    p1_sup = std::max(p1_sup, v);
  }
  EXPECT_LE(sol.consistency_error, 1e-6 * (1.0 + p1_sup));
  const auto res = characterization_residual(spec, sol.theta_star, sol.riccati);
  EXPECT_LE(res.sup_norm(), 1e-6 * (1.0 + sol.theta_star.sup_norm()));
  const auto terms = feedback_terms(spec, sol.riccati.p1_diag, sol.riccati.p3_diag, sol.riccati.p2);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) EXPECT_GE(terms.lambda.scalar(i), sol.assumption.value);
  EXPECT_TRUE(sol.floor_nodes.empty());
}

TEST(Solve, Theta0Independent)
{
  const auto spec = smoke_spec(300);
  const auto a = solve_equilibrium(spec, constant(spec, 0.0));
  const auto b = solve_equilibrium(spec, constant(spec, 5.0));
  EXPECT_LE(max_abs_diff(a.theta_star, b.theta_star), 10.0 * 1e-10);
}

TEST(Solve, WindowRefinementInvariant)
{
  const auto spec = smoke_spec(300);
  SolverConfig a_cfg, b_cfg;
  a_cfg.initial_window = 0.25;
  b_cfg.initial_window = 0.125;
  const auto a = solve_equilibrium(spec, constant(spec, 0.0), a_cfg);
  const auto b = solve_equilibrium(spec, constant(spec, 0.0), b_cfg);
  EXPECT_GT(b.windows.size(), a.windows.size());
  EXPECT_LE(max_abs_diff(a.theta_star, b.theta_star), 10.0 * 1e-10);
}

TEST(Solve, DampingKeepsFixedPoint)
{
  const auto spec = smoke_spec(200);
  SolverConfig cfg;
  cfg.damping = 0.7;
  const auto a = solve_equilibrium(spec, constant(spec, 0.0));
  const auto b = solve_equilibrium(spec, constant(spec, 0.0), cfg);
  EXPECT_LE(max_abs_diff(a.theta_star, b.theta_star), 1e-9);
}

TEST(Solve, AssumptionEnforced)
{
  const auto spec = example25_spec(50);
  try {
    solve_equilibrium(spec, constant(spec, 0.0));
    FAIL() << "expected AssumptionViolated";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::AssumptionViolated);
  }
  SolverConfig cfg;
  cfg.enforce_assumption = false;
  const auto sol = solve_equilibrium(spec, constant(spec, -0.5), cfg);
  EXPECT_FALSE(sol.assumption.pass);
  EXPECT_EQ(sol.floor_nodes.size(), 51u);
  for (double v : sol.theta_star.raw()) EXPECT_EQ(v, -0.5);
}

TEST(Solve, MultiDimensionalRejected)
{
  const auto spec = classical2d_spec(10);
  EXPECT_THROW(solve_equilibrium(spec, Strategy(spec.grid, 1, 2)), SolverError);
}

TEST(Solve, NoConvergenceReported)
{
  const auto spec = smoke_spec(100);
  SolverConfig cfg;
  cfg.max_iterations_per_window = 1;
  try {
    solve_equilibrium(spec, constant(spec, 0.0), cfg);
    FAIL() << "expected NoConvergence";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::NoConvergence);
  }
}

TEST(Solve, NonContractiveReported)
{
  const auto spec = smoke_spec(100);
  SolverConfig cfg;
  cfg.contraction_target = 1e-6;
  cfg.min_window_nodes = 50;
  try {
    solve_equilibrium(spec, constant(spec, 0.0), cfg);
    FAIL() << "expected NonContractive";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::NonContractive);
  }
}

TEST(Solve, ConfigValidated)
{
  const auto spec = smoke_spec(10);
  SolverConfig cfg;
  cfg.damping = 0.0;
  EXPECT_THROW(solve_equilibrium(spec, constant(spec, 0.0), cfg), std::invalid_argument);
  cfg = {};
  cfg.fp_tolerance = 0.0;
  EXPECT_THROW(solve_equilibrium(spec, constant(spec, 0.0), cfg), std::invalid_argument);
}

}  // namespace
}  // namespace tilq
