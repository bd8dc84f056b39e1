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

#include <tilq/riccati.hpp>
#include <tilq/scenarios.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace tilq {
namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

Strategy constant(const ProblemSpec& spec, double v) { return Strategy(spec.grid, spec.dims.k, spec.dims.n, v); }

double diag_error_half_branch(std::size_t steps, const Kernel& q)
{
  const auto spec = example25_spec(steps, q);
  const auto f = solve_riccati(spec, constant(spec, -0.5));
  double err = 0.0;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double want = example25_half_branch_p1(q, spec.grid.node(i), 1.0);
    err = std::max(err, std::abs(f.p1_diag.scalar(i) - want));
  }
  return err;
}

TEST(SolveP2, ZeroData)
{
  const auto spec = smoke_spec(20);
  auto z = detail::zero_spec({1, 1, 1}, 1.0, 20);
  const auto p2 = solve_p2(z, constant(z, 0.7));
  for (double v : p2.raw()) EXPECT_EQ(v, 0.0);
  (void)spec;
}

TEST(SolveP2, LinearInTime)
{
  auto spec = detail::zero_spec({1, 1, 1}, 1.0, 40);
  spec.coeffs.Ahat = TimeFunction::constant(0.8);
  spec.coeffs.H = m1(0.3);
  const auto p2 = solve_p2(spec, constant(spec, 0.0));
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    EXPECT_NEAR(p2.scalar(i), 0.3 + 0.8 * (1.0 - spec.grid.node(i)), 1e-14);
  }
  EXPECT_EQ(p2.scalar(40), 0.3);
}

TEST(SolveP2, ExponentialOracle)
{
  // dP2/ds + a P2 + b = 0, P2(T) = h0
  auto spec = detail::zero_spec({1, 1, 1}, 1.0, 100);
  spec.coeffs.Chat = TimeFunction::constant(0.7);
  spec.coeffs.Ahat = TimeFunction::constant(0.4);
  spec.coeffs.H = m1(0.2);
  const auto p2 = solve_p2(spec, constant(spec, 0.0));
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double tau = 1.0 - spec.grid.node(i);
    const double want = (0.2 + 0.4 / 0.7) * std::exp(0.7 * tau) - 0.4 / 0.7;
    EXPECT_NEAR(p2.scalar(i), want, 1e-9);
  }
}

TEST(SolveP2, SingularExampleVanishes)
{
  const auto spec = example25_spec(50);
  const auto field = solve_p2(spec, constant(spec, -0.5));
  for (double v : field.raw()) EXPECT_EQ(v, 0.0);
}

TEST(SolveP1, ZeroWeights)
{
  auto spec = detail::zero_spec({1, 1, 1}, 1.0, 20);
  spec.coeffs.A = TimeFunction::constant(0.3);
  spec.coeffs.C = TimeFunction::constant(0.5);
  const auto field = solve_p1(spec, constant(spec, 0.2));
  for (double v : field.raw()) EXPECT_EQ(v, 0.0);
}

TEST(SolveP1, SingularExampleZeroBranch)
{
  const auto spec = example25_spec(1000);
  const auto f = solve_riccati(spec, constant(spec, 0.0));
  double worst = 0.0;
  for (double v : f.p1_diag.raw()) worst = std::max(worst, std::abs(v));
  EXPECT_LE(worst, 1e-10);
}

TEST(SolveP1, SingularExampleHalfBranch)
{
  const auto spec = example25_spec(200);
  const auto f = solve_riccati(spec, constant(spec, -0.5));
  EXPECT_NEAR(f.p1_diag.scalar(0), std::exp(-1.0) + 0.125, 1e-10);
}

TEST(SolveP1, FourthOrderOnSmoothData)
{
  const Kernel q(DiscountedKernel{8.0, m1(1.0)});
  const double coarse = diag_error_half_branch(50, q);
  const double fine = diag_error_half_branch(100, q);
  EXPECT_GT(coarse, 0.0);
  EXPECT_GE(coarse / fine, 12.0) << coarse << " " << fine;
  EXPECT_LE(coarse / fine, 20.0) << coarse << " " << fine;
}

TEST(SolveP1, TerminalValuesExact)
{
  const auto spec = smoke_spec(30);
  const auto f = solve_riccati(spec, constant(spec, -0.3));
  for (std::size_t t = 0; t <= 30; ++t) {
    EXPECT_EQ(f.p1.scalar(30, t), spec.weights.G1(spec.grid.node(t))(0, 0));
    EXPECT_EQ(f.p3.scalar(30, t), 0.0);
  }
  EXPECT_EQ(f.p2.scalar(30), spec.coeffs.H(0, 0));
}

TEST(SolveP1, LinearInWeights)
{
  auto a = classical2d_spec(40);
  auto b = classical2d_spec(40);
  Matrix q2(2, 2);
  q2 << 0.3, -0.1, -0.1, 0.8;
  b.weights.Q = Kernel(DiscountedKernel{1.5, q2});
  b.weights.R = Kernel(DifferenceKernel{m1(0.2), m1(0.5)});
  b.weights.G1 = TimeFunction(AffineFunction{Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2)});
  auto sum = classical2d_spec(40);
  sum.weights.Q = Kernel(SumKernel{{a.weights.Q, b.weights.Q}});
  sum.weights.R = Kernel(SumKernel{{a.weights.R, b.weights.R}});
  sum.weights.G1 = TimeFunction(SumFunction{{a.weights.G1, b.weights.G1}});
  Strategy th(a.grid, 1, 2);
  for (std::size_t i = 0; i < a.grid.size(); ++i) th.at(i) << -0.2 * a.grid.node(i), 0.4;
  const auto pa = solve_p1(a, th), pb = solve_p1(b, th), ps = solve_p1(sum, th);
  double worst = 0.0;
  for (std::size_t j = 0; j < ps.raw().size(); ++j) worst = std::max(worst, std::abs(ps.raw()[j] - pa.raw()[j] - pb.raw()[j]));
  EXPECT_LE(worst, 1e-12);
}

TEST(SolveP1, SymmetricAtEveryNode)
{
  const auto spec = classical2d_spec(30);
  Strategy th(spec.grid, 1, 2);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) th.at(i) << 0.3, -0.7;
  const auto f = solve_riccati(spec, th);
  for (std::size_t t = 0; t <= 30; ++t) {
    for (std::size_t s = t; s <= 30; ++s) {
      const Matrix p = f.p1.at(s, t);
      EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + p.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(SolveP1, MatrixPathMatchesScalarPath)
{
  // a 1-d problem integrated through the dynamic-size code path
  const auto spec = smoke_spec(40);
  const auto th = constant(spec, -0.25);
  const auto ref = solve_riccati(spec, th);
  const auto st = detail::build_stages<Matrix>(spec, th);
  const auto p1 = detail::solve_p1_impl(spec, st);
  for (std::size_t j = 0; j < p1.raw().size(); ++j) EXPECT_NEAR(p1.raw()[j], ref.p1.raw()[j], 1e-13);
}

TEST(SolveP3, VanishesWithoutSource)
{
  auto spec = smoke_spec(20);
  spec.weights.M = Kernel::zero(1, 1);
  spec.weights.N = Kernel::zero(1, 1);
  const auto th = constant(spec, 0.1);
  const auto field = solve_p3(spec, th, solve_p2(spec, th));
  for (double v : field.raw()) EXPECT_EQ(v, 0.0);
  const auto spec2 = smoke_spec(20);
  const OneTimeField zero(spec2.grid, 1, 1);
  const auto unforced = solve_p3(spec2, th, zero);
  for (double v : unforced.raw()) EXPECT_EQ(v, 0.0);
}

TEST(SolveP3, UnitSourceGivesRemainingTime)
{
  auto spec = detail::zero_spec({1, 1, 1}, 1.0, 25);
  spec.weights.M = Kernel::constant(1.0);
  spec.weights.N = Kernel::constant(3.0);
  const OneTimeField p2(spec.grid, 1, 1, 1.0);
  const auto p3 = solve_p3(spec, constant(spec, 0.0), p2);
  for (std::size_t i = 0; i <= 25; ++i) EXPECT_NEAR(p3.scalar(i, i), 1.0 - spec.grid.node(i), 1e-14);
}

TEST(FeedbackMap, SingularExampleBranches)
{
  const auto spec = example25_spec(100);
  for (double th0 : {0.0, -0.5}) {
    const auto f = solve_riccati(spec, constant(spec, th0));
    const auto th = feedback_map(spec, f.p1_diag, f.p3_diag, f.p2, constant(spec, th0));
    for (std::size_t i = 0; i < spec.grid.size(); ++i) EXPECT_NEAR(th.scalar(i), th0, 1e-12);
    const auto terms = feedback_terms(spec, f.p1_diag, f.p3_diag, f.p2);
    for (double v : terms.lambda.raw()) EXPECT_EQ(v, 0.0);
  }
}

TEST(FeedbackMap, InvertibleLambdaIgnoresTheta0)
{
  const auto spec = smoke_spec(40);
  const auto f = solve_riccati(spec, constant(spec, 0.1));
  const auto a = feedback_map(spec, f.p1_diag, f.p3_diag, f.p2, constant(spec, 0.0));
  const auto b = feedback_map(spec, f.p1_diag, f.p3_diag, f.p2, constant(spec, 5.0));
  EXPECT_LE(max_abs_diff(a, b), 1e-12);
}

TEST(Constraints, SingularExample)
{
  const auto spec = example25_spec(100);
  const auto f0 = solve_riccati(spec, constant(spec, 0.0));
  const auto r0 = check_constraints(spec, f0.p1_diag, f0.p3_diag, f0.p2);
  EXPECT_TRUE(r0.all_pass());
  const auto f1 = solve_riccati(spec, constant(spec, -0.5));
  const auto r1 = check_constraints(spec, f1.p1_diag, f1.p3_diag, f1.p2);
  EXPECT_FALSE(r1.range_pass());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_FALSE(r1.range_ok[i]) << i;
  EXPECT_TRUE(r1.range_ok[100]);
  EXPECT_TRUE(r1.psd_pass());
  EXPECT_EQ(r1.range_failures, 100u);
}

TEST(Constraints, NegativeLambdaFailsPsd)
{
  auto spec = trivial_spec(10);
  spec.weights.R = Kernel::constant(-1.0);
  spec.weights.N = Kernel::zero(1, 1);
  const auto f = solve_riccati(spec, constant(spec, 0.0));
  const auto r = check_constraints(spec, f.p1_diag, f.p3_diag, f.p2);
  EXPECT_FALSE(r.psd_pass());
  EXPECT_EQ(r.psd_failures, 11u);
  EXPECT_NEAR(r.psd_worst, -1.0, 1e-15);
  EXPECT_TRUE(r.range_pass());
}

TEST(Characterization, ZeroProblem)
{
  const auto spec = detail::zero_spec({2, 1, 1}, 1.0, 10);
  Strategy th(spec.grid, 1, 2);
  const auto field = characterization_residual(spec, th);
  for (double v : field.raw()) EXPECT_EQ(v, 0.0);
  const auto e = example25_spec(1000);
  const auto zero_branch = characterization_residual(e, constant(e, 0.0));
  for (double v : zero_branch.raw()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Characterization, EqualsLambdaThetaPlusGamma)
{
  const auto spec = smoke_spec(30);
  const auto th = constant(spec, -0.4);
  const auto f = solve_riccati(spec, th);
  const auto terms = feedback_terms(spec, f.p1_diag, f.p3_diag, f.p2);
  const auto res = characterization_residual(spec, th, f);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    EXPECT_NEAR(res.scalar(i), terms.lambda.scalar(i) * th.scalar(i) + terms.gamma.scalar(i), 1e-13);
  }
}

TEST(Riccati, ScheduleIndependent)
{
  const auto spec = classical2d_spec(60);
  Strategy th(spec.grid, 1, 2, 0.2);
  set_thread_cap(1);
  const auto a = solve_riccati(spec, th);
  set_thread_cap(4);
  const auto b = solve_riccati(spec, th);
  set_thread_cap(0);
  EXPECT_EQ(a.p1.raw(), b.p1.raw());
  EXPECT_EQ(a.p3.raw(), b.p3.raw());
}

TEST(Riccati, RejectsForeignGrid)
{
  const auto spec = smoke_spec(10);
  const Strategy wrong(TimeGrid(1.0, 11), 1, 1);
  EXPECT_THROW(solve_p1(spec, wrong), std::invalid_argument);
  const Strategy shape(spec.grid, 2, 1);
  EXPECT_THROW(solve_p2(spec, shape), std::invalid_argument);
}

}  // namespace
}  // namespace tilq
