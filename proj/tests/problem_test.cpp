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

#include <tilq/fields.hpp>
#include <tilq/kernel.hpp>
#include <tilq/problem.hpp>
#include <tilq/scenarios.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace tilq {
namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

TEST(TimeGrid, NodesAndLookup)
{
  const TimeGrid g(1.0, 3);
  EXPECT_EQ(g.size(), 4u);
  EXPECT_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(3), 1.0);
  EXPECT_DOUBLE_EQ(g.node(1), 1.0 / 3.0);
  EXPECT_EQ(g.nearest_node(0.34), 1u);
  EXPECT_EQ(g.nearest_node(-1.0), 0u);
  EXPECT_EQ(g.nearest_node(9.0), 3u);
  EXPECT_EQ(g.refined(4).steps(), 12u);
  EXPECT_THROW(TimeGrid(0.0, 3), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST(TwoTimeField, TriangleIndexing)
{
  const TimeGrid g(1.0, 4);
  TwoTimeField f(g, 1, 1);
  for (std::size_t t = 0; t <= 4; ++t) {
    for (std::size_t s = t; s <= 4; ++s) f.scalar(s, t) = 10.0 * static_cast<double>(s) + static_cast<double>(t);
  }
  for (std::size_t t = 0; t <= 4; ++t) {
    for (std::size_t s = t; s <= 4; ++s) EXPECT_EQ(f.scalar(s, t), 10.0 * static_cast<double>(s) + static_cast<double>(t));
  }
  EXPECT_EQ(f.raw().size(), 15u);
  EXPECT_THROW(f.scalar(1, 2), std::out_of_range);
  const auto d = f.diagonal();
  EXPECT_EQ(d.scalar(3), 33.0);
}

TEST(OneTimeField, Interpolation)
{
  const TimeGrid g(2.0, 2);
  OneTimeField f(g, 1, 1);
  f.scalar(0) = 0.0;
  f.scalar(1) = 2.0;
  f.scalar(2) = 6.0;
  EXPECT_DOUBLE_EQ(f.interpolate(0.5)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f.interpolate(1.5)(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(f.interpolate(5.0)(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(f.sup_norm(), 6.0);
}

TEST(Kernel, Families)
{
  const Kernel c = Kernel::constant(2.0);
  EXPECT_EQ(c.scalar(0.7, 0.1), 2.0);
  EXPECT_TRUE(c.is_constant());

  const Kernel d(DiscountedKernel{0.5, m1(3.0)});
  EXPECT_EQ(d.scalar(0.4, 0.4), 3.0);
  EXPECT_DOUBLE_EQ(d.scalar(1.0, 0.2), 3.0 * std::exp(-0.4));

  const Kernel diff(DifferenceKernel{m1(0.1), m1(1.0)});
  EXPECT_DOUBLE_EQ(diff.scalar(0.9, 0.4), 1.05);

  TableKernel tab;
  tab.s_nodes = {0.0, 1.0};
  tab.t_nodes = {0.0, 1.0};
  tab.values = {m1(0.0), m1(1.0), m1(2.0), m1(3.0)};  // [is * nt + it]
  const Kernel t(tab);
  EXPECT_DOUBLE_EQ(t.scalar(0.5, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(t.scalar(1.0, 0.25), 2.25);
  EXPECT_DOUBLE_EQ(t.scalar(2.0, -1.0), 2.0);

  const Kernel sum(SumKernel{{c, diff}});
  EXPECT_DOUBLE_EQ(sum.scalar(0.9, 0.4), 3.05);
  EXPECT_DOUBLE_EQ(sum(0.9, 0.4)(0, 0), 3.05);
}

TEST(Kernel, RejectsBadTables)
{
  TableKernel tab;
  tab.s_nodes = {0.0, 0.0};
  tab.t_nodes = {0.0, 1.0};
  tab.values = {m1(0.0), m1(1.0), m1(2.0), m1(3.0)};
  EXPECT_THROW(Kernel{tab}, std::invalid_argument);
  tab.s_nodes = {0.0, 1.0};
  tab.values.pop_back();
  EXPECT_THROW(Kernel{tab}, std::invalid_argument);
  EXPECT_THROW(Kernel(SumKernel{{Kernel::constant(1.0), Kernel::zero(2, 2)}}), std::invalid_argument);
}

TEST(TimeFunction, Families)
{
  EXPECT_EQ(TimeFunction::constant(1.5)(0.3)(0, 0), 1.5);
  const TimeFunction a(AffineFunction{m1(2.0), m1(-1.0)});
  EXPECT_DOUBLE_EQ(a(0.25)(0, 0), -0.5);
  const TimeFunction e(ExponentialFunction{2.0, 1.0, m1(3.0)});
  EXPECT_DOUBLE_EQ(e(0.5)(0, 0), 3.0 * std::exp(-1.0));
  const TimeFunction t(TableFunction{{0.0, 0.5, 1.0}, {m1(0.0), m1(1.0), m1(0.0)}});
  EXPECT_DOUBLE_EQ(t(0.25)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(t(0.75)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(t(3.0)(0, 0), 0.0);
  const TimeFunction s(SumFunction{{a, e}});
  EXPECT_DOUBLE_EQ(s(0.5)(0, 0), 3.0 * std::exp(-1.0));
  EXPECT_THROW(TimeFunction(TableFunction{{0.0, 1.0}, {m1(0.0)}}), std::invalid_argument);
}

TEST(Validate, WellFormedBuiltins)
{
  for (const auto& name : builtin_names()) {
    const auto rep = validate(builtin_scenario(name, 50).spec);
    EXPECT_TRUE(rep.ok()) << name << ": " << (rep.issues.empty() ? "" : rep.issues.front());
  }
}

TEST(Validate, DimensionMismatchB)
{
  auto spec = smoke_spec(20);
  spec.coeffs.B = TimeFunction::zero(1, 2);
  EXPECT_TRUE(validate(spec).contains("dimension mismatch B"));
}

TEST(Validate, SymmetryViolationQ)
{
  auto spec = classical2d_spec(20);
  Matrix q(2, 2);
  q << 1.0, 2.0, 0.0, 1.0;
  spec.weights.Q = Kernel::constant(q);
  EXPECT_TRUE(validate(spec).contains("symmetry violation Q"));
}

TEST(Validate, NonFiniteAndHorizon)
{
  auto spec = smoke_spec(20);
  spec.weights.R = Kernel(DiscountedKernel{1.0, m1(std::numeric_limits<double>::quiet_NaN())});
  EXPECT_TRUE(validate(spec).contains("non-finite sample R"));
  auto spec2 = smoke_spec(20);
  spec2.coeffs.T = 2.0;
  EXPECT_TRUE(validate(spec2).contains("horizon mismatch"));
}

TEST(Lipschitz, ConstantKernelsGiveZero)
{
  const auto rep = check_lipschitz_in_t(trivial_spec(50), 20);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.value, 0.0);
}

TEST(Lipschitz, DifferenceKernelGivesOne)
{
  auto spec = trivial_spec(100);
  spec.weights.R = Kernel(DifferenceKernel{m1(1.0), m1(0.0)});
  const auto rep = check_lipschitz_in_t(spec, 40);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.value, 1.0, 1e-6);
}

TEST(Lipschitz, HolderHalfTableFails)
{
  auto spec = trivial_spec(10);
  TableKernel tab;
  const std::size_t nodes = 41;  // spacing h / 4
  for (std::size_t i = 0; i < nodes; ++i) {
    tab.s_nodes.push_back(static_cast<double>(i) / 40.0);
    tab.t_nodes.push_back(static_cast<double>(i) / 40.0);
  }
  for (std::size_t a = 0; a < nodes; ++a) {
    for (std::size_t b = 0; b < nodes; ++b) tab.values.push_back(m1(std::sqrt(std::abs(tab.s_nodes[a] - tab.t_nodes[b]))));
  }
  spec.weights.Q = Kernel(tab);
  const auto rep = check_lipschitz_in_t(spec, 11);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.notes.empty());
}

TEST(Lipschitz, RejectsZeroProbes) { EXPECT_THROW(check_lipschitz_in_t(trivial_spec(10), 0), std::invalid_argument); }

TEST(Positivity, TrivialPassesWithUnitFloor)
{
  auto spec = trivial_spec(50);
  const auto rep = check_one_dim_positivity(spec, 1e-8);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.value, 1.0);
}

TEST(Positivity, SingularExampleFailsOnD)
{
  const auto rep = check_one_dim_positivity(example25_spec(50), 1e-8);
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.value, 0.0);
}

TEST(Positivity, VanishingDiagonalFails)
{
  auto spec = trivial_spec(50);
  spec.weights.R = Kernel(TableKernel{{0.0, 1.0}, {0.0, 1.0}, {m1(0.0), m1(0.0), m1(1.0), m1(1.0)}});
  EXPECT_NEAR(spec.weights.R.scalar(0.3, 0.3), 0.3, 1e-15);
  const auto rep = check_one_dim_positivity(spec, 1e-8);
  EXPECT_FALSE(rep.pass);
  ASSERT_FALSE(rep.notes.empty());
  EXPECT_NE(rep.notes.back().find("R(t,t)"), std::string::npos);
}

TEST(Positivity, NegativeQFails)
{
  auto spec = trivial_spec(20);
  spec.weights.Q = Kernel::constant(-0.1);
  EXPECT_FALSE(check_one_dim_positivity(spec, 1e-8).pass);
  EXPECT_THROW(check_one_dim_positivity(classical2d_spec(10), 1e-8), std::invalid_argument);
  EXPECT_THROW(check_one_dim_positivity(spec, 0.0), std::invalid_argument);
}

TEST(Scenarios, SingularExampleTerminalWeight)
{
  const auto spec = example25_spec(100);
  for (double t : {0.0, 0.3, 1.0}) EXPECT_NEAR(spec.weights.G1(t)(0, 0), -(1.0 - std::exp(-(1.0 - t))), 1e-14);
  const Kernel q(DiscountedKernel{8.0, m1(1.0)});
  const auto spec8 = example25_spec(100, q);
  for (double t : {0.0, 0.5}) {
    const double want = -gauss_integrate([&](double r) { return std::exp(-(1.0 - r)) * std::exp(-8.0 * (r - t)); }, t, 1.0);
    EXPECT_NEAR(spec8.weights.G1(t)(0, 0), want, 1e-13);
  }
  EXPECT_NEAR(example25_half_branch_p1(Kernel::constant(1.0), 0.0, 1.0), std::exp(-1.0) + 0.125, 1e-15);
  EXPECT_NEAR(example25_half_branch_p1(Kernel::constant(1.0), 0.0, 1.0), 0.4928794411714423, 1e-15);
}

}  // namespace
}  // namespace tilq
