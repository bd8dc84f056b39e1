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

#include <tilq/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace tilq {
namespace {

TEST(Philox, KnownAnswers)
{
  const auto a = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(a, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  const auto b = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(b, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  const auto c = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(c, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(GaussianStream, PureFunctionOfKeys)
{
  GaussianStream a(42, 7), b(42, 7);
  std::vector<double> fwd, rev(10);
  for (std::uint64_t s = 0; s < 10; ++s) fwd.push_back(a(s));
  for (std::uint64_t s = 10; s-- > 0;) rev[s] = b(s);
  EXPECT_EQ(fwd, rev);
  GaussianStream other_path(42, 8), other_seed(43, 7);
  EXPECT_NE(other_path(0), fwd[0]);
  EXPECT_NE(other_seed(0), fwd[0]);
}

TEST(GaussianStream, Moments)
{
  double sum = 0.0, sq = 0.0, quad = 0.0;
  const std::size_t n = 200000;
  for (std::uint64_t p = 0; p < n / 100; ++p) {
    GaussianStream g(2026, p);
    for (std::uint64_t s = 0; s < 100; ++s) {
      const double z = g(s);
      sum += z;
      sq += z * z;
      quad += z * z * z * z;
    }
  }
  const double mean = sum / n, var = sq / n - mean * mean, kurt = quad / n;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_LT(std::abs(var - 1.0), 4.0 * std::sqrt(2.0 / n));
  EXPECT_LT(std::abs(kurt - 3.0), 4.0 * std::sqrt(96.0 / n));
}

TEST(GaussianStream, PairsIndependent)
{
  // correlation between the two normals of one block
  double cross = 0.0;
  const std::size_t n = 100000;
  for (std::uint64_t p = 0; p < n; ++p) {
    GaussianStream g(9, p);
    cross += g(0) * g(1);
  }
  EXPECT_LT(std::abs(cross / n), 4.0 / std::sqrt(static_cast<double>(n)));
}

}  // namespace
}  // namespace tilq
