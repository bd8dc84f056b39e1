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

#ifndef TILQ_RNG_HPP
#define TILQ_RNG_HPP

/**
 * @file
 * @brief Philox4x32-10 counter-based generator and the Gaussian stream
 * keyed by (seed, path, step).
 *
 * Every normal is a pure function of its three keys, so any path can be
 * regenerated alone and parallel schedules never reorder draws.
 */

#include <array>
#include <cmath>
#include <cstdint>

namespace tilq {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key)
  {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Standard normals N(path, step); one Philox block yields the pair for steps 2j and 2j+1.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

  double operator()(std::uint64_t step)
  {
    const std::uint64_t pair = step >> 1;
    if (pair != cached_pair_) {
      fill(pair);
      cached_pair_ = pair;
    }
    return cache_[step & 1u];
  }

 private:
  void fill(std::uint64_t pair)
  {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32),
                                     static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const auto r = Philox4x32::block(ctr, key);
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    const std::uint64_t a = ((static_cast<std::uint64_t>(r[0]) << 32) | r[1]) >> 11;
    const std::uint64_t b = ((static_cast<std::uint64_t>(r[2]) << 32) | r[3]) >> 11;
    const double u1 = 1.0 - static_cast<double>(a) * scale;  // (0, 1]
    const double u2 = static_cast<double>(b) * scale;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586 * u2;
    cache_[0] = rad * std::cos(ang);
    cache_[1] = rad * std::sin(ang);
  }

  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint64_t cached_pair_ = ~std::uint64_t{0};
  double cache_[2] = {0.0, 0.0};
};

}  // namespace tilq

#endif  // TILQ_RNG_HPP
