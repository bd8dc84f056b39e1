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

#ifndef TILQ_PARALLEL_HPP
#define TILQ_PARALLEL_HPP

/**
 * @file
 * @brief Static-partition parallel loop and fixed-order pairwise summation.
 *
 * Work items are independent and write disjoint outputs, so results never
 * depend on how many workers ran or in which order they finished.
 */

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tilq {

namespace detail {
inline std::atomic<unsigned>& thread_cap_storage()
{
  static std::atomic<unsigned> cap{0};
  return cap;
}
}  // namespace detail

/// Upper bound on worker threads; 0 means hardware concurrency.
inline void set_thread_cap(unsigned cap) { detail::thread_cap_storage().store(cap); }

inline unsigned worker_count()
{
  const unsigned cap = detail::thread_cap_storage().load();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

/// Calls fn(i) for i in [begin, end), split into contiguous blocks.
template <class F>
void parallel_for(std::size_t begin, std::size_t end, F&& fn, std::size_t min_block = 1)
{
  if (end <= begin) return;
  const std::size_t count = end - begin;
  std::size_t workers = std::min<std::size_t>(worker_count(), (count + min_block - 1) / min_block);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + count * w / workers;
    const std::size_t hi = begin + count * (w + 1) / workers;
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Pairwise sum of v[lo, hi) in a fixed recursion order.
inline double pairwise_sum(const double* v, std::size_t n)
{
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace tilq

#endif  // TILQ_PARALLEL_HPP
