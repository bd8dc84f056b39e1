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

#ifndef TILQ_FIELDS_HPP
#define TILQ_FIELDS_HPP

/**
 * @file
 * @brief Uniform time grid and grid-sampled matrix fields of one time variable
 * (P2, Theta, diagonal traces) and of two time variables on the triangle
 * t <= s (P1, P3, second-moment factors).
 */

#include <tilq/matrixkit.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tilq {

class TimeGrid {
 public:
  TimeGrid() = default;

  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps)
  {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (steps == 0) throw std::invalid_argument("TimeGrid: steps must be positive");
  }

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double step() const { return horizon_ / static_cast<double>(steps_); }

  // t_N is pinned to the horizon so the terminal node is exact.
  double node(std::size_t i) const
  {
    if (i >= steps_) return horizon_;
    return horizon_ * static_cast<double>(i) / static_cast<double>(steps_);
  }

  std::size_t nearest_node(double t) const
  {
    const double x = std::round(t / step());
    if (x <= 0.0) return 0;
    if (x >= static_cast<double>(steps_)) return steps_;
    return static_cast<std::size_t>(x);
  }

  TimeGrid refined(std::size_t factor) const { return TimeGrid(horizon_, steps_ * factor); }

  bool operator==(const TimeGrid& o) const { return horizon_ == o.horizon_ && steps_ == o.steps_; }
  bool operator!=(const TimeGrid& o) const { return !(*this == o); }

 private:
  double horizon_ = 1.0;
  std::size_t steps_ = 1;
};

/// One matrix per grid node, stored contiguously.
class OneTimeField {
 public:
  OneTimeField() = default;
  OneTimeField(const TimeGrid& grid, Index rows, Index cols, double fill = 0.0)
      : grid_(grid), rows_(rows), cols_(cols),
        data_(grid.size() * static_cast<std::size_t>(rows * cols), fill)
  {}

  const TimeGrid& grid() const { return grid_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::size_t size() const { return grid_.size(); }

  Eigen::Map<Matrix> at(std::size_t i)
  {
    return Eigen::Map<Matrix>(data_.data() + offset(i), rows_, cols_);
  }
  Eigen::Map<const Matrix> at(std::size_t i) const
  {
    return Eigen::Map<const Matrix>(data_.data() + offset(i), rows_, cols_);
  }

  double scalar(std::size_t i) const { return data_[offset(i)]; }
  double& scalar(std::size_t i) { return data_[offset(i)]; }

  /// Piecewise-linear interpolation between nodes, clamped to [0, T].
  Matrix interpolate(double t) const
  {
    const double h = grid_.step();
    double x = t / h;
    if (x <= 0.0) return at(0);
    if (x >= static_cast<double>(grid_.steps())) return at(grid_.steps());
    const auto j = static_cast<std::size_t>(std::floor(x));
    const double w = x - static_cast<double>(j);
    if (w == 0.0) return at(j);
    return (1.0 - w) * at(j) + w * at(j + 1);
  }

  /// max over nodes of the spectral norm
  double sup_norm() const
  {
    double out = 0.0;
    for (std::size_t i = 0; i < size(); ++i) out = std::max(out, spectral_norm(at(i)));
    return out;
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

 private:
  std::size_t offset(std::size_t i) const { return i * static_cast<std::size_t>(rows_ * cols_); }

  TimeGrid grid_;
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

using Strategy = OneTimeField;

/// Elementwise max |a - b| over all nodes; shapes must agree.
inline double max_abs_diff(const OneTimeField& a, const OneTimeField& b)
{
  if (a.raw().size() != b.raw().size()) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < a.raw().size(); ++i) out = std::max(out, std::abs(a.raw()[i] - b.raw()[i]));
  return out;
}

/**
 * Matrix function P(s_j; t_i) sampled for all node pairs i <= j.
 *
 * Row i (fixed t_i) holds s-nodes j = i..N contiguously, so a backward sweep
 * in s for one t writes a single contiguous block.
 */
class TwoTimeField {
 public:
  TwoTimeField() = default;
  TwoTimeField(const TimeGrid& grid, Index rows, Index cols, double fill = 0.0)
      : grid_(grid), rows_(rows), cols_(cols),
        data_(pair_count(grid.size()) * static_cast<std::size_t>(rows * cols), fill)
  {}

  const TimeGrid& grid() const { return grid_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Eigen::Map<Matrix> at(std::size_t s_index, std::size_t t_index)
  {
    return Eigen::Map<Matrix>(data_.data() + offset(s_index, t_index), rows_, cols_);
  }
  Eigen::Map<const Matrix> at(std::size_t s_index, std::size_t t_index) const
  {
    return Eigen::Map<const Matrix>(data_.data() + offset(s_index, t_index), rows_, cols_);
  }

  double scalar(std::size_t s_index, std::size_t t_index) const { return data_[offset(s_index, t_index)]; }
  double& scalar(std::size_t s_index, std::size_t t_index) { return data_[offset(s_index, t_index)]; }

  /// The trace t -> P(t; t).
  OneTimeField diagonal() const
  {
    OneTimeField out(grid_, rows_, cols_);
    for (std::size_t i = 0; i < grid_.size(); ++i) out.at(i) = at(i, i);
    return out;
  }

  const std::vector<double>& raw() const { return data_; }

 private:
  static std::size_t pair_count(std::size_t nodes) { return nodes * (nodes + 1) / 2; }

  std::size_t row_start(std::size_t t_index) const
  {
    const std::size_t n = grid_.size();
    return t_index * n - t_index * (t_index - 1) / 2;
  }

  std::size_t offset(std::size_t s_index, std::size_t t_index) const
  {
    if (t_index > s_index || s_index >= grid_.size()) {
      throw std::out_of_range("TwoTimeField: requires t_index <= s_index <= N");
    }
    return (row_start(t_index) + (s_index - t_index)) * static_cast<std::size_t>(rows_ * cols_);
  }

  TimeGrid grid_;
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

}  // namespace tilq

#endif  // TILQ_FIELDS_HPP
