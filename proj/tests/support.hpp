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

#ifndef TILQ_TESTS_SUPPORT_HPP
#define TILQ_TESTS_SUPPORT_HPP

#include <tilq/matrixkit.hpp>

#include <random>
#include <string>
#include <vector>

namespace tilq::testing {

struct ShapeClass {
  std::string name;
  Index rows, cols, rank;  ///< rank < 0 means generic
  double scale;
};

/// Unit-scale classes: square, tall, wide, rank-deficient, zero.
inline std::vector<ShapeClass> shape_classes()
{
  return {{"scalar", 1, 1, -1, 1.0},   {"square3", 3, 3, -1, 1.0},   {"square6", 6, 6, -1, 1.0},
          {"tall5x2", 5, 2, -1, 1.0},  {"wide2x5", 2, 5, -1, 1.0},   {"rank1_4x4", 4, 4, 1, 1.0},
          {"rank2_5x3", 5, 3, 2, 1.0}, {"rank2_3x6", 3, 6, 2, 1.0}, {"zero3x2", 3, 2, 0, 1.0}};
}

/// Badly scaled classes; residuals there are compared against their natural magnitudes.
inline std::vector<ShapeClass> scaled_shape_classes()
{
  return {{"scalar_tiny", 1, 1, -1, 1e-8}, {"big4x4", 4, 4, -1, 1e6}, {"small4x3", 4, 3, -1, 1e-6},
          {"rank2_big5x4", 5, 4, 2, 1e5}};
}

inline Matrix gaussian(std::mt19937_64& gen, Index r, Index c)
{
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = nd(gen);
  }
  return m;
}

inline Matrix random_matrix(std::mt19937_64& gen, const ShapeClass& s)
{
  if (s.rank == 0) return Matrix::Zero(s.rows, s.cols);
  if (s.rank > 0) return s.scale * gaussian(gen, s.rows, s.rank) * gaussian(gen, s.rank, s.cols);
  return s.scale * gaussian(gen, s.rows, s.cols);
}

}  // namespace tilq::testing

#endif  // TILQ_TESTS_SUPPORT_HPP
