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

#ifndef TILQ_MATRIXKIT_HPP
#define TILQ_MATRIXKIT_HPP

/**
 * @file
 * @brief Dense-matrix helpers used by the constraint checks: Moore-Penrose
 * pseudoinverse, range inclusion and positive semidefiniteness.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tilq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Default relative rank cut: 1e-12 scaled by the larger dimension.
inline double default_pinv_tol(Index rows, Index cols)
{
  return 1e-12 * static_cast<double>(std::max<Index>({rows, cols, 1}));
}

/// Largest singular value (the |M|_inf norm of the notation block).
inline double spectral_norm(const Eigen::Ref<const Matrix>& m)
{
  if (m.size() == 0) return 0.0;
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m)
{
  return m.allFinite();
}

/**
 * Moore-Penrose pseudoinverse through the SVD.
 *
 * Singular values at or below max(rel_tol * sigma_max, abs_tol) are treated
 * as zero. For a 1x1 matrix [x] this returns [1/x] for every nonzero x when
 * abs_tol = 0, and [0] for x = 0.
 */
inline Matrix pinv(const Eigen::Ref<const Matrix>& m, double rel_tol, double abs_tol = 0.0)
{
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  if (m.size() == 1) {
    const double x = m(0, 0);
    const double cut = std::max(rel_tol * std::abs(x), abs_tol);
    Matrix out(1, 1);
    out(0, 0) = (std::abs(x) > cut) ? 1.0 / x : 0.0;
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = std::max(rel_tol * (sv.size() > 0 ? sv(0) : 0.0), abs_tol);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Matrix pinv(const Eigen::Ref<const Matrix>& m)
{
  return pinv(m, default_pinv_tol(m.rows(), m.cols()));
}

/// Residuals of the four Penrose identities, each as a spectral norm.
inline std::array<double, 4> penrose_residuals(const Eigen::Ref<const Matrix>& m,
                                               const Eigen::Ref<const Matrix>& mp)
{
  const Matrix mmp = m * mp;
  const Matrix mpm = mp * m;
  return {spectral_norm(mmp * m - m), spectral_norm(mpm * mp - mp),
          spectral_norm(mmp.transpose() - mmp), spectral_norm(mpm.transpose() - mpm)};
}

/// |(I - big big^+) small|_inf, the distance of small's columns from range(big).
inline double range_residual(const Eigen::Ref<const Matrix>& big, const Eigen::Ref<const Matrix>& small)
{
  if (big.rows() != small.rows()) {
    throw std::invalid_argument("range_contains: row count mismatch (" + std::to_string(big.rows()) +
                                " vs " + std::to_string(small.rows()) + ")");
  }
  const Matrix projector = Matrix::Identity(big.rows(), big.rows()) - big * pinv(big);
  return spectral_norm(projector * small);
}

/// True iff range(big) contains every column of small, within tol * (1 + |small|).
inline bool range_contains(const Eigen::Ref<const Matrix>& big, const Eigen::Ref<const Matrix>& small,
                           double tol)
{
  return range_residual(big, small) <= tol * (1.0 + spectral_norm(small));
}

/// Smallest eigenvalue of the symmetric part (M + M^T) / 2.
inline double min_symmetric_eigenvalue(const Eigen::Ref<const Matrix>& m)
{
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("is_psd: matrix is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", expected square");
  }
  if (m.size() == 1) return m(0, 0);
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline bool is_psd(const Eigen::Ref<const Matrix>& m, double tol)
{
  return min_symmetric_eigenvalue(m) >= -tol;
}

inline bool is_symmetric(const Eigen::Ref<const Matrix>& m, double tol)
{
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

}  // namespace tilq

#endif  // TILQ_MATRIXKIT_HPP
