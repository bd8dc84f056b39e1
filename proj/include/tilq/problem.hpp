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

#ifndef TILQ_PROBLEM_HPP
#define TILQ_PROBLEM_HPP

/**
 * @file
 * @brief Problem instance: dimensions, state/adjoint coefficients, cost
 * weights and grid, plus validation and audits of the standing assumptions
 * (Lipschitz dependence on the evaluation time t, 1-d positivity floor).
 */

#include <tilq/fields.hpp>
#include <tilq/kernel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilq {

struct Dimensions {
  Index n = 1;  ///< forward state
  Index m = 1;  ///< backward state
  Index k = 1;  ///< control

  bool one_dim() const { return n == 1 && m == 1 && k == 1; }
};

/**
 * dX = (A X + B u) ds + (C X + D u) dW
 * dY = -(Ahat X + Bhat u + Chat Y + Dhat Z) ds + Z dW,   Y(T) = H X(T)
 */
struct CoefficientSet {
  TimeFunction A, B, C, D;
  TimeFunction Ahat, Bhat, Chat, Dhat;
  Matrix H = Matrix::Zero(1, 1);
  double T = 1.0;
};

/// Running weights Q, R, M, N of (s, t); terminal G1(t) and initial G2(t).
struct WeightKernel {
  Kernel Q, R, M, N;
  TimeFunction G1, G2;
};

struct ProblemSpec {
  Dimensions dims;
  CoefficientSet coeffs;
  WeightKernel weights;
  TimeGrid grid;

  double horizon() const { return grid.horizon(); }
};

struct ValidationReport {
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
  bool contains(const std::string& needle) const
  {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const std::string& s) { return s.find(needle) != std::string::npos; });
  }
};

struct AssumptionReport {
  std::string name;
  bool pass = false;
  double value = 0.0;  ///< empirical Lipschitz constant, or the largest admissible delta
  std::vector<std::string> notes;
};

namespace detail {

inline double symmetry_tol() { return 64.0 * std::numeric_limits<double>::epsilon(); }

// Node indices spread over [0, N], at most `cap` of them, always including 0 and N.
inline std::vector<std::size_t> sample_nodes(const TimeGrid& grid, std::size_t cap)
{
  const std::size_t n = grid.steps();
  std::vector<std::size_t> out;
  if (n + 1 <= cap) {
    for (std::size_t i = 0; i <= n; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t p = 0; p < cap; ++p) out.push_back((p * n) / (cap - 1));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void check_shape(ValidationReport& rep, const char* name, Index rows, Index cols, Index want_rows,
                        Index want_cols)
{
  if (rows != want_rows || cols != want_cols) {
    rep.issues.push_back("dimension mismatch " + std::string(name) + ": got " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", expected " + std::to_string(want_rows) + "x" +
                         std::to_string(want_cols));
  }
}

}  // namespace detail

/// Lists dimension mismatches, non-symmetric weights and non-finite samples.
inline ValidationReport validate(const ProblemSpec& spec)
{
  ValidationReport rep;
  const auto& d = spec.dims;
  if (d.n < 1 || d.m < 1 || d.k < 1) {
    rep.issues.push_back("dimension mismatch dims: n, m, k must be >= 1");
    return rep;
  }
  const auto& c = spec.coeffs;
  const auto& w = spec.weights;
  if (!(c.T > 0.0) || !std::isfinite(c.T)) rep.issues.push_back("invalid horizon T");
  if (spec.grid.horizon() != c.T) rep.issues.push_back("horizon mismatch: grid does not span [0, T]");

  struct Fn {
    const char* name;
    const TimeFunction* f;
    Index r, cc;
    bool symmetric;
  };
  struct Kn {
    const char* name;
    const Kernel* f;
    Index r;
  };
  const Fn fns[] = {{"A", &c.A, d.n, d.n, false},       {"B", &c.B, d.n, d.k, false},
                    {"C", &c.C, d.n, d.n, false},       {"D", &c.D, d.n, d.k, false},
                    {"Ahat", &c.Ahat, d.m, d.n, false}, {"Bhat", &c.Bhat, d.m, d.k, false},
                    {"Chat", &c.Chat, d.m, d.m, false}, {"Dhat", &c.Dhat, d.m, d.m, false},
                    {"G1", &w.G1, d.n, d.n, true},      {"G2", &w.G2, d.m, d.m, true}};
  const Kn kns[] = {{"Q", &w.Q, d.n}, {"R", &w.R, d.k}, {"M", &w.M, d.m}, {"N", &w.N, d.m}};

  detail::check_shape(rep, "H", c.H.rows(), c.H.cols(), d.m, d.n);
  if (c.H.size() > 0 && !c.H.allFinite()) rep.issues.push_back("non-finite sample H");

  bool shapes_ok = rep.issues.empty();
  for (const auto& f : fns) {
    const std::size_t before = rep.issues.size();
    detail::check_shape(rep, f.name, f.f->rows(), f.f->cols(), f.r, f.cc);
    shapes_ok = shapes_ok && rep.issues.size() == before;
  }
  for (const auto& k : kns) {
    const std::size_t before = rep.issues.size();
    detail::check_shape(rep, k.name, k.f->rows(), k.f->cols(), k.r, k.r);
    shapes_ok = shapes_ok && rep.issues.size() == before;
  }

  // Stored parameters first: a table entry that is off-grid still matters.
  for (const auto& f : fns) {
    bool finite = true;
    f.f->for_each_matrix([&](const Matrix& m) { finite = finite && m.allFinite(); });
    if (!finite) rep.issues.push_back("non-finite sample " + std::string(f.name));
  }
  for (const auto& k : kns) {
    bool finite = true;
    k.f->for_each_matrix([&](const Matrix& m) { finite = finite && m.allFinite(); });
    if (!finite) rep.issues.push_back("non-finite sample " + std::string(k.name));
  }
  if (!shapes_ok || !rep.issues.empty()) return rep;

  const auto& grid = spec.grid;
  const double tol = detail::symmetry_tol();
  const auto nodes = detail::sample_nodes(grid, 1u << 30);
  for (const auto& f : fns) {
    bool finite = true, sym = true;
    for (std::size_t i : nodes) {
      const Matrix v = (*f.f)(grid.node(i));
      finite = finite && v.allFinite();
      if (f.symmetric && finite) sym = sym && is_symmetric(v, tol);
    }
    if (!finite) rep.issues.push_back("non-finite sample " + std::string(f.name));
    if (!sym) rep.issues.push_back("symmetry violation " + std::string(f.name));
  }
  const auto tri = detail::sample_nodes(grid, 161);
  for (const auto& k : kns) {
    bool finite = true, sym = true;
    auto probe = [&](double s, double t) {
      const Matrix v = (*k.f)(s, t);
      const bool fin = v.allFinite();
      finite = finite && fin;
      if (fin) sym = sym && is_symmetric(v, tol);
    };
    for (std::size_t i : nodes) probe(grid.node(i), grid.node(i));
    for (std::size_t a = 0; a < tri.size(); ++a) {
      for (std::size_t b = 0; b <= a; ++b) probe(grid.node(tri[a]), grid.node(tri[b]));
    }
    if (!finite) rep.issues.push_back("non-finite sample " + std::string(k.name));
    if (!sym) rep.issues.push_back("symmetry violation " + std::string(k.name));
  }
  return rep;
}

/**
 * Empirical Lipschitz constant in t of the weights.
 *
 * Each probe measures the weight increments between t and tau = t + g at a
 * fixed s >= tau, for g = h and g = h/2. Probes alternate between the
 * diagonal (tau = s) and the interior of the triangle. The check fails when
 * the estimate is non-finite or grows by more than 20% as g halves.
 */
inline AssumptionReport check_lipschitz_in_t(const ProblemSpec& spec, std::size_t probe_count)
{
  if (probe_count == 0) throw std::invalid_argument("check_lipschitz_in_t: probe_count must be positive");
  const auto& w = spec.weights;
  const auto& grid = spec.grid;
  const double h = grid.step();
  const double T = grid.horizon();

  auto increment = [&](double s, double t, double tau) {
    return spectral_norm(w.Q(s, t) - w.Q(s, tau)) + spectral_norm(w.R(s, t) - w.R(s, tau)) +
           spectral_norm(w.M(s, t) - w.M(s, tau)) + spectral_norm(w.N(s, t) - w.N(s, tau)) +
           spectral_norm(w.G1(t) - w.G1(tau)) + spectral_norm(w.G2(t) - w.G2(tau));
  };

  double coarse = 0.0, fine = 0.0;
  for (std::size_t p = 0; p < probe_count; ++p) {
    const double frac = (probe_count == 1) ? 0.5 : static_cast<double>(p) / static_cast<double>(probe_count - 1);
    const double s = std::clamp(h + frac * (T - h), h, T);
    for (double g : {h, 0.5 * h}) {
      double t;
      if (p % 2 == 0) {
        t = s - g;
      } else {
        // golden-ratio spread of t over [0, s - g]
        const double u = std::fmod(0.6180339887498949 * static_cast<double>(p + 1), 1.0);
        t = u * (s - g);
      }
      const double ratio = increment(s, t, t + g) / g;
      double& slot = (g == h) ? coarse : fine;
      slot = std::max(slot, ratio);
    }
  }

  AssumptionReport rep;
  rep.name = "lipschitz_in_t";
  rep.value = std::max(coarse, fine);
  const bool finite = std::isfinite(rep.value);
  const bool stable = fine <= 1.2 * coarse + 1e-9;
  rep.pass = finite && stable;
  if (!finite) rep.notes.push_back("non-finite difference quotient");
  if (!stable) {
    rep.notes.push_back("difference quotient grows as the probe gap shrinks: " + std::to_string(coarse) +
                        " at h, " + std::to_string(fine) + " at h/2");
  }
  return rep;
}

/// 1-d positivity floor: R(t,t), N(t,t), D(t)^2 >= delta and Q, M, G1 >= 0 on the grid.
inline AssumptionReport check_one_dim_positivity(const ProblemSpec& spec, double delta_floor)
{
  if (!spec.dims.one_dim()) throw std::invalid_argument("check_one_dim_positivity: requires n = m = k = 1");
  if (!(delta_floor > 0.0)) throw std::invalid_argument("check_one_dim_positivity: delta_floor must be positive");
  const auto& w = spec.weights;
  const auto& c = spec.coeffs;
  const auto& grid = spec.grid;

  AssumptionReport rep;
  rep.name = "one_dim_positivity";
  double delta = std::numeric_limits<double>::infinity();
  std::string binding;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    const double d = c.D(t)(0, 0);
    const double cand[] = {w.R.scalar(t, t), w.N.scalar(t, t), d * d};
    const char* names[] = {"R(t,t)", "N(t,t)", "D(t)^2"};
    for (int j = 0; j < 3; ++j) {
      if (cand[j] < delta) {
        delta = cand[j];
        binding = std::string(names[j]) + " at t = " + std::to_string(t);
      }
    }
  }
  rep.value = delta;
  bool nonneg = true;
  const auto tri = detail::sample_nodes(grid, 201);
  for (std::size_t a = 0; a < tri.size() && nonneg; ++a) {
    const double s = grid.node(tri[a]);
    for (std::size_t b = 0; b <= a; ++b) {
      const double t = grid.node(tri[b]);
      if (w.Q.scalar(s, t) < 0.0) {
        nonneg = false;
        rep.notes.push_back("Q negative at (s, t) = (" + std::to_string(s) + ", " + std::to_string(t) + ")");
        break;
      }
      if (w.M.scalar(s, t) < 0.0) {
        nonneg = false;
        rep.notes.push_back("M negative at (s, t) = (" + std::to_string(s) + ", " + std::to_string(t) + ")");
        break;
      }
    }
  }
  for (std::size_t i = 0; i < grid.size() && nonneg; ++i) {
    if (w.G1(grid.node(i))(0, 0) < 0.0) {
      nonneg = false;
      rep.notes.push_back("G1 negative at t = " + std::to_string(grid.node(i)));
    }
  }
  const bool floor_ok = delta >= delta_floor;
  if (!floor_ok) rep.notes.push_back("positivity floor violated by " + binding);
  rep.pass = floor_ok && nonneg;
  return rep;
}

}  // namespace tilq

#endif  // TILQ_PROBLEM_HPP
