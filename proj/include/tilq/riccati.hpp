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

#ifndef TILQ_RICCATI_HPP
#define TILQ_RICCATI_HPP

/**
 * @file
 * @brief Equilibrium Riccati system for a given feedback Theta.
 *
 * For a fixed strategy the three fields solve linear ODEs in s, integrated
 * backward from T by classical RK4:
 *
 *   P1' + P1 A_th + A_th^T P1 + C_th^T P1 C_th + Q(s,t) + Th^T R(s,t) Th = 0,  P1(T;t) = G1(t)
 *   P2' + P2 A_th + Ahat_th + Chat P2 + Dhat P2 C_th = 0,                     P2(T)   = H
 *   P3' + P3 A_th + A_th^T P3 + C_th^T P3 C_th
 *       + P2^T M(s,t) P2 + C_th^T P2^T N(s,t) P2 C_th = 0,                    P3(T;t) = 0
 *
 * with A_th = A + B Th, C_th = C + D Th, Ahat_th = Ahat + Bhat Th. Theta is
 * interpolated linearly between nodes inside a step.
 */

#include <tilq/fields.hpp>
#include <tilq/matrixkit.hpp>
#include <tilq/parallel.hpp>
#include <tilq/problem.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace tilq {

struct ClosedLoopCoefficients {
  OneTimeField A_theta;     ///< n x n
  OneTimeField C_theta;     ///< n x n
  OneTimeField Ahat_theta;  ///< m x n
};

struct RiccatiFields {
  TwoTimeField p1;
  OneTimeField p2;
  TwoTimeField p3;
  OneTimeField p1_diag;
  OneTimeField p3_diag;
};

/// Lambda(t) = R(t,t) + D^T (P1 + P3 + P2^T N P2) D and the matching Gamma(t).
struct FeedbackTerms {
  OneTimeField lambda;  ///< k x k
  OneTimeField gamma;   ///< k x n
};

struct ConstraintTolerances {
  double range = 1e-9;  ///< relative tolerance of range_contains
  double psd = 1e-10;   ///< scaled by 1 + |Lambda|
};

struct ConstraintReport {
  // L2 membership of Lambda^+ Gamma: finite sup and grid L2 norm
  bool l2_ok = true;
  double l2_sup = 0.0;
  double l2_norm = 0.0;

  std::vector<bool> range_ok;
  double range_worst = 0.0;
  std::size_t range_worst_node = 0;
  std::size_t range_failures = 0;

  std::vector<bool> psd_ok;
  double psd_worst = std::numeric_limits<double>::infinity();  ///< smallest eigenvalue seen
  std::size_t psd_worst_node = 0;
  std::size_t psd_failures = 0;

  bool range_pass() const { return range_failures == 0; }
  bool psd_pass() const { return psd_failures == 0; }
  bool all_pass() const { return l2_ok && range_pass() && psd_pass(); }
};

namespace detail {

using Scalar1 = Eigen::Matrix<double, 1, 1>;

template <class M>
inline constexpr bool is_fixed_scalar = std::is_same_v<M, Scalar1>;

template <class M>
M to_mat(const Eigen::Ref<const Matrix>& x)
{
  if constexpr (is_fixed_scalar<M>) {
    M r;
    r(0, 0) = x(0, 0);
    return r;
  } else {
    return Matrix(x);
  }
}

template <class M>
M kernel_at(const Kernel& k, double s, double t)
{
  if constexpr (is_fixed_scalar<M>) {
    M r;
    r(0, 0) = k.scalar(s, t);
    return r;
  } else {
    return k(s, t);
  }
}

template <class M>
M symmetrized(const M& p)
{
  if constexpr (is_fixed_scalar<M>) {
    return p;
  } else {
    return 0.5 * (p + p.transpose());
  }
}

/// Time of half-node q: even q are grid nodes, odd q are step midpoints.
inline double half_node(const TimeGrid& g, std::size_t q)
{
  if (q % 2 == 0) return g.node(q / 2);
  return 0.5 * (g.node(q / 2) + g.node(q / 2 + 1));
}

inline void check_strategy(const ProblemSpec& spec, const OneTimeField& theta, const char* who)
{
  if (theta.grid() != spec.grid) throw std::invalid_argument(std::string(who) + ": strategy grid differs from spec grid");
  if (theta.rows() != spec.dims.k || theta.cols() != spec.dims.n) {
    throw std::invalid_argument(std::string(who) + ": strategy must be k x n");
  }
}

/// Closed-loop coefficients at all 2N+1 half-nodes.
template <class M>
struct Stages {
  std::vector<M> a_th, c_th, ah_th, chat, dhat, theta;
};

template <class M>
Stages<M> build_stages(const ProblemSpec& spec, const Strategy& theta)
{
  const auto& c = spec.coeffs;
  const auto& g = spec.grid;
  const std::size_t nq = 2 * g.steps() + 1;
  Stages<M> st;
  st.a_th.resize(nq);
  st.c_th.resize(nq);
  st.ah_th.resize(nq);
  st.chat.resize(nq);
  st.dhat.resize(nq);
  st.theta.resize(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    const double s = half_node(g, q);
    const Matrix th = (q % 2 == 0) ? Matrix(theta.at(q / 2)) : Matrix(0.5 * (theta.at(q / 2) + theta.at(q / 2 + 1)));
    st.theta[q] = to_mat<M>(th);
    st.a_th[q] = to_mat<M>(c.A(s) + c.B(s) * th);
    st.c_th[q] = to_mat<M>(c.C(s) + c.D(s) * th);
    st.ah_th[q] = to_mat<M>(c.Ahat(s) + c.Bhat(s) * th);
    st.chat[q] = to_mat<M>(c.Chat(s));
    st.dhat[q] = to_mat<M>(c.Dhat(s));
  }
  return st;
}

template <class M>
M p2_rhs(const Stages<M>& st, std::size_t q, const M& p)
{
  return -(p * st.a_th[q] + st.ah_th[q] + st.chat[q] * p + st.dhat[q] * p * st.c_th[q]);
}

template <class M>
M sym_rhs(const Stages<M>& st, std::size_t q, const M& p, const M& src)
{
  const M& a = st.a_th[q];
  const M& c = st.c_th[q];
  return -(p * a + a.transpose() * p + c.transpose() * p * c + src);
}

template <class M>
std::vector<M> p2_nodes(const ProblemSpec& spec, const Stages<M>& st)
{
  const std::size_t n = spec.grid.steps();
  const double h = spec.grid.step();
  std::vector<M> p(n + 1);
  p[n] = to_mat<M>(spec.coeffs.H);
  for (std::size_t j = n; j-- > 0;) {
    const std::size_t q1 = 2 * j + 2, qm = 2 * j + 1, q0 = 2 * j;
    const M& y = p[j + 1];
    const M k1 = p2_rhs(st, q1, y);
    const M k2 = p2_rhs(st, qm, M(y - 0.5 * h * k1));
    const M k3 = p2_rhs(st, qm, M(y - 0.5 * h * k2));
    const M k4 = p2_rhs(st, q0, M(y - h * k3));
    p[j] = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return p;
}

/// P2 at all half-nodes; midpoints from the cubic Hermite interpolant of node values and slopes.
template <class M>
std::vector<M> p2_half_nodes(const ProblemSpec& spec, const Stages<M>& st, const std::vector<M>& nodes)
{
  const std::size_t n = spec.grid.steps();
  const double h = spec.grid.step();
  std::vector<M> out(2 * n + 1);
  std::vector<M> slope(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    out[2 * j] = nodes[j];
    slope[j] = p2_rhs(st, 2 * j, nodes[j]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    out[2 * j + 1] = 0.5 * (nodes[j] + nodes[j + 1]) + (h / 8.0) * (slope[j] - slope[j + 1]);
  }
  return out;
}

/// One backward sweep per t-node of the symmetric operator; src(q, i) is the source at half-node q.
template <class M, class Terminal, class Source>
TwoTimeField sweep_two_time(const ProblemSpec& spec, const Stages<M>& st, Index dim, Terminal&& terminal,
                            Source&& src)
{
  const auto& g = spec.grid;
  const std::size_t n = g.steps();
  const double h = g.step();
  TwoTimeField out(g, dim, dim);
  parallel_for(0, n + 1, [&](std::size_t i) {
    M y = terminal(i);
    out.at(n, i) = y;
    for (std::size_t j = n; j-- > i;) {
      const std::size_t q1 = 2 * j + 2, qm = 2 * j + 1, q0 = 2 * j;
      const M s1 = src(q1, i);
      const M sm = src(qm, i);
      const M s0 = src(q0, i);
      const M k1 = sym_rhs(st, q1, y, s1);
      const M k2 = sym_rhs(st, qm, M(y - 0.5 * h * k1), sm);
      const M k3 = sym_rhs(st, qm, M(y - 0.5 * h * k2), sm);
      const M k4 = sym_rhs(st, q0, M(y - h * k3), s0);
      y = symmetrized<M>(M(y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
      out.at(j, i) = y;
    }
  }, 8);
  return out;
}

template <class M>
TwoTimeField solve_p1_impl(const ProblemSpec& spec, const Stages<M>& st)
{
  const auto& g = spec.grid;
  const auto& w = spec.weights;
  return sweep_two_time<M>(
      spec, st, spec.dims.n, [&](std::size_t i) { return to_mat<M>(w.G1(g.node(i))); },
      [&](std::size_t q, std::size_t i) {
        const double s = half_node(g, q), t = g.node(i);
        const M& th = st.theta[q];
        return M(kernel_at<M>(w.Q, s, t) + th.transpose() * kernel_at<M>(w.R, s, t) * th);
      });
}

template <class M>
TwoTimeField solve_p3_impl(const ProblemSpec& spec, const Stages<M>& st, const std::vector<M>& p2h)
{
  const auto& g = spec.grid;
  const auto& w = spec.weights;
  const Index n = spec.dims.n;
  return sweep_two_time<M>(
      spec, st, n, [&](std::size_t) { return to_mat<M>(Matrix::Zero(n, n)); },
      [&](std::size_t q, std::size_t i) {
        const double s = half_node(g, q), t = g.node(i);
        const M& p2 = p2h[q];
        const M p2c = p2 * st.c_th[q];
        return M(p2.transpose() * kernel_at<M>(w.M, s, t) * p2 + p2c.transpose() * kernel_at<M>(w.N, s, t) * p2c);
      });
}

template <class M>
OneTimeField to_field(const TimeGrid& g, Index rows, Index cols, const std::vector<M>& v)
{
  OneTimeField out(g, rows, cols);
  for (std::size_t j = 0; j < v.size(); ++j) out.at(j) = v[j];
  return out;
}

template <class M>
std::vector<M> from_field(const OneTimeField& f)
{
  std::vector<M> v(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) v[j] = to_mat<M>(f.at(j));
  return v;
}

template <class M>
RiccatiFields solve_riccati_impl(const ProblemSpec& spec, const Strategy& theta)
{
  const auto st = build_stages<M>(spec, theta);
  const auto p2n = p2_nodes<M>(spec, st);
  const auto p2h = p2_half_nodes<M>(spec, st, p2n);
  RiccatiFields out;
  out.p2 = to_field(spec.grid, spec.dims.m, spec.dims.n, p2n);
  out.p1 = solve_p1_impl<M>(spec, st);
  out.p3 = solve_p3_impl<M>(spec, st, p2h);
  out.p1_diag = out.p1.diagonal();
  out.p3_diag = out.p3.diagonal();
  return out;
}

}  // namespace detail

inline ClosedLoopCoefficients closed_loop(const ProblemSpec& spec, const Strategy& theta)
{
  detail::check_strategy(spec, theta, "closed_loop");
  const auto& c = spec.coeffs;
  const auto& g = spec.grid;
  const auto& d = spec.dims;
  ClosedLoopCoefficients out{OneTimeField(g, d.n, d.n), OneTimeField(g, d.n, d.n), OneTimeField(g, d.m, d.n)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = g.node(i);
    const Matrix th = theta.at(i);
    out.A_theta.at(i) = c.A(t) + c.B(t) * th;
    out.C_theta.at(i) = c.C(t) + c.D(t) * th;
    out.Ahat_theta.at(i) = c.Ahat(t) + c.Bhat(t) * th;
  }
  return out;
}

inline OneTimeField solve_p2(const ProblemSpec& spec, const Strategy& theta)
{
  detail::check_strategy(spec, theta, "solve_p2");
  if (spec.dims.one_dim()) {
    using M = detail::Scalar1;
    const auto st = detail::build_stages<M>(spec, theta);
    return detail::to_field(spec.grid, 1, 1, detail::p2_nodes<M>(spec, st));
  }
  const auto st = detail::build_stages<Matrix>(spec, theta);
  return detail::to_field(spec.grid, spec.dims.m, spec.dims.n, detail::p2_nodes<Matrix>(spec, st));
}

inline TwoTimeField solve_p1(const ProblemSpec& spec, const Strategy& theta)
{
  detail::check_strategy(spec, theta, "solve_p1");
  if (spec.dims.one_dim()) return detail::solve_p1_impl(spec, detail::build_stages<detail::Scalar1>(spec, theta));
  return detail::solve_p1_impl(spec, detail::build_stages<Matrix>(spec, theta));
}

inline TwoTimeField solve_p3(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2)
{
  detail::check_strategy(spec, theta, "solve_p3");
  if (p2.grid() != spec.grid || p2.rows() != spec.dims.m || p2.cols() != spec.dims.n) {
    throw std::invalid_argument("solve_p3: P2 must be m x n on the problem grid");
  }
  auto run = [&](auto tag) {
    using M = decltype(tag);
    const auto st = detail::build_stages<M>(spec, theta);
    const auto p2h = detail::p2_half_nodes<M>(spec, st, detail::from_field<M>(p2));
    return detail::solve_p3_impl<M>(spec, st, p2h);
  };
  if (spec.dims.one_dim()) return run(detail::Scalar1{});
  return run(Matrix{});
}

/// P1, P2, P3 and their diagonal traces for one strategy.
inline RiccatiFields solve_riccati(const ProblemSpec& spec, const Strategy& theta)
{
  detail::check_strategy(spec, theta, "solve_riccati");
  if (spec.dims.one_dim()) return detail::solve_riccati_impl<detail::Scalar1>(spec, theta);
  return detail::solve_riccati_impl<Matrix>(spec, theta);
}

/// Lambda and Gamma at every node from the diagonal traces.
inline FeedbackTerms feedback_terms(const ProblemSpec& spec, const OneTimeField& p1_diag, const OneTimeField& p3_diag,
                                    const OneTimeField& p2)
{
  const auto& c = spec.coeffs;
  const auto& w = spec.weights;
  const auto& g = spec.grid;
  const auto& d = spec.dims;
  if (p1_diag.grid() != g || p3_diag.grid() != g || p2.grid() != g) {
    throw std::invalid_argument("feedback_terms: fields must live on the problem grid");
  }
  FeedbackTerms out{OneTimeField(g, d.k, d.k), OneTimeField(g, d.k, d.n)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = g.node(i);
    const Matrix B = c.B(t), C = c.C(t), D = c.D(t), Bh = c.Bhat(t), Dh = c.Dhat(t);
    const Matrix P2 = p2.at(i);
    const Matrix Pt = p1_diag.at(i) + p3_diag.at(i);
    const Matrix Pn = Pt + P2.transpose() * w.N(t, t) * P2;
    out.lambda.at(i) = w.R(t, t) + D.transpose() * Pn * D;
    out.gamma.at(i) = B.transpose() * Pt + D.transpose() * Pn * C +
                      (Bh.transpose() + B.transpose() * P2.transpose() + D.transpose() * P2.transpose() * Dh.transpose()) *
                          w.G2(t) * P2;
  }
  return out;
}

/// Theta = -Lambda^+ Gamma + (I - Lambda^+ Lambda) theta0, node by node.
inline Strategy feedback_map(const ProblemSpec& spec, const OneTimeField& p1_diag, const OneTimeField& p3_diag,
                             const OneTimeField& p2, const Strategy& theta0)
{
  detail::check_strategy(spec, theta0, "feedback_map");
  const auto terms = feedback_terms(spec, p1_diag, p3_diag, p2);
  Strategy out(spec.grid, spec.dims.k, spec.dims.n);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const Matrix L = terms.lambda.at(i);
    const Matrix Lp = pinv(L);
    const Matrix th0 = theta0.at(i);
    out.at(i) = -Lp * terms.gamma.at(i) + th0 - Lp * L * th0;
  }
  return out;
}

/// L2 membership, range inclusion and PSD of Lambda at every node.
inline ConstraintReport check_constraints(const ProblemSpec& spec, const OneTimeField& p1_diag,
                                          const OneTimeField& p3_diag, const OneTimeField& p2,
                                          const ConstraintTolerances& tol = {})
{
  const auto terms = feedback_terms(spec, p1_diag, p3_diag, p2);
  const auto& g = spec.grid;
  const std::size_t n = g.size();
  ConstraintReport rep;
  rep.range_ok.assign(n, true);
  rep.psd_ok.assign(n, true);
  std::vector<double> sq(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix L = terms.lambda.at(i);
    const Matrix G = terms.gamma.at(i);
    const Matrix lg = pinv(L) * G;
    const double norm = spectral_norm(lg);
    if (!std::isfinite(norm)) rep.l2_ok = false;
    rep.l2_sup = std::max(rep.l2_sup, norm);
    sq[i] = lg.squaredNorm();

    const double res = range_residual(L, G);
    const double scaled = res / (1.0 + spectral_norm(G));
    if (!(res <= tol.range * (1.0 + spectral_norm(G)))) {
      rep.range_ok[i] = false;
      ++rep.range_failures;
    }
    if (scaled > rep.range_worst) {
      rep.range_worst = scaled;
      rep.range_worst_node = i;
    }

    const double ev = min_symmetric_eigenvalue(L);
    if (!(ev >= -tol.psd * (1.0 + spectral_norm(L)))) {
      rep.psd_ok[i] = false;
      ++rep.psd_failures;
    }
    if (ev < rep.psd_worst) {
      rep.psd_worst = ev;
      rep.psd_worst_node = i;
    }
  }
  const double h = g.step();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) acc += 0.5 * h * (sq[i] + sq[i + 1]);
  rep.l2_norm = std::sqrt(acc);
  if (!std::isfinite(rep.l2_norm)) rep.l2_ok = false;
  return rep;
}

/// Node-wise first-order condition; vanishes identically at an equilibrium.
inline OneTimeField characterization_residual(const ProblemSpec& spec, const Strategy& theta,
                                              const RiccatiFields& fields)
{
  detail::check_strategy(spec, theta, "characterization_residual");
  const auto& c = spec.coeffs;
  const auto& w = spec.weights;
  const auto& g = spec.grid;
  OneTimeField out(g, spec.dims.k, spec.dims.n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = g.node(i);
    const Matrix B = c.B(t), D = c.D(t), Bh = c.Bhat(t), Dh = c.Dhat(t);
    const Matrix th = theta.at(i);
    const Matrix Ct = c.C(t) + D * th;
    const Matrix P2 = fields.p2.at(i);
    const Matrix Pt = fields.p1_diag.at(i) + fields.p3_diag.at(i);
    out.at(i) = B.transpose() * Pt + D.transpose() * Pt * Ct + w.R(t, t) * th +
                (Bh.transpose() + B.transpose() * P2.transpose() + D.transpose() * P2.transpose() * Dh.transpose()) *
                    w.G2(t) * P2 +
                D.transpose() * P2.transpose() * w.N(t, t) * P2 * Ct;
  }
  return out;
}

inline OneTimeField characterization_residual(const ProblemSpec& spec, const Strategy& theta)
{
  return characterization_residual(spec, theta, solve_riccati(spec, theta));
}

}  // namespace tilq

#endif  // TILQ_RICCATI_HPP
