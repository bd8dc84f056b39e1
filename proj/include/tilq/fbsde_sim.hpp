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

#ifndef TILQ_FBSDE_SIM_HPP
#define TILQ_FBSDE_SIM_HPP

/**
 * @file
 * @brief Euler-Maruyama simulation of the controlled forward-backward system
 * under a feedback strategy and under spike perturbations of it.
 *
 * Backward components come from decoupling fields: Y = P2 X, Z = P2 C_th X
 * in closed loop, and on a spike [t, t+eps) with direction v
 *
 *   Y = P2 X + phi v,   Z = P2 (C_th X + D v),
 *   phi' = -(Chat phi + P2 B + Bhat + Dhat P2 D),   phi(t+eps) = 0.
 *
 * Two surfaces are provided. PathBundle stores whole paths and suits small
 * ensembles. The streaming routines (spike_test, perturbation_rates,
 * bsde_residual_check) keep only per-path scalars: they carry the
 * difference process xi = X^eps - X alongside the closed-loop path, so one
 * pass serves the whole eps ladder, and the cost change splits exactly as
 * J(c v) - J = c L + c^2 K with pathwise L, K.
 *
 * Time integrals use the left-point rule on the simulation grid, matching the
 * piecewise-constant controls of the Euler scheme.
 */

#include <tilq/equilibrium.hpp>
#include <tilq/fields.hpp>
#include <tilq/parallel.hpp>
#include <tilq/problem.hpp>
#include <tilq/riccati.hpp>
#include <tilq/rng.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilq {

struct SimConfig {
  std::size_t paths = 100000;
  std::uint64_t seed = 20260101;
  std::size_t sub_steps = 1;  ///< simulation steps per grid step
  std::size_t t_start = 0;    ///< grid node of the initial time
  Vector x0;                  ///< empty means all ones
  unsigned threads = 0;       ///< 0 keeps the global cap
};

struct PathBundle {
  TimeGrid fine_grid;
  std::size_t start = 0;  ///< first fine node
  std::size_t paths = 0;
  Index n = 1, m = 1, k = 1;
  std::vector<double> X, Y, Z, U;  ///< [path][node][component]
  std::vector<double> dW;          ///< [path][step]

  std::size_t steps() const { return fine_grid.steps() - start; }
  std::size_t nodes() const { return steps() + 1; }

  Eigen::Map<const Matrix> x(std::size_t p, std::size_t r) const { return view(X, p, r, n); }
  Eigen::Map<const Matrix> y(std::size_t p, std::size_t r) const { return view(Y, p, r, m); }
  Eigen::Map<const Matrix> z(std::size_t p, std::size_t r) const { return view(Z, p, r, m); }
  Eigen::Map<const Matrix> u(std::size_t p, std::size_t r) const { return view(U, p, r, k); }
  double dw(std::size_t p, std::size_t r) const { return dW[p * steps() + r]; }

 private:
  Eigen::Map<const Matrix> view(const std::vector<double>& v, std::size_t p, std::size_t r, Index dim) const
  {
    return Eigen::Map<const Matrix>(v.data() + (p * nodes() + r) * static_cast<std::size_t>(dim), dim, 1);
  }
};

inline std::vector<double> default_epsilon_ladder()
{
  std::vector<double> out;
  for (int j = 3; j <= 10; ++j) out.push_back(std::ldexp(1.0, -j));
  return out;
}

struct SpikeSpec {
  Vector v = Vector::Ones(1);
  std::vector<double> scales{1.0};  ///< directions c v evaluated from the same paths
  std::vector<double> epsilons = default_epsilon_ladder();
};

struct CostEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct SpikeRow {
  double scale = 1.0;
  double eps = 0.0;  ///< effective width, a whole number of simulation steps
  std::size_t eps_steps = 0;
  double delta = 0.0;
  double stderr_ = 0.0;
  double first_order = 0.0;
  double first_order_stderr = 0.0;
  double quadratic = 0.0;
  double quadratic_stderr = 0.0;
  double theory_quadratic = 0.0;
  double theory_first_order = 0.0;
};

struct SpikeReport {
  std::size_t t_node = 0;
  double t = 0.0;
  std::size_t paths = 0;
  std::vector<SpikeRow> rows;
  CostEstimate base_cost;
  bool liminf_pass = true;      ///< smallest-eps delta >= -3 stderr for every scale
  bool all_nonnegative = true;  ///< every delta >= -3 stderr
  bool converges = true;        ///< smallest-eps delta within 3 stderr of the expansion limit
  std::string note = "finite eps ladder and finitely many directions: a necessary-condition check";
};

struct RateRow {
  double eps = 0.0;
  double sup_dx2 = 0.0, sup_dx2_stderr = 0.0;
  double dyz = 0.0, dyz_stderr = 0.0;
};

struct RateReport {
  std::vector<RateRow> rows;
  double slope_x = 0.0;
  double slope_yz = 0.0;
};

namespace detail {

/// Mean and standard error with fixed-order summation.
inline CostEstimate mean_stderr(const std::vector<double>& v)
{
  CostEstimate out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = pairwise_sum(v) / n;
  if (v.size() < 2) return out;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - out.mean) * (v[i] - out.mean);
  out.stderr_ = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  return out;
}

inline double slope_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

class ThreadScope {
 public:
  explicit ThreadScope(unsigned threads) : saved_(thread_cap_storage().load()), active_(threads != 0)
  {
    if (active_) set_thread_cap(threads);
  }
  ~ThreadScope()
  {
    if (active_) set_thread_cap(saved_);
  }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  unsigned saved_;
  bool active_;
};

template <class M>
inline double dot(const M& a, const M& b)
{
  if constexpr (is_fixed_scalar<M>) {
    return a(0, 0) * b(0, 0);
  } else {
    return a.cwiseProduct(b).sum();
  }
}

/// Coefficient samples on the simulation grid from the start node onward.
template <class M>
struct SimCoeffs {
  TimeGrid fine;
  std::size_t l0 = 0;
  std::size_t steps = 0;
  double hf = 0.0;
  double sqrt_hf = 0.0;
  double t = 0.0;
  // index r = l - l0, r = 0..steps
  std::vector<M> a_th, c_th, B, D, th, p2, Ah, Bh, Ch, Dh, Q, R, Mw, Nw;
  M G1, G2, x0;
};

template <class M>
SimCoeffs<M> build_sim(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2, const SimConfig& cfg)
{
  check_strategy(spec, theta, "simulate");
  if (p2.grid() != spec.grid || p2.rows() != spec.dims.m || p2.cols() != spec.dims.n) {
    throw std::invalid_argument("simulate: P2 must be m x n on the problem grid");
  }
  if (cfg.sub_steps == 0) throw std::invalid_argument("simulate: sub_steps must be positive");
  if (cfg.t_start >= spec.grid.steps()) throw std::invalid_argument("simulate: t_start must be a node before T");
  if (cfg.paths == 0) throw std::invalid_argument("simulate: paths must be positive");
  Vector x0 = cfg.x0.size() == 0 ? Vector::Ones(spec.dims.n) : cfg.x0;
  if (x0.size() != spec.dims.n) throw std::invalid_argument("simulate: x0 must have n entries");

  SimCoeffs<M> co;
  co.fine = spec.grid.refined(cfg.sub_steps);
  co.l0 = cfg.t_start * cfg.sub_steps;
  co.steps = co.fine.steps() - co.l0;
  co.hf = co.fine.step();
  co.sqrt_hf = std::sqrt(co.hf);
  co.t = spec.grid.node(cfg.t_start);

  // strategy and P2 on the fine grid
  Strategy th_f;
  OneTimeField p2_f;
  if (cfg.sub_steps == 1) {
    th_f = theta;
    p2_f = p2;
  } else {
    th_f = Strategy(co.fine, spec.dims.k, spec.dims.n);
    for (std::size_t l = 0; l < co.fine.size(); ++l) th_f.at(l) = theta.interpolate(co.fine.node(l));
    ProblemSpec fine_spec = spec;
    fine_spec.grid = co.fine;
    p2_f = solve_p2(fine_spec, th_f);
  }

  const auto& c = spec.coeffs;
  const auto& w = spec.weights;
  const std::size_t nr = co.steps + 1;
  for (auto* v : {&co.a_th, &co.c_th, &co.B, &co.D, &co.th, &co.p2, &co.Ah, &co.Bh, &co.Ch, &co.Dh, &co.Q, &co.R,
                  &co.Mw, &co.Nw}) {
    v->resize(nr);
  }
  for (std::size_t r = 0; r < nr; ++r) {
    const std::size_t l = co.l0 + r;
    const double s = co.fine.node(l);
    const Matrix thm = th_f.at(l);
    co.th[r] = to_mat<M>(thm);
    co.B[r] = to_mat<M>(c.B(s));
    co.D[r] = to_mat<M>(c.D(s));
    co.a_th[r] = to_mat<M>(c.A(s) + c.B(s) * thm);
    co.c_th[r] = to_mat<M>(c.C(s) + c.D(s) * thm);
    co.p2[r] = to_mat<M>(p2_f.at(l));
    co.Ah[r] = to_mat<M>(c.Ahat(s));
    co.Bh[r] = to_mat<M>(c.Bhat(s));
    co.Ch[r] = to_mat<M>(c.Chat(s));
    co.Dh[r] = to_mat<M>(c.Dhat(s));
    co.Q[r] = kernel_at<M>(w.Q, s, co.t);
    co.R[r] = kernel_at<M>(w.R, s, co.t);
    co.Mw[r] = kernel_at<M>(w.M, s, co.t);
    co.Nw[r] = kernel_at<M>(w.N, s, co.t);
  }
  co.G1 = to_mat<M>(w.G1(co.t));
  co.G2 = to_mat<M>(w.G2(co.t));
  co.x0 = to_mat<M>(x0);
  return co;
}

/// phi on relative nodes 0..n_eps by Heun's rule backward from phi(n_eps) = 0.
template <class M>
std::vector<M> spike_phi(const SimCoeffs<M>& co, std::size_t n_eps)
{
  auto rhs = [&](std::size_t r, const M& phi) {
    return M(-(co.Ch[r] * phi + co.p2[r] * co.B[r] + co.Bh[r] + co.Dh[r] * co.p2[r] * co.D[r]));
  };
  const Index m = co.p2[0].rows(), k = co.B[0].cols();
  std::vector<M> phi(n_eps + 1, to_mat<M>(Matrix::Zero(m, k)));
  for (std::size_t r = n_eps; r-- > 0;) {
    const M f1 = rhs(r + 1, phi[r + 1]);
    const M pred = phi[r + 1] - co.hf * f1;
    const M f0 = rhs(r, pred);
    phi[r] = phi[r + 1] - 0.5 * co.hf * (f1 + f0);
  }
  return phi;
}

inline std::size_t snap_eps(double eps, double hf, std::size_t max_steps)
{
  if (!(eps > 0.0) || eps < hf * (1.0 - 1e-9)) {
    throw std::invalid_argument("spike: eps = " + std::to_string(eps) + " is smaller than one simulation step (" +
                                std::to_string(hf) + ")");
  }
  const auto n = static_cast<std::size_t>(std::llround(eps / hf));
  return std::min(std::max<std::size_t>(n, 1), max_steps);
}

template <class M>
PathBundle simulate_bundle(const ProblemSpec& spec, const SimCoeffs<M>& co, const SimConfig& cfg, const M& v,
                           std::size_t n_eps)
{
  const auto phi = spike_phi(co, n_eps);
  PathBundle b;
  b.fine_grid = co.fine;
  b.start = co.l0;
  b.paths = cfg.paths;
  b.n = spec.dims.n;
  b.m = spec.dims.m;
  b.k = spec.dims.k;
  const std::size_t nodes = co.steps + 1;
  b.X.assign(cfg.paths * nodes * b.n, 0.0);
  b.Y.assign(cfg.paths * nodes * b.m, 0.0);
  b.Z.assign(cfg.paths * nodes * b.m, 0.0);
  b.U.assign(cfg.paths * nodes * b.k, 0.0);
  b.dW.assign(cfg.paths * co.steps, 0.0);
  auto put = [](std::vector<double>& dst, std::size_t off, const M& val) {
    for (Index i = 0; i < val.rows(); ++i) dst[off + static_cast<std::size_t>(i)] = val(i, 0);
  };
  parallel_for(0, cfg.paths, [&](std::size_t p) {
    GaussianStream rng(cfg.seed, p);
    M x = co.x0;
    for (std::size_t r = 0; r <= co.steps; ++r) {
      const bool chi = r < n_eps;
      M u = co.th[r] * x;
      M y = co.p2[r] * x;
      M zin = co.c_th[r] * x;
      if (chi) {
        u += v;
        y += phi[r] * v;
        zin += co.D[r] * v;
      }
      const M z = co.p2[r] * zin;
      const std::size_t node = p * nodes + r;
      put(b.X, node * b.n, x);
      put(b.Y, node * b.m, y);
      put(b.Z, node * b.m, z);
      put(b.U, node * b.k, u);
      if (r == co.steps) break;
      const double dw = co.sqrt_hf * rng(co.l0 + r);
      b.dW[p * co.steps + r] = dw;
      M drift = co.a_th[r] * x;
      if (chi) drift += co.B[r] * v;
      x = x + drift * co.hf + zin * dw;
    }
  }, 64);
  return b;
}

/// Per-path accumulators of the streaming spike pass.
struct SpikeStream {
  std::size_t ladder = 0;
  std::vector<double> base;   ///< closed-loop cost per path
  std::vector<double> L, K;   ///< [path * ladder + e]
  std::vector<double> sup_dx2, sup_dy2, int_dz2;
};

template <class M>
SpikeStream spike_stream(const SimCoeffs<M>& co, const SimConfig& cfg, const M& v,
                         const std::vector<std::size_t>& n_eps, bool track_rates)
{
  const std::size_t E = n_eps.size();
  std::vector<std::vector<M>> phi(E);
  for (std::size_t e = 0; e < E; ++e) phi[e] = spike_phi(co, n_eps[e]);
  // quadratic weight of xi after the spike
  std::vector<M> beta(co.steps + 1);
  for (std::size_t r = 0; r <= co.steps; ++r) {
    const M p2c = co.p2[r] * co.c_th[r];
    beta[r] = co.hf * (co.Q[r] + co.th[r].transpose() * co.R[r] * co.th[r] + co.p2[r].transpose() * co.Mw[r] * co.p2[r] +
                       p2c.transpose() * co.Nw[r] * p2c);
  }

  SpikeStream out;
  out.ladder = E;
  out.base.assign(cfg.paths, 0.0);
  out.L.assign(cfg.paths * E, 0.0);
  out.K.assign(cfg.paths * E, 0.0);
  if (track_rates) {
    out.sup_dx2.assign(cfg.paths * E, 0.0);
    out.sup_dy2.assign(cfg.paths * E, 0.0);
    out.int_dz2.assign(cfg.paths * E, 0.0);
  }
  const M zero_x = co.x0 * 0.0;

  parallel_for(0, cfg.paths, [&](std::size_t p) {
    GaussianStream rng(cfg.seed, p);
    M x = co.x0;
    std::vector<M> xi(E, zero_x);
    double* L = &out.L[p * E];
    double* K = &out.K[p * E];
    double* sx = track_rates ? &out.sup_dx2[p * E] : nullptr;
    double* sy = track_rates ? &out.sup_dy2[p * E] : nullptr;
    double* iz = track_rates ? &out.int_dz2[p * E] : nullptr;
    double base = 0.0;

    const M y0 = co.p2[0] * x;
    base += dot<M>(y0, M(co.G2 * y0));
    for (std::size_t e = 0; e < E; ++e) {
      const M dy0 = phi[e][0] * v;
      L[e] += dot<M>(y0, M(co.G2 * dy0));
      K[e] += 0.5 * dot<M>(dy0, M(co.G2 * dy0));
    }

    for (std::size_t r = 0; r < co.steps; ++r) {
      const M& a = co.a_th[r];
      const M& c = co.c_th[r];
      const M& th = co.th[r];
      const M& p2 = co.p2[r];
      const M ub = th * x;
      const M yb = p2 * x;
      const M zb = p2 * (c * x);
      const M qx = co.Q[r] * x, ru = co.R[r] * ub, my = co.Mw[r] * yb, nz = co.Nw[r] * zb;
      base += co.hf * (dot<M>(x, qx) + dot<M>(ub, ru) + dot<M>(yb, my) + dot<M>(zb, nz));
      const M alpha = co.hf * (qx + th.transpose() * ru + p2.transpose() * my + (p2 * c).transpose() * nz);
      const double dw = co.sqrt_hf * rng(co.l0 + r);

      for (std::size_t e = 0; e < E; ++e) {
        M& d = xi[e];
        if (r < n_eps[e]) {
          const M du = th * d + v;
          const M dy = p2 * d + phi[e][r] * v;
          const M dzin = c * d + co.D[r] * v;
          const M dz = p2 * dzin;
          L[e] += co.hf * (dot<M>(d, qx) + dot<M>(du, ru) + dot<M>(dy, my) + dot<M>(dz, nz));
          K[e] += 0.5 * co.hf *
                  (dot<M>(d, M(co.Q[r] * d)) + dot<M>(du, M(co.R[r] * du)) + dot<M>(dy, M(co.Mw[r] * dy)) +
                   dot<M>(dz, M(co.Nw[r] * dz)));
          if (track_rates) {
            sx[e] = std::max(sx[e], dot<M>(d, d));
            sy[e] = std::max(sy[e], dot<M>(dy, dy));
            iz[e] += co.hf * dot<M>(dz, dz);
          }
          d = d + (a * d + co.B[r] * v) * co.hf + dzin * dw;
        } else {
          L[e] += dot<M>(alpha, d);
          K[e] += 0.5 * dot<M>(d, M(beta[r] * d));
          if (track_rates) {
            const M dy = p2 * d;
            const M dz = p2 * (c * d);
            sx[e] = std::max(sx[e], dot<M>(d, d));
            sy[e] = std::max(sy[e], dot<M>(dy, dy));
            iz[e] += co.hf * dot<M>(dz, dz);
          }
          d = d + (a * d) * co.hf + (c * d) * dw;
        }
      }
      x = x + (a * x) * co.hf + (c * x) * dw;
    }

    const M g1x = co.G1 * x;
    base += dot<M>(x, g1x);
    for (std::size_t e = 0; e < E; ++e) {
      const M& d = xi[e];
      L[e] += dot<M>(d, g1x);
      K[e] += 0.5 * dot<M>(d, M(co.G1 * d));
      if (track_rates) {
        const M dy = co.p2[co.steps] * d;
        sx[e] = std::max(sx[e], dot<M>(d, d));
        sy[e] = std::max(sy[e], dot<M>(dy, dy));
      }
    }
    out.base[p] = 0.5 * base;
  }, 64);
  return out;
}

template <class F>
decltype(auto) dispatch(const ProblemSpec& spec, F&& fn)
{
  if (spec.dims.one_dim()) return fn(Scalar1{});
  return fn(Matrix{});
}

inline std::vector<std::size_t> snap_ladder(const std::vector<double>& eps, double hf, std::size_t max_steps)
{
  std::vector<std::size_t> out;
  for (double e : eps) out.push_back(snap_eps(e, hf, max_steps));
  return out;
}

}  // namespace detail

/// Closed-loop paths with Y = P2 X and Z = P2 C_th X.
inline PathBundle simulate_closed_loop(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2,
                                       const SimConfig& cfg)
{
  detail::ThreadScope scope(cfg.threads);
  return detail::dispatch(spec, [&](auto tag) {
    using M = decltype(tag);
    const auto co = detail::build_sim<M>(spec, theta, p2, cfg);
    const M v = detail::to_mat<M>(Matrix::Zero(spec.dims.k, 1));
    return detail::simulate_bundle<M>(spec, co, cfg, v, 0);
  });
}

/// Paths under u = chi_[t, t+eps) v + Theta X, on the same Brownian increments as the closed loop.
inline PathBundle simulate_spike(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2,
                                 const SimConfig& cfg, const SpikeSpec& spike, double eps)
{
  detail::ThreadScope scope(cfg.threads);
  if (spike.v.size() != spec.dims.k) throw std::invalid_argument("simulate_spike: v must have k entries");
  return detail::dispatch(spec, [&](auto tag) {
    using M = decltype(tag);
    const auto co = detail::build_sim<M>(spec, theta, p2, cfg);
    const std::size_t n_eps = detail::snap_eps(eps, co.hf, co.steps);
    return detail::simulate_bundle<M>(spec, co, cfg, detail::to_mat<M>(spike.v), n_eps);
  });
}

/// Monte-Carlo estimate of the cost at the bundle's start node.
inline CostEstimate evaluate_cost(const ProblemSpec& spec, const PathBundle& bundle, std::size_t t_node)
{
  if (bundle.fine_grid.horizon() != spec.grid.horizon() || bundle.fine_grid.steps() % spec.grid.steps() != 0) {
    throw std::invalid_argument("evaluate_cost: bundle grid does not refine the problem grid");
  }
  const std::size_t sub = bundle.fine_grid.steps() / spec.grid.steps();
  if (t_node * sub != bundle.start) throw std::invalid_argument("evaluate_cost: t must be the bundle start node");
  if (bundle.n != spec.dims.n || bundle.m != spec.dims.m || bundle.k != spec.dims.k) {
    throw std::invalid_argument("evaluate_cost: bundle shapes do not match the problem");
  }
  const auto& w = spec.weights;
  const double t = spec.grid.node(t_node);
  const double hf = bundle.fine_grid.step();
  const std::size_t steps = bundle.steps();
  std::vector<Matrix> Q(steps), R(steps), M(steps), N(steps);
  for (std::size_t r = 0; r < steps; ++r) {
    const double s = bundle.fine_grid.node(bundle.start + r);
    Q[r] = w.Q(s, t);
    R[r] = w.R(s, t);
    M[r] = w.M(s, t);
    N[r] = w.N(s, t);
  }
  const Matrix G1 = w.G1(t), G2 = w.G2(t);
  std::vector<double> per(bundle.paths);
  parallel_for(0, bundle.paths, [&](std::size_t p) {
    double acc = 0.0;
    for (std::size_t r = 0; r < steps; ++r) {
      const auto x = bundle.x(p, r);
      const auto u = bundle.u(p, r);
      const auto y = bundle.y(p, r);
      const auto z = bundle.z(p, r);
      acc += hf * ((x.transpose() * Q[r] * x)(0, 0) + (u.transpose() * R[r] * u)(0, 0) +
                   (y.transpose() * M[r] * y)(0, 0) + (z.transpose() * N[r] * z)(0, 0));
    }
    const auto xT = bundle.x(p, steps);
    const auto y0 = bundle.y(p, 0);
    acc += (xT.transpose() * G1 * xT)(0, 0) + (y0.transpose() * G2 * y0)(0, 0);
    per[p] = 0.5 * acc;
  }, 64);
  return detail::mean_stderr(per);
}

/// Difference quotients (J(u^eps) - J(u)) / eps across the ladder, with the expansion limits.
inline SpikeReport spike_test(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2,
                              const RiccatiFields& fields, const SimConfig& cfg, const SpikeSpec& spike)
{
  detail::ThreadScope scope(cfg.threads);
  if (spike.v.size() != spec.dims.k) throw std::invalid_argument("spike_test: v must have k entries");
  if (spike.epsilons.empty()) throw std::invalid_argument("spike_test: empty eps ladder");

  SpikeReport rep;
  rep.t_node = cfg.t_start;
  rep.t = spec.grid.node(cfg.t_start);
  rep.paths = cfg.paths;

  // expansion limit: 1/2 <Lambda v, v> + <res(t) x, v>
  const auto terms = feedback_terms(spec, fields.p1_diag, fields.p3_diag, fields.p2);
  const auto res = characterization_residual(spec, theta, fields);
  const Vector x0 = cfg.x0.size() == 0 ? Vector::Ones(spec.dims.n) : cfg.x0;
  const Matrix lam = terms.lambda.at(cfg.t_start);
  const double quad = 0.5 * spike.v.dot(lam * spike.v);
  const double first = spike.v.dot(res.at(cfg.t_start) * x0);

  detail::SpikeStream stream;
  std::vector<std::size_t> n_eps;
  double hf = 0.0;
  detail::dispatch(spec, [&](auto tag) {
    using M = decltype(tag);
    const auto co = detail::build_sim<M>(spec, theta, p2, cfg);
    hf = co.hf;
    n_eps = detail::snap_ladder(spike.epsilons, co.hf, co.steps);
    stream = detail::spike_stream<M>(co, cfg, detail::to_mat<M>(spike.v), n_eps, false);
    return 0;
  });
  rep.base_cost = detail::mean_stderr(stream.base);

  const std::size_t E = n_eps.size();
  std::vector<double> dl(cfg.paths), dk(cfg.paths), dd(cfg.paths);
  for (double c : spike.scales) {
    SpikeRow last;
    for (std::size_t e = 0; e < E; ++e) {
      const double eps = static_cast<double>(n_eps[e]) * hf;
      for (std::size_t p = 0; p < cfg.paths; ++p) {
        dl[p] = c * stream.L[p * E + e] / eps;
        dk[p] = c * c * stream.K[p * E + e] / eps;
        dd[p] = dl[p] + dk[p];
      }
      SpikeRow row;
      row.scale = c;
      row.eps = eps;
      row.eps_steps = n_eps[e];
      const auto d = detail::mean_stderr(dd), l = detail::mean_stderr(dl), k = detail::mean_stderr(dk);
      row.delta = d.mean;
      row.stderr_ = d.stderr_;
      row.first_order = l.mean;
      row.first_order_stderr = l.stderr_;
      row.quadratic = k.mean;
      row.quadratic_stderr = k.stderr_;
      row.theory_quadratic = c * c * quad;
      row.theory_first_order = c * first;
      if (row.delta < -3.0 * row.stderr_) rep.all_nonnegative = false;
      rep.rows.push_back(row);
      last = row;
    }
    if (last.delta < -3.0 * last.stderr_) rep.liminf_pass = false;
    const double limit = last.theory_quadratic + last.theory_first_order;
    if (std::abs(last.delta - limit) > 3.0 * last.stderr_) rep.converges = false;
  }
  return rep;
}

inline SpikeReport spike_test(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2,
                              const SimConfig& cfg, const SpikeSpec& spike)
{
  return spike_test(spec, theta, p2, solve_riccati(spec, theta), cfg, spike);
}

/// E sup|X^eps - X|^2 and E[sup|Y^eps - Y|^2 + int |Z^eps - Z|^2] across the ladder, with log-log slopes.
inline RateReport perturbation_rates(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2,
                                     const SimConfig& cfg, const SpikeSpec& spike)
{
  detail::ThreadScope scope(cfg.threads);
  if (spike.v.size() != spec.dims.k) throw std::invalid_argument("perturbation_rates: v must have k entries");
  detail::SpikeStream stream;
  std::vector<std::size_t> n_eps;
  double hf = 0.0;
  detail::dispatch(spec, [&](auto tag) {
    using M = decltype(tag);
    const auto co = detail::build_sim<M>(spec, theta, p2, cfg);
    hf = co.hf;
    n_eps = detail::snap_ladder(spike.epsilons, co.hf, co.steps);
    stream = detail::spike_stream<M>(co, cfg, detail::to_mat<M>(spike.v), n_eps, true);
    return 0;
  });
  RateReport rep;
  const std::size_t E = n_eps.size();
  std::vector<double> a(cfg.paths), b(cfg.paths), xs, ys, zs;
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      a[p] = stream.sup_dx2[p * E + e];
      b[p] = stream.sup_dy2[p * E + e] + stream.int_dz2[p * E + e];
    }
    RateRow row;
    row.eps = static_cast<double>(n_eps[e]) * hf;
    const auto ma = detail::mean_stderr(a), mb = detail::mean_stderr(b);
    row.sup_dx2 = ma.mean;
    row.sup_dx2_stderr = ma.stderr_;
    row.dyz = mb.mean;
    row.dyz_stderr = mb.stderr_;
    rep.rows.push_back(row);
    xs.push_back(row.eps);
    ys.push_back(row.sup_dx2);
    zs.push_back(row.dyz);
  }
  rep.slope_x = detail::slope_loglog(xs, ys);
  rep.slope_yz = detail::slope_loglog(xs, zs);
  return rep;
}

/**
 * Root-mean-square over paths of the accumulated one-step defect of the
 * backward equation along (Y, Z) = (P2 X, P2 C_th X):
 *   d_r = Y_{r+1} - Y_r + (Ahat X + Bhat u + Chat Y + Dhat Z)_r h - Z_r dW_r.
 */
inline double bsde_residual_check(const ProblemSpec& spec, const Strategy& theta, const OneTimeField& p2,
                                  const SimConfig& cfg)
{
  detail::ThreadScope scope(cfg.threads);
  std::vector<double> per(cfg.paths, 0.0);
  detail::dispatch(spec, [&](auto tag) {
    using M = decltype(tag);
    const auto co = detail::build_sim<M>(spec, theta, p2, cfg);
    parallel_for(0, cfg.paths, [&](std::size_t p) {
      GaussianStream rng(cfg.seed, p);
      M x = co.x0;
      M acc = co.p2[0] * x * 0.0;
      for (std::size_t r = 0; r < co.steps; ++r) {
        const M u = co.th[r] * x;
        const M y = co.p2[r] * x;
        const M z = co.p2[r] * (co.c_th[r] * x);
        const double dw = co.sqrt_hf * rng(co.l0 + r);
        const M xn = x + (co.a_th[r] * x) * co.hf + (co.c_th[r] * x) * dw;
        const M yn = co.p2[r + 1] * xn;
        acc += yn - y + (co.Ah[r] * x + co.Bh[r] * u + co.Ch[r] * y + co.Dh[r] * z) * co.hf - z * dw;
        x = xn;
      }
      per[p] = detail::dot<M>(acc, acc);
    }, 64);
    return 0;
  });
  return std::sqrt(pairwise_sum(per) / static_cast<double>(cfg.paths));
}

}  // namespace tilq

#endif  // TILQ_FBSDE_SIM_HPP
