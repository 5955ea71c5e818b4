// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "ucran/mmse.hpp"
#include "ucran/network.hpp"

namespace ucran {

/// Data of the per-WMMSE-iteration weighted power minimization subproblem at
/// fixed receivers and weights, plus the multiplier-independent matrix cache.
/// All per-user containers are indexed by position within cluster.users.
struct WpmSubproblem {
  Cluster cl;
  int tx_antennas = 0;
  int streams = 0;
  std::vector<CMat> u;           // receivers
  std::vector<CMat> w;           // weights
  std::vector<double> c;         // rate-constraint constants c_k
  std::vector<RVec> g_diag;      // diagonal of G_k (omega per antenna block)
  double p_max = 0.0;
  double r_min = 0.0;

  // fixed across dual updates
  std::vector<std::vector<CMat>> h_breve;  // [j][k]: Hbar_{j,k}^H U_k W_k
  std::vector<std::vector<CMat>> h_hat;    // [j][k]: breve * (Hbar^H U)^H

  int users() const { return static_cast<int>(cl.users.size()); }
  int rrhs() const { return static_cast<int>(cl.rrhs.size()); }
};

/// Weighted power minimization data at per-RRH weights `omega` (indexed by
/// global RRH id). r_min enters only through the constants c_k.
inline WpmSubproblem build_wpm_subproblem(const NetworkInstance& inst,
                                          const Cluster& cl,
                                          const ReceiverState& rs,
                                          const std::vector<double>& omega) {
  const int m = inst.config.tx_antennas;
  const int d = inst.config.streams;
  WpmSubproblem sub;
  sub.cl = cl;
  sub.tx_antennas = m;
  sub.streams = d;
  sub.p_max = inst.power.p_max;
  sub.r_min = inst.config.rate_min;
  const int n = static_cast<int>(cl.users.size());
  sub.u.resize(n);
  sub.w.resize(n);
  sub.c.resize(n);
  sub.g_diag.resize(n);
  for (int kp = 0; kp < n; ++kp) {
    const int k = cl.users[static_cast<std::size_t>(kp)];
    sub.u[kp] = rs.u[static_cast<std::size_t>(k)];
    sub.w[kp] = rs.w[static_cast<std::size_t>(k)];
    const double logdet =
        log_det_hermitian_pd(sub.w[kp], "wpm: W_k not positive definite");
    sub.c[kp] = logdet + d - inst.config.rate_min -
                std::real(sub.w[kp].trace()) -
                inst.noise_power(k) *
                    std::real((sub.u[kp].adjoint() * sub.u[kp] * sub.w[kp]).trace());
    const auto& serving = cl.rrhs_of[static_cast<std::size_t>(k)];
    RVec diag(static_cast<Eigen::Index>(serving.size()) * m);
    for (std::size_t b = 0; b < serving.size(); ++b)
      diag.segment(static_cast<Eigen::Index>(b) * m, m)
          .setConstant(omega[static_cast<std::size_t>(serving[b])]);
    sub.g_diag[kp] = diag;
  }
  sub.h_breve.assign(n, std::vector<CMat>(n));
  sub.h_hat.assign(n, std::vector<CMat>(n));
  for (int jp = 0; jp < n; ++jp) {
    const int j = cl.users[static_cast<std::size_t>(jp)];
    for (int kp = 0; kp < n; ++kp) {
      const int k = cl.users[static_cast<std::size_t>(kp)];
      const CMat h_tilde = stacked_channel(inst, cl, j, k).adjoint() * sub.u[kp];
      sub.h_breve[jp][kp] = h_tilde * sub.w[kp];
      sub.h_hat[jp][kp] = sub.h_breve[jp][kp] * h_tilde.adjoint();
    }
  }
  return sub;
}

/// Multipliers and the multiplier-dependent matrix cache.
struct DualState {
  RVec lambda;  // per user position
  RVec mu;      // per position in cl.rrhs
  std::vector<CMat> g_tilde;                     // Gbar_k^{-1}
  std::vector<CMat> c_mat;                       // C_k = g_tilde * h_breve_kk
  std::vector<double> tr_f;                      // Tr(F_k)
  std::vector<std::vector<CMat>> y;              // Y_{j,k}
  std::vector<std::vector<CMat>> y_tilde;        // Y_{j,k} g_tilde_j
  std::vector<std::vector<double>> tr_z;         // Tr(Z_{j,k})
  std::vector<std::vector<double>> block_power;  // [k][serving pos]: Tr(B D_k)
  bool fresh = false;
};

/// Gbar_k = G_k + sum_j lambda_j Hhat_{k,j} + per-block mu terms.
inline CMat assemble_gbar(const WpmSubproblem& sub, const RVec& lambda,
                          const RVec& mu, int kp) {
  const int m = sub.tx_antennas;
  const int k = sub.cl.users[static_cast<std::size_t>(kp)];
  CMat g = sub.g_diag[static_cast<std::size_t>(kp)].cast<Cplx>().asDiagonal();
  for (int jp = 0; jp < sub.users(); ++jp)
    g.noalias() += lambda(jp) * sub.h_hat[static_cast<std::size_t>(kp)][static_cast<std::size_t>(jp)];
  const auto& serving = sub.cl.rrhs_of[static_cast<std::size_t>(k)];
  for (std::size_t b = 0; b < serving.size(); ++b) {
    const auto rrh_pos =
        std::lower_bound(sub.cl.rrhs.begin(), sub.cl.rrhs.end(), serving[b]) -
        sub.cl.rrhs.begin();
    g.diagonal()
        .segment(static_cast<Eigen::Index>(b) * m, m)
        .array() += mu(static_cast<Eigen::Index>(rrh_pos));
  }
  return 0.5 * (g + g.adjoint());
}

/// Rebuilds every multiplier-dependent matrix for (lambda, mu).
inline void refresh_dual_cache(const WpmSubproblem& sub, DualState& st) {
  const int n = sub.users();
  const int m = sub.tx_antennas;
  st.g_tilde.resize(n);
  st.c_mat.resize(n);
  st.tr_f.resize(n);
  st.y.assign(n, std::vector<CMat>(n));
  st.y_tilde.assign(n, std::vector<CMat>(n));
  st.tr_z.assign(n, std::vector<double>(n));
  st.block_power.resize(n);
  for (int kp = 0; kp < n; ++kp) {
    const CMat gbar = assemble_gbar(sub, st.lambda, st.mu, kp);
    Eigen::LLT<CMat> llt(gbar);
    detail::require(llt.info() == Eigen::Success, "dual cache: Gbar not PD");
    st.g_tilde[kp] = llt.solve(CMat::Identity(gbar.rows(), gbar.cols()));
    st.c_mat[kp] = st.g_tilde[kp] * sub.h_breve[kp][kp];
    st.tr_f[kp] =
        std::real((sub.h_breve[kp][kp].adjoint() * st.c_mat[kp]).trace());
    const int k = sub.cl.users[static_cast<std::size_t>(kp)];
    const auto& serving = sub.cl.rrhs_of[static_cast<std::size_t>(k)];
    st.block_power[kp].resize(serving.size());
    for (std::size_t b = 0; b < serving.size(); ++b)
      st.block_power[kp][b] =
          st.c_mat[kp].middleRows(static_cast<Eigen::Index>(b) * m, m).squaredNorm();
  }
  for (int jp = 0; jp < n; ++jp)
    for (int kp = 0; kp < n; ++kp) {
      st.y[jp][kp] = st.c_mat[jp].adjoint() * sub.h_hat[jp][kp];
      st.y_tilde[jp][kp] = st.y[jp][kp] * st.g_tilde[jp];
      st.tr_z[jp][kp] = std::real((st.y[jp][kp] * st.c_mat[jp]).trace());
    }
  st.fresh = true;
}

/// Dual objective f = sum_k lambda_k^2 Tr(F_k) + sum_k lambda_k c_k +
/// P_max sum_i mu_i (the negated dual function; minimized over duals >= 0).
inline double dual_value(const WpmSubproblem& sub, const RVec& lambda,
                         const RVec& mu) {
  double f = sub.p_max * mu.sum();
  for (int kp = 0; kp < sub.users(); ++kp) {
    const CMat gbar = assemble_gbar(sub, lambda, mu, kp);
    Eigen::LLT<CMat> llt(gbar);
    detail::require(llt.info() == Eigen::Success, "dual_value: Gbar not PD");
    const double tr_f = std::real(
        (sub.h_breve[kp][kp].adjoint() * llt.solve(sub.h_breve[kp][kp])).trace());
    f += lambda(kp) * lambda(kp) * tr_f + lambda(kp) * sub.c[static_cast<std::size_t>(kp)];
  }
  return f;
}

/// Analytic lambda-gradient at a fresh cache.
inline RVec grad_lambda(const WpmSubproblem& sub, const DualState& st) {
  detail::require(st.fresh, "grad_lambda: stale cache");
  const int n = sub.users();
  RVec g(n);
  for (int kp = 0; kp < n; ++kp) {
    double acc = 2.0 * st.lambda(kp) * st.tr_f[static_cast<std::size_t>(kp)] +
                 sub.c[static_cast<std::size_t>(kp)];
    for (int jp = 0; jp < n; ++jp)
      acc -= st.lambda(jp) * st.lambda(jp) * st.tr_z[static_cast<std::size_t>(jp)][static_cast<std::size_t>(kp)];
    g(kp) = acc;
  }
  return g;
}

/// Analytic lambda-Hessian at a fresh cache; symmetric by construction.
inline RMat hessian_lambda(const WpmSubproblem& sub, const DualState& st) {
  detail::require(st.fresh, "hessian_lambda: stale cache");
  const int n = sub.users();
  RMat h(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 2.0 * st.tr_f[static_cast<std::size_t>(i)] -
                  4.0 * st.lambda(i) * st.tr_z[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    for (int kp = 0; kp < n; ++kp)
      diag += 2.0 * st.lambda(kp) * st.lambda(kp) *
              std::real((st.y_tilde[static_cast<std::size_t>(kp)][static_cast<std::size_t>(i)] *
                         st.y[static_cast<std::size_t>(kp)][static_cast<std::size_t>(i)].adjoint())
                            .trace());
    h(i, i) = diag;
    for (int j = i + 1; j < n; ++j) {
      double off = -2.0 * st.lambda(i) * st.tr_z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                   2.0 * st.lambda(j) * st.tr_z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      for (int kp = 0; kp < n; ++kp)
        off += 2.0 * st.lambda(kp) * st.lambda(kp) *
               std::real((st.y_tilde[static_cast<std::size_t>(kp)][static_cast<std::size_t>(j)] *
                          st.y[static_cast<std::size_t>(kp)][static_cast<std::size_t>(i)].adjoint())
                             .trace());
      h(i, j) = off;
      h(j, i) = off;
    }
  }
  return h;
}

/// Analytic mu-gradient at a fresh cache: P_max minus the power the
/// dual-implied primal would spend at each RRH.
inline RVec grad_mu(const WpmSubproblem& sub, const DualState& st) {
  detail::require(st.fresh, "grad_mu: stale cache");
  RVec g = RVec::Constant(sub.rrhs(), sub.p_max);
  for (int kp = 0; kp < sub.users(); ++kp) {
    const int k = sub.cl.users[static_cast<std::size_t>(kp)];
    const auto& serving = sub.cl.rrhs_of[static_cast<std::size_t>(k)];
    for (std::size_t b = 0; b < serving.size(); ++b) {
      const auto rrh_pos =
          std::lower_bound(sub.cl.rrhs.begin(), sub.cl.rrhs.end(), serving[b]) -
          sub.cl.rrhs.begin();
      g(static_cast<Eigen::Index>(rrh_pos)) -=
          st.lambda(kp) * st.lambda(kp) * st.block_power[static_cast<std::size_t>(kp)][b];
    }
  }
  return g;
}

/// Primal recovery V_k = lambda_k Gbar_k^{-1} Hbreve_{k,k} at a fresh cache.
inline PrecoderSet primal_from_dual(const WpmSubproblem& sub, const DualState& st) {
  detail::require(st.fresh, "primal_from_dual: stale cache");
  PrecoderSet p = PrecoderSet::zeros(sub.cl, sub.tx_antennas, sub.streams);
  for (int kp = 0; kp < sub.users(); ++kp) {
    const int k = sub.cl.users[static_cast<std::size_t>(kp)];
    unstack_big_precoder(p, k, st.lambda(kp) * st.c_mat[static_cast<std::size_t>(kp)]);
  }
  return p;
}

struct ArmijoOptions {
  int t_max = 50;
  double xi = 0.01;   // accepted fraction of the predicted decrease
  double phi = 0.5;   // backtracking shrink factor
  double decrement_tol = 1e-10;  // Newton stop: o / 2 <= tol
  double rel_tol = 1e-3;         // gradient-descent stop on relative decrease
};

/// Projected Newton descent over the nonnegative orthant with Armijo
/// backtracking. Levenberg damping covers near-singular Hessians. Returns
/// the iterate; iters_used reports when the decrement test fired.
template <class Value, class Grad, class Hess>
RVec newton_nonneg(Value&& value, Grad&& grad, Hess&& hess, RVec x,
                   const ArmijoOptions& opt = {}, int* iters_used = nullptr) {
  const int n = static_cast<int>(x.size());
  int used = opt.t_max;
  for (int t = 0; t < opt.t_max; ++t) {
    const RVec g = grad(x);
    RMat h = hess(x);
    RVec step;
    Eigen::LLT<RMat> llt(h);
    if (llt.info() != Eigen::Success) {
      h.diagonal().array() += 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
      llt.compute(h);
    }
    if (llt.info() == Eigen::Success) {
      step = llt.solve(-g);
    } else {
      step = -g;  // gradient fallback
    }
    const double decrement = -g.dot(step);
    if (decrement / 2.0 <= opt.decrement_tol) {
      used = t;
      break;
    }
    const RVec target = (x + step).cwiseMax(0.0);
    const RVec dir = target - x;
    const double slope = g.dot(dir);
    if (slope >= -1e-15 * (1.0 + std::abs(value(x)))) {
      used = t;
      break;  // projected-stationary: the cone blocks every descent move
    }
    const double f0 = value(x);
    double kappa = 1.0;
    bool moved = false;
    for (int m = 0; m < 60; ++m, kappa *= opt.phi) {
      const RVec cand = x + kappa * dir;
      if (value(cand) - f0 <= opt.xi * kappa * slope) {
        x = cand;
        moved = true;
        break;
      }
    }
    if (!moved) {
      used = t;
      break;  // numerical floor reached
    }
  }
  if (iters_used) *iters_used = used;
  return x;
}

/// Projected gradient descent over the nonnegative orthant with unit
/// pre-step and Armijo backtracking.
template <class Value, class Grad>
RVec gradient_nonneg(Value&& value, Grad&& grad, RVec x,
                     const ArmijoOptions& opt = {}, int* iters_used = nullptr) {
  int used = opt.t_max;
  double f_prev = value(x);
  for (int t = 0; t < opt.t_max; ++t) {
    const RVec g = grad(x);
    const RVec target = (x - g).cwiseMax(0.0);
    const RVec dir = target - x;
    const double slope = g.dot(dir);
    if (slope >= -1e-15 * (1.0 + std::abs(f_prev))) {
      used = t;
      break;
    }
    double kappa = 1.0;
    double f_new = f_prev;
    bool moved = false;
    for (int m = 0; m < 60; ++m, kappa *= opt.phi) {
      const RVec cand = x + kappa * dir;
      const double fc = value(cand);
      if (fc - f_prev <= opt.xi * kappa * slope) {
        x = cand;
        f_new = fc;
        moved = true;
        break;
      }
    }
    if (!moved) {
      used = t;
      break;
    }
    if (std::abs(f_new - f_prev) < opt.rel_tol * std::max(std::abs(f_new), 1e-30)) {
      used = t + 1;
      f_prev = f_new;
      break;
    }
    f_prev = f_new;
  }
  if (iters_used) *iters_used = used;
  return x;
}

/// Newton update of lambda at fixed mu (dual objective restricted to lambda).
inline RVec newton_lambda(const WpmSubproblem& sub, const RVec& mu, RVec lambda,
                          const ArmijoOptions& opt = {}, int* iters = nullptr) {
  auto value = [&](const RVec& l) { return dual_value(sub, l, mu); };
  auto grad = [&](const RVec& l) {
    DualState st;
    st.lambda = l;
    st.mu = mu;
    refresh_dual_cache(sub, st);
    return grad_lambda(sub, st);
  };
  auto hess = [&](const RVec& l) {
    DualState st;
    st.lambda = l;
    st.mu = mu;
    refresh_dual_cache(sub, st);
    return hessian_lambda(sub, st);
  };
  return newton_nonneg(value, grad, hess, std::move(lambda), opt, iters);
}

/// Projected-gradient update of mu at fixed lambda.
inline RVec gradient_mu(const WpmSubproblem& sub, const RVec& lambda, RVec mu,
                        const ArmijoOptions& opt = {}, int* iters = nullptr) {
  auto value = [&](const RVec& m) { return dual_value(sub, lambda, m); };
  auto grad = [&](const RVec& m) {
    DualState st;
    st.lambda = lambda;
    st.mu = m;
    refresh_dual_cache(sub, st);
    return grad_mu(sub, st);
  };
  return gradient_nonneg(value, grad, std::move(mu), opt, iters);
}

struct KktReport {
  double stationarity = 0.0;
  double rate_violation = 0.0;   // max_k (R_min - h_k)+ via constraint slack
  double power_violation = 0.0;  // max_i (P_i - P_max)+
  double comp_rate = 0.0;        // max_k |lambda_k (h_k - R_min)|
  double comp_power = 0.0;       // max_i |mu_i (P_max - P_i)|

  double worst() const {
    return std::max({stationarity, rate_violation, power_violation, comp_rate,
                     comp_power});
  }
};

/// Constraint slack h_k - R_min of the rate constraint at the given primal,
/// evaluated through the subproblem's quadratic form.
inline double rate_slack(const WpmSubproblem& sub, const PrecoderSet& p, int kp) {
  double q = 0.0;
  for (int jp = 0; jp < sub.users(); ++jp) {
    const CMat vj = stack_big_precoder(p, sub.cl.users[static_cast<std::size_t>(jp)]);
    q += std::real((vj.adjoint() * sub.h_hat[static_cast<std::size_t>(jp)][static_cast<std::size_t>(kp)] * vj).trace());
  }
  const CMat vk = stack_big_precoder(p, sub.cl.users[static_cast<std::size_t>(kp)]);
  q -= 2.0 * std::real((sub.h_breve[static_cast<std::size_t>(kp)][static_cast<std::size_t>(kp)].adjoint() * vk).trace());
  return sub.c[static_cast<std::size_t>(kp)] - q;
}

inline KktReport kkt_report(const WpmSubproblem& sub, const DualState& st,
                            const PrecoderSet& p) {
  KktReport rep;
  for (int kp = 0; kp < sub.users(); ++kp) {
    const int k = sub.cl.users[static_cast<std::size_t>(kp)];
    const CMat vk = stack_big_precoder(p, k);
    const CMat gbar = assemble_gbar(sub, st.lambda, st.mu, kp);
    const CMat grad = gbar * vk - st.lambda(kp) * sub.h_breve[static_cast<std::size_t>(kp)][static_cast<std::size_t>(kp)];
    rep.stationarity = std::max(
        rep.stationarity,
        grad.norm() / (1.0 + sub.h_breve[static_cast<std::size_t>(kp)][static_cast<std::size_t>(kp)].norm()));
    const double slack = rate_slack(sub, p, kp);
    rep.rate_violation = std::max(rep.rate_violation, std::max(0.0, -slack));
    rep.comp_rate = std::max(rep.comp_rate, std::abs(st.lambda(kp) * slack));
  }
  for (int b = 0; b < sub.rrhs(); ++b) {
    const int i = sub.cl.rrhs[static_cast<std::size_t>(b)];
    const double power = transmit_power(p, i);
    rep.power_violation = std::max(rep.power_violation, power - sub.p_max);
    rep.comp_power =
        std::max(rep.comp_power, std::abs(st.mu(b) * (sub.p_max - power)));
  }
  return rep;
}

namespace detail {

// Exact transmit power of the RRH at position b under the dual-implied
// primal; only the served users' blocks are recomputed.
inline double rrh_power_at(const WpmSubproblem& sub, const RVec& lambda,
                           const RVec& mu, int b) {
  const int m = sub.tx_antennas;
  const int i = sub.cl.rrhs[static_cast<std::size_t>(b)];
  double power = 0.0;
  for (int k : sub.cl.users_of[static_cast<std::size_t>(i)]) {
    const int kp = sub.cl.user_pos(k);
    const CMat gbar = assemble_gbar(sub, lambda, mu, kp);
    Eigen::LLT<CMat> llt(gbar);
    const CMat c = llt.solve(sub.h_breve[static_cast<std::size_t>(kp)][static_cast<std::size_t>(kp)]);
    const int jpos = sub.cl.block_pos(i, k);
    power += lambda(kp) * lambda(kp) *
             c.middleRows(static_cast<Eigen::Index>(jpos) * m, m).squaredNorm();
  }
  return power;
}

// One Gauss-Seidel sweep of exact block minimization over each mu_b >= 0:
// either the cap is slack at mu_b = 0, or mu_b solves P_b(mu_b) = P_max.
inline void exact_mu_sweep(const WpmSubproblem& sub, const RVec& lambda, RVec& mu) {
  for (int b = 0; b < sub.rrhs(); ++b) {
    RVec trial = mu;
    trial(b) = 0.0;
    const double p0 = rrh_power_at(sub, lambda, trial, b);
    if (p0 <= sub.p_max) {
      mu(b) = 0.0;
      continue;
    }
    double hi = std::max(mu(b), 1.0);
    trial(b) = hi;
    for (int grow = 0; grow < 60 && rrh_power_at(sub, lambda, trial, b) > sub.p_max;
         ++grow) {
      hi *= 2.0;
      trial(b) = hi;
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      trial(b) = mid;
      if (rrh_power_at(sub, lambda, trial, b) > sub.p_max)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-14 * (1.0 + hi)) break;
    }
    mu(b) = hi;  // feasible side of the root
  }
}

}  // namespace detail

struct BcdOptions {
  int n_max = 30;
  double rel_tol = 1e-3;   // relative dual-value change
  double kkt_tol = 1e-4;
  ArmijoOptions newton;
  ArmijoOptions gradient;
  std::ostream* trace = nullptr;  // JSONL per-iteration dump
};

struct BcdResult {
  PrecoderSet primal;
  DualState duals;
  KktReport kkt;
  std::vector<double> f_trace;
  bool converged = false;
  int iterations = 0;
};

/// Block coordinate descent on the dual: Newton over lambda, projected
/// gradient over mu, repeated until the dual value and the KKT residuals
/// settle. A final Newton pass at the settled mu restores rate feasibility
/// of the recovered primal to working precision.
inline BcdResult bcd_solve(const WpmSubproblem& sub, const BcdOptions& opt = {},
                           std::optional<RVec> lambda0 = std::nullopt,
                           std::optional<RVec> mu0 = std::nullopt) {
  BcdResult res;
  RVec lambda = lambda0.value_or(RVec::Ones(sub.users()));
  RVec mu = mu0.value_or(RVec::Ones(sub.rrhs()));
  double f_prev = dual_value(sub, lambda, mu);
  for (int n = 0; n < opt.n_max; ++n) {
    res.iterations = n + 1;
    lambda = newton_lambda(sub, mu, lambda, opt.newton);
    mu = gradient_mu(sub, lambda, mu, opt.gradient);
    const double f_cur = dual_value(sub, lambda, mu);
    res.f_trace.push_back(f_cur);

    DualState st;
    st.lambda = lambda;
    st.mu = mu;
    refresh_dual_cache(sub, st);
    const KktReport rep = kkt_report(sub, st, primal_from_dual(sub, st));
    if (opt.trace) {
      *opt.trace << "{\"iter\":" << n << ",\"f\":" << f_cur
                 << ",\"kkt\":" << rep.worst() << ",\"lambda_max\":"
                 << lambda.maxCoeff() << ",\"mu_max\":" << mu.maxCoeff() << "}\n";
    }
    if (std::abs(f_cur - f_prev) <
            opt.rel_tol * std::max(std::abs(f_cur), 1e-30) &&
        rep.worst() <= opt.kkt_tol) {
      res.converged = true;
      break;
    }
    f_prev = f_cur;
  }
  // exact block polish: tight Newton over lambda restores rate feasibility
  // (violation scales like sqrt of the decrement) and per-coordinate root
  // finding on mu pins active caps; alternate until both residuals settle
  ArmijoOptions polish = opt.newton;
  polish.decrement_tol = 0.0;  // run to the numerical floor (stall break)
  polish.t_max = std::max(opt.newton.t_max, 80);
  lambda = newton_lambda(sub, mu, lambda, polish);
  for (int round = 0; round < 12; ++round) {
    detail::exact_mu_sweep(sub, lambda, mu);
    lambda = newton_lambda(sub, mu, lambda, polish);
    double worst_cap = 0.0;
    for (int b = 0; b < sub.rrhs(); ++b)
      worst_cap = std::max(
          worst_cap, detail::rrh_power_at(sub, lambda, mu, b) - sub.p_max);
    if (worst_cap <= 1e-9) break;
  }
  res.duals.lambda = lambda;
  res.duals.mu = mu;
  refresh_dual_cache(sub, res.duals);
  res.primal = primal_from_dual(sub, res.duals);
  res.kkt = kkt_report(sub, res.duals, res.primal);
  if (!res.converged && res.kkt.worst() <= opt.kkt_tol) res.converged = true;
  return res;
}

}  // namespace ucran
