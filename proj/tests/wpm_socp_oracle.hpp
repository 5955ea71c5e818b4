// SPDX-License-Identifier: Apache-2.0
// Test-only oracle: the weighted power minimization subproblem in SOCP form,
// solved by the cone solver. Kept independent of the dual-BCD solve path.
#pragma once

#include <vector>

#include "ucran/dual_bcd.hpp"
#include "ucran/socp.hpp"

namespace ucran::testing {

struct WpmSocpOracle {
  ConeProgram prog;
  std::vector<std::vector<int>> block_base;  // [user pos][serving pos]
  int epigraph_idx = -1;
};

/// min s  s.t.  sum_k ||G_k^{1/2} Vbar_k||_F^2 <= s,
///   per user: stacked || W^{1/2} U^H Hbar_{j,k} Vbar_j - d_{jk} W^{1/2} ||_F
///             <= sqrt(c_k + Tr W_k),
///   per RRH:  ||vec blocks|| <= sqrt(P_max).
inline WpmSocpOracle build_wpm_socp(const NetworkInstance& inst,
                                    const WpmSubproblem& sub) {
  const auto& cl = sub.cl;
  const int m = inst.config.tx_antennas;
  const int d = inst.config.streams;
  const int n_users = sub.users();

  WpmSocpOracle out;
  out.block_base.resize(static_cast<std::size_t>(n_users));
  int next = 0;
  for (int u = 0; u < n_users; ++u) {
    const int k = cl.users[static_cast<std::size_t>(u)];
    for (std::size_t j = 0; j < cl.rrhs_of[static_cast<std::size_t>(k)].size(); ++j) {
      out.block_base[static_cast<std::size_t>(u)].push_back(next);
      next += 2 * m * d;
    }
  }
  const int n = next;
  out.prog.objective = RVec::Zero(n);

  // rate cones
  for (int kp = 0; kp < n_users; ++kp) {
    const int k = cl.users[static_cast<std::size_t>(kp)];
    const CMat wsqrt = hermitian_sqrt_psd(sub.w[static_cast<std::size_t>(kp)]);
    const double radius2 =
        sub.c[static_cast<std::size_t>(kp)] + std::real(sub.w[static_cast<std::size_t>(kp)].trace());
    detail::require(radius2 >= 0.0, "wpm oracle: infeasible constant");
    const int rows = 2 * n_users * d * d;
    RMat a = RMat::Zero(rows, n);
    RVec b = RVec::Zero(rows);
    for (int jp = 0; jp < n_users; ++jp) {
      const int j = cl.users[static_cast<std::size_t>(jp)];
      // T = W^{1/2} U^H Hbar_{j,k}  (d x |I_j|M); rows encode T * Vbar_j
      const CMat t = wsqrt * sub.u[static_cast<std::size_t>(kp)].adjoint() *
                     stacked_channel(inst, cl, j, k);
      const auto& bases = out.block_base[static_cast<std::size_t>(jp)];
      for (int c = 0; c < d; ++c) {
        for (int r = 0; r < d; ++r) {
          const int row_re = 2 * jp * d * d + 2 * (c * d + r);
          const int row_im = row_re + 1;
          for (std::size_t blk = 0; blk < bases.size(); ++blk) {
            for (int p = 0; p < m; ++p) {
              const Cplx tv = t(r, static_cast<Eigen::Index>(blk) * m + p);
              const int vre = bases[blk] + 2 * (c * m + p);
              a(row_re, vre) = tv.real();
              a(row_re, vre + 1) = -tv.imag();
              a(row_im, vre) = tv.imag();
              a(row_im, vre + 1) = tv.real();
            }
          }
          if (jp == kp) {
            b(row_re) = -wsqrt(r, c).real();
            b(row_im) = -wsqrt(r, c).imag();
          }
        }
      }
    }
    out.prog.constraints.push_back(
        {std::move(a), std::move(b), RVec::Zero(n), std::sqrt(radius2)});
  }

  // power cones
  for (int i : cl.rrhs) {
    const auto& served = cl.users_of[static_cast<std::size_t>(i)];
    const int rows = 2 * m * d * static_cast<int>(served.size());
    RMat a = RMat::Zero(rows, n);
    int row = 0;
    for (int k : served) {
      const int u = cl.user_pos(k);
      const int jpos = cl.block_pos(i, k);
      const int base = out.block_base[static_cast<std::size_t>(u)][static_cast<std::size_t>(jpos)];
      for (int e = 0; e < 2 * m * d; ++e) a(row++, base + e) = 1.0;
    }
    out.prog.constraints.push_back(
        {std::move(a), RVec::Zero(rows), RVec::Zero(n), std::sqrt(sub.p_max)});
  }

  // weighted-power epigraph
  RVec quad = RVec::Zero(n);
  for (int u = 0; u < n_users; ++u) {
    const int k = cl.users[static_cast<std::size_t>(u)];
    const auto& diag = sub.g_diag[static_cast<std::size_t>(u)];
    for (std::size_t j = 0; j < out.block_base[static_cast<std::size_t>(u)].size(); ++j) {
      const int base = out.block_base[static_cast<std::size_t>(u)][static_cast<std::size_t>(j)];
      for (int c = 0; c < d; ++c)
        for (int p = 0; p < m; ++p) {
          const double wgt = diag(static_cast<Eigen::Index>(j) * m + p);
          quad(base + 2 * (c * m + p)) = wgt;
          quad(base + 2 * (c * m + p) + 1) = wgt;
        }
    }
    (void)k;
  }
  out.epigraph_idx = quadratic_epigraph(out.prog, quad, RVec::Zero(n), 0.0);
  out.prog.objective(out.epigraph_idx) = 1.0;
  return out;
}

/// Weighted transmit power sum of a precoder set under the subproblem's G_k.
inline double weighted_power_objective(const WpmSubproblem& sub,
                                       const PrecoderSet& p) {
  double obj = 0.0;
  for (int kp = 0; kp < sub.users(); ++kp) {
    const CMat v = stack_big_precoder(p, sub.cl.users[static_cast<std::size_t>(kp)]);
    obj += std::real(
        (v.adjoint() * sub.g_diag[static_cast<std::size_t>(kp)].cast<Cplx>().asDiagonal() * v)
            .trace());
  }
  return obj;
}

}  // namespace ucran::testing
