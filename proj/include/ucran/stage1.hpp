// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ucran/mmse.hpp"
#include "ucran/network.hpp"
#include "ucran/socp.hpp"

namespace ucran {

enum class InitScheme { SvdInitial, RandInitial };

struct Stage1Options {
  InitScheme init = InitScheme::SvdInitial;
  std::uint64_t init_seed = 1;     // RandInitial draws
  int n_max = 30;                  // alternating iterations
  double obj_decrease_tol = 1e-6;  // stop when the objective stalls
  double admit_tol = 1e-4;         // alpha >= 1 - admit_tol counts admitted
  double socp_tol = 5e-8;
  int socp_max_iter = 100;
  bool stop_when_all_admitted = false;  // early exit for feasibility probes
};

struct AdmissionResult {
  std::vector<int> admitted_users;
  std::vector<double> alphas;  // indexed by global user id; 0 for unselected
  PrecoderSet precoders;
  ReceiverState receivers;
  std::vector<int> removal_order;
  std::vector<double> objective_trace;  // per-iteration sum (alpha_k - 1)^2
  bool converged = true;
};

/// Initial precoders satisfying each serving RRH's power cap with equality.
/// SvdInitial points each block along the top right-singular vectors of its
/// own link; RandInitial draws Gaussian blocks. Power is split equally over
/// the users an RRH serves.
inline PrecoderSet init_precoders(const NetworkInstance& inst, const Cluster& cl,
                                  InitScheme scheme, std::uint64_t seed = 1) {
  const int m = inst.config.tx_antennas;
  const int d = inst.config.streams;
  PrecoderSet p = PrecoderSet::zeros(cl, m, d);
  Philox rng(seed);
  std::uint64_t ctr = 0;
  for (int i : cl.rrhs) {
    const auto& served = cl.users_of[static_cast<std::size_t>(i)];
    const double block_power = inst.power.p_max / static_cast<double>(served.size());
    for (int k : served) {
      CMat blk(m, d);
      if (scheme == InitScheme::SvdInitial) {
        Eigen::JacobiSVD<CMat> svd(inst.channel(i, k), Eigen::ComputeFullV);
        blk = svd.matrixV().leftCols(d) * std::sqrt(block_power / d);
      } else {
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < m; ++r) blk(r, c) = rng.cnormal(0, ctr++);
        blk *= std::sqrt(block_power) / blk.norm();
      }
      p.block(i, k) = blk;
    }
  }
  return p;
}

/// Variable layout of the per-iteration SOCP: real/imag-flattened precoder
/// blocks (user-major, serving RRHs ascending, column-major within a block),
/// then the admission scalars, then the epigraph variable.
struct Stage1Vars {
  std::vector<std::vector<int>> block_base;  // [user pos][serving pos]
  std::vector<int> alpha_idx;                // [user pos], -1 when clamped to 0
  int epigraph_idx = -1;
  int num_vars = 0;
  int num_clamped = 0;
};

struct Stage1Program {
  ConeProgram prog;
  Stage1Vars vars;
  std::vector<double> t_values;  // per user pos
};

namespace detail {

// Rows of `cone` encode the real and imaginary parts of (Vbar_j^H Q), with Q
// constant, as linear functions of the flattened V variables.
inline void add_product_rows(RMat& a, RVec& b, int row0, const CMat& q,
                             const std::vector<int>& bases, int m, int d,
                             const CMat* offset) {
  const int dq = static_cast<int>(q.cols());
  for (int c = 0; c < dq; ++c) {
    for (int r = 0; r < d; ++r) {
      const int row_re = row0 + 2 * (c * d + r);
      const int row_im = row_re + 1;
      for (std::size_t blk = 0; blk < bases.size(); ++blk) {
        for (int p = 0; p < m; ++p) {
          const Cplx qv = q(static_cast<Eigen::Index>(blk) * m + p, c);
          const int vre = bases[blk] + 2 * (r * m + p);
          a(row_re, vre) = qv.real();
          a(row_re, vre + 1) = qv.imag();
          a(row_im, vre) = qv.imag();
          a(row_im, vre + 1) = -qv.real();
        }
      }
      if (offset) {
        b(row_re) = -(*offset)(r, c).real();
        b(row_im) = -(*offset)(r, c).imag();
      }
    }
  }
}

}  // namespace detail

/// Per-iteration SOCP of the admission problem at fixed receivers/weights:
/// minimize the epigraph of sum (alpha_k - 1)^2 under the per-user MSE cones
/// and per-RRH power cones. Users whose t_k is nonpositive get alpha fixed to
/// zero and their cone dropped for this round.
inline Stage1Program build_stage1_program(const NetworkInstance& inst,
                                          const Cluster& cl,
                                          const ReceiverState& rs) {
  const int m = inst.config.tx_antennas;
  const int d = inst.config.streams;
  const double rmin = inst.config.rate_min;
  const int n_users = static_cast<int>(cl.users.size());

  Stage1Program out;
  auto& vars = out.vars;
  vars.block_base.resize(static_cast<std::size_t>(n_users));
  vars.alpha_idx.assign(static_cast<std::size_t>(n_users), -1);
  int next = 0;
  for (int u = 0; u < n_users; ++u) {
    const int k = cl.users[static_cast<std::size_t>(u)];
    for (std::size_t j = 0; j < cl.rrhs_of[static_cast<std::size_t>(k)].size(); ++j) {
      vars.block_base[static_cast<std::size_t>(u)].push_back(next);
      next += 2 * m * d;
    }
  }
  out.t_values.resize(static_cast<std::size_t>(n_users));
  std::vector<char> clamped(static_cast<std::size_t>(n_users), 0);
  for (int u = 0; u < n_users; ++u) {
    const int k = cl.users[static_cast<std::size_t>(u)];
    const CMat& w = rs.w[static_cast<std::size_t>(k)];
    const CMat& uk = rs.u[static_cast<std::size_t>(k)];
    const double t = log_det_hermitian_pd(w, "stage1: W_k not positive definite") +
                     d - inst.noise_power(k) * std::real((uk.adjoint() * uk * w).trace());
    out.t_values[static_cast<std::size_t>(u)] = t;
    if (t <= 0.0) {
      clamped[static_cast<std::size_t>(u)] = 1;
      ++vars.num_clamped;
    } else {
      vars.alpha_idx[static_cast<std::size_t>(u)] = next++;
    }
  }
  const int n = next;
  vars.num_vars = n;  // epigraph variable appended below

  auto& prog = out.prog;
  prog.objective = RVec::Zero(n);

  // per-user MSE cones
  for (int u = 0; u < n_users; ++u) {
    if (clamped[static_cast<std::size_t>(u)]) continue;
    const int k = cl.users[static_cast<std::size_t>(u)];
    const CMat& uk = rs.u[static_cast<std::size_t>(k)];
    const CMat wsqrt = hermitian_sqrt_psd(rs.w[static_cast<std::size_t>(k)]);
    const bool with_alpha = rmin > 0.0;
    const int rows = 2 * n_users * d * d + (with_alpha ? 1 : 0);
    RMat a = RMat::Zero(rows, n);
    RVec b = RVec::Zero(rows);
    for (int j = 0; j < n_users; ++j) {
      const int kj = cl.users[static_cast<std::size_t>(j)];
      const CMat q = stacked_channel(inst, cl, kj, k).adjoint() * uk * wsqrt;
      const CMat* offset = (j == u) ? &wsqrt : nullptr;
      detail::add_product_rows(a, b, 2 * j * d * d, q,
                               vars.block_base[static_cast<std::size_t>(j)], m, d,
                               offset);
    }
    if (with_alpha)
      a(rows - 1, vars.alpha_idx[static_cast<std::size_t>(u)]) = std::sqrt(rmin);
    prog.constraints.push_back({std::move(a), std::move(b), RVec::Zero(n),
                                std::sqrt(out.t_values[static_cast<std::size_t>(u)])});
  }

  // per-RRH power cones
  for (int i : cl.rrhs) {
    const auto& served = cl.users_of[static_cast<std::size_t>(i)];
    const int rows = 2 * m * d * static_cast<int>(served.size());
    RMat a = RMat::Zero(rows, n);
    int row = 0;
    for (int k : served) {
      const int u = cl.user_pos(k);
      const int jpos = cl.block_pos(i, k);
      const int base = vars.block_base[static_cast<std::size_t>(u)][static_cast<std::size_t>(jpos)];
      for (int e = 0; e < 2 * m * d; ++e) a(row++, base + e) = 1.0;
    }
    prog.constraints.push_back(
        {std::move(a), RVec::Zero(rows), RVec::Zero(n), std::sqrt(inst.power.p_max)});
  }

  // epigraph of sum (alpha_k - 1)^2 over the non-clamped users
  RVec quad = RVec::Zero(n);
  RVec lin = RVec::Zero(n);
  int active_alphas = 0;
  for (int u = 0; u < n_users; ++u) {
    const int idx = vars.alpha_idx[static_cast<std::size_t>(u)];
    if (idx < 0) continue;
    quad(idx) = 1.0;
    lin(idx) = -2.0;
    ++active_alphas;
  }
  vars.epigraph_idx =
      quadratic_epigraph(prog, quad, lin, static_cast<double>(active_alphas));
  vars.num_vars = prog.num_vars();
  prog.objective(vars.epigraph_idx) = 1.0;
  return out;
}

namespace detail {

inline void unpack_stage1(const Stage1Program& sp, const RVec& z, const Cluster& cl,
                          int m, int d, PrecoderSet& p, std::vector<double>& alphas) {
  for (std::size_t u = 0; u < cl.users.size(); ++u) {
    const int k = cl.users[u];
    const int idx = sp.vars.alpha_idx[u];
    alphas[static_cast<std::size_t>(k)] = idx >= 0 ? z(idx) : 0.0;
    for (std::size_t j = 0; j < sp.vars.block_base[u].size(); ++j) {
      const int base = sp.vars.block_base[u][j];
      CMat& blk = p.blocks[u][j];
      for (int c = 0; c < d; ++c)
        for (int r = 0; r < m; ++r)
          blk(r, c) = Cplx(z(base + 2 * (c * m + r)), z(base + 2 * (c * m + r) + 1));
    }
  }
}

inline double alpha_objective(const Cluster& cl, const std::vector<double>& alphas) {
  double s = 0.0;
  for (int k : cl.users) {
    const double a = alphas[static_cast<std::size_t>(k)];
    s += (a - 1.0) * (a - 1.0);
  }
  return s;
}

}  // namespace detail

/// Alternating SOCP / receiver-update solve of the always-feasible admission
/// problem. The objective trace is nonincreasing; a keep-previous safeguard
/// absorbs solver-tolerance blips.
inline AdmissionResult solve_alternative_problem(const NetworkInstance& inst,
                                                 const Cluster& cl,
                                                 const PrecoderSet& init,
                                                 const Stage1Options& opt = {}) {
  const int m = inst.config.tx_antennas;
  const int d = inst.config.streams;
  AdmissionResult res;
  res.alphas.assign(static_cast<std::size_t>(inst.config.num_users), 0.0);
  res.precoders = init;
  for (int i : cl.rrhs)
    detail::require(transmit_power(init, i) <= inst.power.p_max * (1.0 + 1e-9),
                    "solve_alternative_problem: init violates power cap");
  res.receivers = receiver_update(inst, res.precoders);

  double prev_obj = std::numeric_limits<double>::infinity();
  res.converged = false;
  for (int it = 0; it < opt.n_max; ++it) {
    const Stage1Program sp = build_stage1_program(inst, cl, res.receivers);
    const ConeSolution sol =
        solve_cone_program(sp.prog, opt.socp_tol, opt.socp_max_iter);
    if (sol.status != SolveStatus::Optimal) {
      res.converged = false;
      return res;
    }
    PrecoderSet cand = PrecoderSet::zeros(cl, m, d);
    std::vector<double> alphas(static_cast<std::size_t>(inst.config.num_users), 0.0);
    detail::unpack_stage1(sp, sol.z, cl, m, d, cand, alphas);
    const double obj = detail::alpha_objective(cl, alphas);
    if (obj > prev_obj) {  // solver blip; keep the previous iterate
      res.converged = true;
      break;
    }
    res.precoders = std::move(cand);
    res.alphas = std::move(alphas);
    res.objective_trace.push_back(obj);
    res.receivers = receiver_update(inst, res.precoders);
    bool all_admitted = true;
    for (int k : cl.users)
      if (res.alphas[static_cast<std::size_t>(k)] < 1.0 - opt.admit_tol)
        all_admitted = false;
    if (all_admitted && opt.stop_when_all_admitted) {
      res.converged = true;
      break;
    }
    if (prev_obj - obj < opt.obj_decrease_tol) {
      res.converged = true;
      break;
    }
    prev_obj = obj;
  }
  res.admitted_users.clear();
  for (int k : cl.users)
    if (res.alphas[static_cast<std::size_t>(k)] >= 1.0 - opt.admit_tol)
      res.admitted_users.push_back(k);
  return res;
}

/// User selection: solve the admission problem, drop the worst user while any
/// alpha falls short of one, repeat. At most K outer passes.
inline AdmissionResult usc_select_users(const NetworkInstance& inst,
                                        const Stage1Options& opt = {}) {
  std::vector<int> users(static_cast<std::size_t>(inst.config.num_users));
  std::iota(users.begin(), users.end(), 0);
  std::vector<int> all_rrhs(static_cast<std::size_t>(inst.config.num_rrhs));
  std::iota(all_rrhs.begin(), all_rrhs.end(), 0);

  std::vector<int> removal_order;
  while (!users.empty()) {
    const auto cl = *make_cluster(inst, users, all_rrhs);
    auto res = solve_alternative_problem(
        inst, cl, init_precoders(inst, cl, opt.init, opt.init_seed), opt);
    if (res.admitted_users.size() == users.size()) {
      res.removal_order = removal_order;
      return res;
    }
    int worst = users.front();
    double worst_alpha = std::numeric_limits<double>::infinity();
    for (int k : users) {
      const double a = res.alphas[static_cast<std::size_t>(k)];
      if (a < worst_alpha) {  // ties resolve to the lowest user index
        worst_alpha = a;
        worst = k;
      }
    }
    removal_order.push_back(worst);
    users.erase(std::find(users.begin(), users.end(), worst));
  }
  AdmissionResult empty;
  empty.alphas.assign(static_cast<std::size_t>(inst.config.num_users), 0.0);
  empty.removal_order = removal_order;
  return empty;
}

/// Greedy user selection: while some user falls short, try every single-user
/// exclusion, keep the one with the smallest admission objective.
inline AdmissionResult greedy_user_selection(const NetworkInstance& inst,
                                             const Stage1Options& opt = {}) {
  std::vector<int> users(static_cast<std::size_t>(inst.config.num_users));
  std::iota(users.begin(), users.end(), 0);
  std::vector<int> all_rrhs(static_cast<std::size_t>(inst.config.num_rrhs));
  std::iota(all_rrhs.begin(), all_rrhs.end(), 0);

  std::vector<int> removal_order;
  while (!users.empty()) {
    const auto cl = *make_cluster(inst, users, all_rrhs);
    auto res = solve_alternative_problem(
        inst, cl, init_precoders(inst, cl, opt.init, opt.init_seed), opt);
    if (res.admitted_users.size() == users.size()) {
      res.removal_order = removal_order;
      return res;
    }
    int best_excl = users.front();
    double best_obj = std::numeric_limits<double>::infinity();
    for (int k : users) {
      std::vector<int> trial = users;
      trial.erase(std::find(trial.begin(), trial.end(), k));
      if (trial.empty()) {
        best_excl = k;
        break;
      }
      const auto tcl = *make_cluster(inst, trial, all_rrhs);
      const auto tres = solve_alternative_problem(
          inst, tcl, init_precoders(inst, tcl, opt.init, opt.init_seed), opt);
      const double obj = detail::alpha_objective(tcl, tres.alphas);
      if (obj < best_obj) {
        best_obj = obj;
        best_excl = k;
      }
    }
    removal_order.push_back(best_excl);
    users.erase(std::find(users.begin(), users.end(), best_excl));
  }
  AdmissionResult empty;
  empty.alphas.assign(static_cast<std::size_t>(inst.config.num_users), 0.0);
  empty.removal_order = removal_order;
  return empty;
}

/// Feasibility of serving `users` with only `active_rrhs` switched on.
inline std::pair<bool, PrecoderSet> check_feasibility(
    const NetworkInstance& inst, const std::vector<int>& users,
    const std::vector<int>& active_rrhs, Stage1Options opt = {}) {
  opt.stop_when_all_admitted = true;
  const auto cl = make_cluster(inst, users, active_rrhs);
  if (!cl.has_value()) return {false, PrecoderSet{}};
  if (users.empty()) return {true, PrecoderSet{}};
  const auto res = solve_alternative_problem(
      inst, *cl, init_precoders(inst, *cl, opt.init, opt.init_seed), opt);
  return {res.admitted_users.size() == users.size(), res.precoders};
}

/// Largest-cardinality admissible user subset by explicit enumeration; ties
/// break toward the smallest total transmit power. Guarded to K <= 10.
inline AdmissionResult exhaustive_user_selection(const NetworkInstance& inst,
                                                 Stage1Options opt = {}) {
  const int k_total = inst.config.num_users;
  detail::require(k_total <= 10, "exhaustive_user_selection: K <= 10");
  opt.stop_when_all_admitted = true;  // feasibility probes only
  std::vector<int> all_rrhs(static_cast<std::size_t>(inst.config.num_rrhs));
  std::iota(all_rrhs.begin(), all_rrhs.end(), 0);

  for (int card = k_total; card >= 1; --card) {
    std::optional<AdmissionResult> best;
    double best_power = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << k_total); ++mask) {
      if (__builtin_popcount(mask) != card) continue;
      std::vector<int> users;
      for (int k = 0; k < k_total; ++k)
        if (mask & (1u << k)) users.push_back(k);
      const auto cl = *make_cluster(inst, users, all_rrhs);
      auto res = solve_alternative_problem(
          inst, cl, init_precoders(inst, cl, opt.init, opt.init_seed), opt);
      if (res.admitted_users.size() != users.size()) continue;
      double power = 0.0;
      for (int i : cl.rrhs) power += transmit_power(res.precoders, i);
      if (power < best_power) {
        best_power = power;
        best = std::move(res);
      }
    }
    if (best.has_value()) return *std::move(best);
  }
  AdmissionResult empty;
  empty.alphas.assign(static_cast<std::size_t>(k_total), 0.0);
  return empty;
}

}  // namespace ucran
