// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ucran/dual_bcd.hpp"
#include "ucran/mmse.hpp"
#include "ucran/network.hpp"
#include "ucran/stage1.hpp"

namespace ucran {

/// Reweighting state of the sparsity loop.
struct RlnState {
  std::vector<double> weights;      // omega_i, indexed by global RRH id
  std::vector<double> raw_weights;  // a_i = 1 / (P_i + delta)
  std::vector<double> p_tilde_c;    // effective circuit constants, W
  double delta = 1e-5;
  int iteration = 0;
  std::vector<double> npc_trace;
  std::vector<int> active_count_trace;
};

struct Stage2Options {
  double delta = 1e-5;     // reweighting regularizer
  double theta_off = 1e-4; // W; transmit power below this counts as off
  int rln_max = 10;
  int wmmse_max = 50;
  double wmmse_tol = 1e-3;
  // initial points come from admission at alpha-tolerance 1e-4, so their
  // rates can sit ~2e-4 * rate_min short of target; the first dual update
  // restores exact feasibility
  double init_rate_slack = 1e-3;
  BcdOptions bcd;
  bool warm_start_duals = true;
  Stage1Options feasibility;  // used by the restricted re-solve
};

/// Effective circuit constant of RRH i: fronthaul at the rate floor plus the
/// active-sleep circuit delta.
inline double p_tilde_c(const NetworkInstance& inst, const Cluster& cl, int i) {
  const double n_served =
      static_cast<double>(cl.users_of[static_cast<std::size_t>(i)].size());
  return inst.power.rho * n_served * inst.config.rate_min +
         inst.power.circuit_active(inst.config.tx_antennas);
}

/// Reweighted-l1 weights at the current precoders: RRHs transmitting little
/// get large weights and are pushed toward zero.
inline RlnState rln_weights(const NetworkInstance& inst, const PrecoderSet& p,
                            double delta) {
  RlnState st;
  st.delta = delta;
  st.weights.assign(static_cast<std::size_t>(inst.config.num_rrhs), inst.power.eta);
  st.raw_weights.assign(static_cast<std::size_t>(inst.config.num_rrhs), 0.0);
  st.p_tilde_c.assign(static_cast<std::size_t>(inst.config.num_rrhs), 0.0);
  for (int i : p.cluster.rrhs) {
    const double a = 1.0 / (transmit_power(p, i) + delta);
    const double ptc = p_tilde_c(inst, p.cluster, i);
    st.raw_weights[static_cast<std::size_t>(i)] = a;
    st.p_tilde_c[static_cast<std::size_t>(i)] = ptc;
    st.weights[static_cast<std::size_t>(i)] = inst.power.eta + a * ptc;
  }
  return st;
}

/// RRHs whose transmit power strictly exceeds the off threshold.
inline std::vector<int> extract_active_set(const PrecoderSet& p, double theta_off) {
  detail::require(theta_off > 0.0, "extract_active_set: theta_off > 0");
  std::vector<int> active;
  for (int i : p.cluster.rrhs)
    if (transmit_power(p, i) > theta_off) active.push_back(i);
  return active;
}

inline double weighted_transmit_power(const PrecoderSet& p,
                                      const std::vector<double>& omega) {
  double total = 0.0;
  for (int i : p.cluster.rrhs)
    total += omega[static_cast<std::size_t>(i)] * transmit_power(p, i);
  return total;
}

struct WmmseResult {
  PrecoderSet precoders;
  std::vector<double> objective_trace;  // starts at the initial point
  double min_rate_margin = 0.0;         // min over iterates of R_k - R_min
  KktReport final_kkt;
  int iterations = 0;
  int bcd_iterations_total = 0;
  bool converged = false;
};

/// Weighted power minimization by alternating receiver updates and dual-BCD
/// precoder updates. The initial point must satisfy the rate and power
/// constraints; every iterate keeps them, and the objective never increases.
inline WmmseResult wmmse_solve_wpm(const NetworkInstance& inst, const Cluster& cl,
                                   const std::vector<double>& omega,
                                   const PrecoderSet& v_init,
                                   const Stage2Options& opt = {}) {
  for (int k : cl.users)
    detail::require(user_rate(inst, v_init, k) >=
                        inst.config.rate_min - opt.init_rate_slack,
                    "wmmse_solve_wpm: initial point violates a rate target");
  for (int i : cl.rrhs)
    detail::require(transmit_power(v_init, i) <= inst.power.p_max * (1.0 + 1e-6),
                    "wmmse_solve_wpm: initial point violates a power cap");

  WmmseResult res;
  res.precoders = v_init;
  double obj_prev = weighted_transmit_power(v_init, omega);
  res.objective_trace.push_back(obj_prev);
  // margin tracked over the algorithm's own iterates, not the initial point
  res.min_rate_margin = std::numeric_limits<double>::infinity();

  std::optional<RVec> lambda_warm;
  std::optional<RVec> mu_warm;
  for (int l = 0; l < opt.wmmse_max; ++l) {
    res.iterations = l + 1;
    const auto rs = receiver_update(inst, res.precoders);
    const auto sub = build_wpm_subproblem(inst, cl, rs, omega);
    const auto bcd = bcd_solve(sub, opt.bcd, lambda_warm, mu_warm);
    res.bcd_iterations_total += bcd.iterations;
    const double obj_new = weighted_transmit_power(bcd.primal, omega);
    if (!std::isfinite(obj_new)) break;
    if (obj_new > obj_prev) {  // solver noise; the previous iterate stands
      res.converged = true;
      break;
    }
    res.precoders = bcd.primal;
    res.final_kkt = bcd.kkt;
    res.objective_trace.push_back(obj_new);
    if (opt.warm_start_duals) {
      lambda_warm = bcd.duals.lambda;
      mu_warm = bcd.duals.mu;
    }
    for (int k : cl.users)
      res.min_rate_margin =
          std::min(res.min_rate_margin,
                   user_rate(inst, res.precoders, k) - inst.config.rate_min);
    if (std::abs(obj_prev - obj_new) <
        opt.wmmse_tol * std::max(obj_new, 1e-30)) {
      res.converged = true;
      break;
    }
    obj_prev = obj_new;
  }
  return res;
}

struct RlnResult {
  PrecoderSet precoders;   // restricted to the final active set
  NpcBreakdown npc;
  RlnState state;
  std::vector<int> active_set;
  int wmmse_iterations_total = 0;
  bool converged = true;
};

/// Sparsity pipeline: iterate reweighting and weighted power minimization,
/// extract the surviving RRHs, then re-solve the restricted problem with pure
/// transmit-power weights so the reported powers are optimal for that set.
inline RlnResult rln_solve(const NetworkInstance& inst, const Cluster& cl,
                           const PrecoderSet& v0, const Stage2Options& opt = {}) {
  RlnResult out;
  PrecoderSet v = v0;
  RlnState st = rln_weights(inst, v, opt.delta);
  double npc_prev = std::numeric_limits<double>::infinity();
  for (int n = 0; n < opt.rln_max; ++n) {
    st.iteration = n + 1;
    const auto wm = wmmse_solve_wpm(inst, cl, st.weights, v, opt);
    out.wmmse_iterations_total += wm.iterations;
    v = wm.precoders;
    const auto active = extract_active_set(v, opt.theta_off);
    // trace prices the network as if sub-threshold RRHs were shut now
    PrecoderSet pruned = v;
    for (int i : v.cluster.rrhs) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      for (int k : v.cluster.users_of[static_cast<std::size_t>(i)])
        pruned.block(i, k).setZero();
    }
    const auto breakdown = npc(inst, pruned, all_rates(inst, pruned), active);
    st.npc_trace.push_back(breakdown.full_npc);
    st.active_count_trace.push_back(static_cast<int>(active.size()));
    const RlnState next = rln_weights(inst, v, opt.delta);
    const bool flat = std::abs(breakdown.full_npc - npc_prev) <
                      2e-5 * std::max(1.0, breakdown.full_npc);
    const auto& counts = st.active_count_trace;
    const bool stable =
        counts.size() >= 2 && counts.back() == counts[counts.size() - 2];
    st.weights = next.weights;
    st.raw_weights = next.raw_weights;
    st.p_tilde_c = next.p_tilde_c;
    npc_prev = breakdown.full_npc;
    if (flat && stable) break;
  }

  // final active set, then the smallest feasible superset by power order
  std::vector<int> active = extract_active_set(v, opt.theta_off);
  std::vector<int> order = v.cluster.rrhs;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double pa = transmit_power(v, a);
    const double pb = transmit_power(v, b);
    if (pa != pb) return pa > pb;
    return a < b;
  });
  std::vector<int> users = cl.users;
  PrecoderSet witness;
  std::size_t count = active.size();
  for (;; ++count) {
    std::vector<int> trial(order.begin(),
                           order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(trial.begin(), trial.end());
    auto [ok, w] = check_feasibility(inst, users, trial, opt.feasibility);
    if (ok) {
      active = trial;
      witness = w;
      break;
    }
    detail::require(count < order.size(), "rln_solve: no feasible active set");
  }

  const auto restricted = make_cluster(inst, users, active);
  std::vector<double> eta_only(static_cast<std::size_t>(inst.config.num_rrhs),
                               inst.power.eta);
  const auto final_wm = wmmse_solve_wpm(inst, *restricted, eta_only, witness, opt);
  out.precoders = final_wm.precoders;
  out.active_set = active;
  out.npc = npc(inst, out.precoders, all_rates(inst, out.precoders), active);
  out.state = st;
  out.converged = final_wm.converged;
  return out;
}

}  // namespace ucran
