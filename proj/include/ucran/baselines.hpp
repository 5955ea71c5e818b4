// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ucran/stage1.hpp"
#include "ucran/stage2.hpp"

namespace ucran {

enum class BaselineMethod {
  FullCooperation,
  SuccessiveSelection,
  GreedySearch,
  ExhaustiveSearch,
};

inline const char* baseline_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::FullCooperation: return "full_coop";
    case BaselineMethod::SuccessiveSelection: return "successive";
    case BaselineMethod::GreedySearch: return "rrh_greedy";
    case BaselineMethod::ExhaustiveSearch: return "rrh_exhaustive";
  }
  return "unknown";
}

struct BaselineReport {
  BaselineMethod method = BaselineMethod::FullCooperation;
  std::vector<int> active_set;
  PrecoderSet precoders;
  NpcBreakdown npc;
  int feasibility_checks = 0;
  double wall_clock_s = 0.0;
  bool feasible = true;
};

namespace detail {

// Power minimization (omega = eta) restricted to `active`, from a fresh
// feasibility witness; nullopt when the restriction is infeasible.
inline std::optional<std::pair<PrecoderSet, NpcBreakdown>> solve_restricted(
    const NetworkInstance& inst, const std::vector<int>& users,
    const std::vector<int>& active, const Stage2Options& opt) {
  auto [ok, witness] = check_feasibility(inst, users, active, opt.feasibility);
  if (!ok) return std::nullopt;
  const auto cl = make_cluster(inst, users, active);
  const std::vector<double> eta(static_cast<std::size_t>(inst.config.num_rrhs),
                                inst.power.eta);
  const auto wm = wmmse_solve_wpm(inst, *cl, eta, witness, opt);
  auto breakdown = npc(inst, wm.precoders, all_rates(inst, wm.precoders), active);
  return std::make_pair(wm.precoders, breakdown);
}

inline std::vector<int> serving_rrhs(const NetworkInstance& inst,
                                     const std::vector<int>& users) {
  std::vector<int> all(static_cast<std::size_t>(inst.config.num_rrhs));
  std::iota(all.begin(), all.end(), 0);
  const auto cl = make_cluster(inst, users, all);
  return cl ? cl->rrhs : std::vector<int>{};
}

}  // namespace detail

/// All cluster RRHs on, transmit power minimized by the WMMSE machinery.
inline BaselineReport full_cooperation(const NetworkInstance& inst,
                                       const std::vector<int>& users,
                                       const Stage2Options& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  BaselineReport rep;
  rep.method = BaselineMethod::FullCooperation;
  rep.active_set = detail::serving_rrhs(inst, users);
  rep.feasibility_checks = 1;
  auto solved = detail::solve_restricted(inst, users, rep.active_set, opt);
  if (!solved.has_value()) {
    rep.feasible = false;
  } else {
    rep.precoders = std::move(solved->first);
    rep.npc = std::move(solved->second);
  }
  rep.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Removes RRHs from the lowest transmit power upward until the remaining
/// set stops being feasible; reports the last feasible configuration.
inline BaselineReport successive_selection(const NetworkInstance& inst,
                                           const std::vector<int>& users,
                                           const Stage2Options& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  BaselineReport rep;
  rep.method = BaselineMethod::SuccessiveSelection;
  rep.active_set = detail::serving_rrhs(inst, users);
  rep.feasibility_checks = 1;
  auto current = detail::solve_restricted(inst, users, rep.active_set, opt);
  if (!current.has_value()) {
    rep.feasible = false;
    rep.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  }
  while (rep.active_set.size() > 1) {
    int weakest = rep.active_set.front();
    double weakest_power = std::numeric_limits<double>::infinity();
    for (int i : rep.active_set) {
      const double p = transmit_power(current->first, i);
      if (p < weakest_power) {
        weakest_power = p;
        weakest = i;
      }
    }
    std::vector<int> trial = rep.active_set;
    trial.erase(std::find(trial.begin(), trial.end(), weakest));
    ++rep.feasibility_checks;
    auto solved = detail::solve_restricted(inst, users, trial, opt);
    if (!solved.has_value()) break;
    rep.active_set = std::move(trial);
    current = std::move(solved);
  }
  rep.precoders = std::move(current->first);
  rep.npc = std::move(current->second);
  rep.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Each round removes the RRH whose exclusion leaves the least network power;
/// reports the best configuration seen along the trajectory.
inline BaselineReport greedy_rrh_selection(const NetworkInstance& inst,
                                           const std::vector<int>& users,
                                           const Stage2Options& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  BaselineReport rep;
  rep.method = BaselineMethod::GreedySearch;
  std::vector<int> active = detail::serving_rrhs(inst, users);
  rep.feasibility_checks = 1;
  auto current = detail::solve_restricted(inst, users, active, opt);
  if (!current.has_value()) {
    rep.feasible = false;
    rep.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  }
  rep.active_set = active;
  rep.precoders = current->first;
  rep.npc = current->second;
  while (active.size() > 1) {
    std::optional<std::pair<PrecoderSet, NpcBreakdown>> best;
    std::vector<int> best_set;
    for (int cand : active) {
      std::vector<int> trial = active;
      trial.erase(std::find(trial.begin(), trial.end(), cand));
      ++rep.feasibility_checks;
      auto solved = detail::solve_restricted(inst, users, trial, opt);
      if (!solved.has_value()) continue;
      if (!best.has_value() ||
          solved->second.full_npc < best->second.full_npc) {
        best = std::move(solved);
        best_set = std::move(trial);
      }
    }
    if (!best.has_value()) break;  // no feasible removal remains
    active = best_set;
    if (best->second.full_npc < rep.npc.full_npc) {
      rep.active_set = active;
      rep.precoders = best->first;
      rep.npc = best->second;
    }
    ++rep.feasibility_checks;  // accounting parity with the commit re-solve
    current = std::move(best);
  }
  rep.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Minimum-NPC feasible active set by subset enumeration (every user must
/// keep at least one candidate). Guarded to I <= 10.
inline BaselineReport exhaustive_rrh_search(const NetworkInstance& inst,
                                            const std::vector<int>& users,
                                            const Stage2Options& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  BaselineReport rep;
  rep.method = BaselineMethod::ExhaustiveSearch;
  const std::vector<int> cluster = detail::serving_rrhs(inst, users);
  const int n = static_cast<int>(cluster.size());
  detail::require(n <= 10, "exhaustive_rrh_search: I <= 10");
  rep.feasible = false;
  double best_npc = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> active;
    for (int b = 0; b < n; ++b)
      if (mask & (1u << b)) active.push_back(cluster[static_cast<std::size_t>(b)]);
    // prune: every user keeps a candidate
    if (!make_cluster(inst, users, active).has_value()) continue;
    ++rep.feasibility_checks;
    auto solved = detail::solve_restricted(inst, users, active, opt);
    if (!solved.has_value()) continue;
    if (solved->second.full_npc < best_npc) {
      best_npc = solved->second.full_npc;
      rep.active_set = active;
      rep.precoders = std::move(solved->first);
      rep.npc = std::move(solved->second);
      rep.feasible = true;
    }
  }
  rep.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline BaselineReport run_baseline(BaselineMethod method,
                                   const NetworkInstance& inst,
                                   const std::vector<int>& users,
                                   const Stage2Options& opt = {}) {
  switch (method) {
    case BaselineMethod::FullCooperation: return full_cooperation(inst, users, opt);
    case BaselineMethod::SuccessiveSelection:
      return successive_selection(inst, users, opt);
    case BaselineMethod::GreedySearch: return greedy_rrh_selection(inst, users, opt);
    case BaselineMethod::ExhaustiveSearch:
      return exhaustive_rrh_search(inst, users, opt);
  }
  throw std::invalid_argument("run_baseline: unknown method");
}

}  // namespace ucran
