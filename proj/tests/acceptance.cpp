// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one pass/fail line per criterion, exit code = #failures.
#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>
#include <vector>

#include "test_util.hpp"
#include "ucran/ucran.hpp"
#include "wpm_socp_oracle.hpp"

namespace {

using namespace ucran;
namespace tu = ucran::testing;

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("[%s] %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::optional<std::pair<NetworkInstance, PrecoderSet>> feasible_witness(
    NetworkConfig cfg, std::uint64_t seed) {
  cfg.rng_seed = seed;
  auto inst = generate_instance(cfg, {});
  std::vector<int> users(static_cast<std::size_t>(cfg.num_users));
  std::iota(users.begin(), users.end(), 0);
  std::vector<int> rrhs(static_cast<std::size_t>(cfg.num_rrhs));
  std::iota(rrhs.begin(), rrhs.end(), 0);
  auto [ok, witness] = check_feasibility(inst, users, rrhs);
  if (!ok) return std::nullopt;
  return std::make_pair(std::move(inst), std::move(witness));
}

// C1: rate lower bound on random draws; tightness after the optimal update.
void criterion1() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 4;
  cfg.num_users = 3;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 2;
  cfg.candidate_size = 2;
  Philox rng(0xC1);
  std::uint64_t ctr = 0;
  int draws = 0, bound_ok = 0, tight_ok = 0, tight_total = 0;
  for (std::uint64_t seed = 1; draws < 1000; ++seed) {
    cfg.rng_seed = seed;
    const auto inst = generate_instance(cfg, {});
    const auto cl = full_cluster(inst);
    for (int rep = 0; rep < 12 && draws < 1000; ++rep) {
      const auto p = tu::random_precoders(inst, cl, seed * 64 + rep);
      for (int k : cl.users) {
        if (draws >= 1000) break;
        const CMat u = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
        const CMat w = tu::random_hpd(cfg.streams, rng, ctr);
        const double h = h_lower_bound(inst, p, u, w, k);
        const double r = user_rate(inst, p, k);
        ++draws;
        if (h <= r + 1e-8) ++bound_ok;
        const auto [us, ws] = optimal_receiver_and_weight(inst, p, k);
        const double hs = h_lower_bound(inst, p, us, ws, k);
        ++tight_total;
        if (std::abs(hs - r) <= 1e-8 * (1.0 + std::abs(r))) ++tight_ok;
      }
    }
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Lemma-1 suite: bound " << bound_ok << "/" << draws << ", tightness "
     << tight_ok << "/" << tight_total << ", " << dt << " s (< 10 s)";
  report("C1", bound_ok == draws && tight_ok == tight_total && dt < 10.0, os.str());
}

// C2: admission-objective monotonicity and convergence speed at paper size.
void criterion2() {
  Timer timer;
  NetworkConfig cfg;  // defaults are the paper size: I=12 K=8 X=3 M=N=d=2
  cfg.rate_min = 2.0;
  int mono_ok = 0, conv10 = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    cfg.rng_seed = seed;
    const auto inst = generate_instance(cfg, {});
    const auto cl = full_cluster(inst);
    const auto res = solve_alternative_problem(
        inst, cl, init_precoders(inst, cl, InitScheme::SvdInitial));
    const auto& t = res.objective_trace;
    bool mono = !t.empty();
    for (std::size_t n = 1; n < t.size(); ++n)
      mono = mono && t[n] <= t[n - 1] + 1e-9;
    mono_ok += mono;
    // convergence: objective decrease below 1e-3 of the trace scale; a run
    // stalled at the solver floor counts at its terminating iteration
    int conv_at = t.size() < 10 ? static_cast<int>(t.size()) : 999;
    const double scale = t.empty() ? 1.0 : std::max(1.0, t.front());
    for (std::size_t n = 1; n < t.size(); ++n)
      if (std::abs(t[n] - t[n - 1]) < 1e-3 * scale) {
        conv_at = static_cast<int>(n) + 1;
        break;
      }
    if (conv_at <= 10) ++conv10;
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Theorem-1 monotonicity: monotone " << mono_ok << "/50, converged<=10 "
     << conv10 << "/50 (need >= 45), " << dt << " s (< 300 s)";
  report("C2", mono_ok == 50 && conv10 >= 45 && dt < 300.0, os.str());
}

// C3: WMMSE iterates stay rate-feasible and the objective never increases.
void criterion3() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 6;
  cfg.num_users = 4;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 2;
  cfg.candidate_size = 2;
  cfg.rate_min = 1.5;
  int runs = 0, feas_ok = 0, mono_ok = 0;
  for (std::uint64_t seed = 1; runs < 50 && seed < 500; ++seed) {
    auto fx = feasible_witness(cfg, seed);
    if (!fx.has_value()) continue;
    ++runs;
    const std::vector<double> omega(6, fx->first.power.eta);
    const auto res =
        wmmse_solve_wpm(fx->first, fx->second.cluster, omega, fx->second);
    if (res.min_rate_margin >= -1e-6) ++feas_ok;
    bool mono = true;
    for (std::size_t l = 1; l < res.objective_trace.size(); ++l)
      mono = mono && res.objective_trace[l] <= res.objective_trace[l - 1] + 1e-9;
    mono_ok += mono;
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Theorem-2 feasibility+monotonicity: feasible-iterates " << feas_ok << "/"
     << runs << ", monotone " << mono_ok << "/" << runs << ", " << dt << " s";
  report("C3", runs == 50 && feas_ok == 50 && mono_ok == 50, os.str());
}

// C4: analytic gradients and Hessian against finite differences.
void criterion4() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 4;
  cfg.num_users = 3;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 2;
  cfg.candidate_size = 2;
  cfg.rate_min = 1.0;
  Philox rng(0xC4);
  std::uint64_t ctr = 0;
  int states = 0, grad_ok = 0, gradmu_ok = 0, hess_ok = 0, sym_ok = 0, psd_ok = 0;
  for (std::uint64_t seed = 1; states < 100 && seed < 400; ++seed) {
    auto fx = feasible_witness(cfg, seed);
    if (!fx.has_value()) continue;
    const auto rs = receiver_update(fx->first, fx->second);
    const std::vector<double> omega(4, fx->first.power.eta);
    const auto sub = build_wpm_subproblem(fx->first, fx->second.cluster, rs, omega);
    for (int rep = 0; rep < 10 && states < 100; ++rep) {
      ++states;
      DualState st;
      st.lambda.resize(sub.users());
      st.mu.resize(sub.rrhs());
      for (int i = 0; i < st.lambda.size(); ++i)
        st.lambda(i) = 2.0 * rng.uniform(0, ctr++);
      for (int i = 0; i < st.mu.size(); ++i) st.mu(i) = 2.0 * rng.uniform(0, ctr++);
      refresh_dual_cache(sub, st);

      const RVec g = grad_lambda(sub, st);
      const double gscale = 1.0 + g.cwiseAbs().maxCoeff();
      bool ok = true;
      for (int k = 0; k < g.size(); ++k) {
        const double h = 1e-5 * (1.0 + std::abs(st.lambda(k)));
        RVec lp = st.lambda, lm = st.lambda;
        lp(k) += h;
        lm(k) -= h;
        const double fd =
            (dual_value(sub, lp, st.mu) - dual_value(sub, lm, st.mu)) / (2.0 * h);
        ok = ok && std::abs(g(k) - fd) <= 1e-5 * gscale;
      }
      grad_ok += ok;

      const RVec gm = grad_mu(sub, st);
      const double mscale = 1.0 + gm.cwiseAbs().maxCoeff();
      ok = true;
      for (int i = 0; i < gm.size(); ++i) {
        const double h = 1e-5 * (1.0 + std::abs(st.mu(i)));
        RVec mp = st.mu, mm = st.mu;
        mp(i) += h;
        mm(i) -= h;
        const double fd =
            (dual_value(sub, st.lambda, mp) - dual_value(sub, st.lambda, mm)) /
            (2.0 * h);
        ok = ok && std::abs(gm(i) - fd) <= 1e-5 * mscale;
      }
      gradmu_ok += ok;

      const RMat hess = hessian_lambda(sub, st);
      sym_ok += (hess - hess.transpose()).norm() <= 1e-12 * (1.0 + hess.norm());
      Eigen::SelfAdjointEigenSolver<RMat> eig(hess);
      psd_ok += eig.eigenvalues().minCoeff() >= -1e-8;
      const double hscale = 1.0 + hess.cwiseAbs().maxCoeff();
      ok = true;
      for (int j = 0; j < hess.cols(); ++j) {
        const double step = 1e-5 * (1.0 + std::abs(st.lambda(j)));
        DualState sp = st, sm = st;
        sp.lambda(j) += step;
        sm.lambda(j) -= step;
        refresh_dual_cache(sub, sp);
        refresh_dual_cache(sub, sm);
        const RVec fd = (grad_lambda(sub, sp) - grad_lambda(sub, sm)) / (2.0 * step);
        for (int i = 0; i < hess.rows(); ++i)
          ok = ok && std::abs(hess(i, j) - fd(i)) <= 1e-4 * hscale;
      }
      hess_ok += ok;
    }
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Derivative oracles: grad-l " << grad_ok << "/100, grad-mu " << gradmu_ok
     << "/100, hessian " << hess_ok << "/100, symmetric " << sym_ok
     << "/100, psd " << psd_ok << "/100, " << dt << " s (< 30 s)";
  report("C4",
         states == 100 && grad_ok == 100 && gradmu_ok == 100 && hess_ok == 100 &&
             sym_ok == 100 && psd_ok == 100 && dt < 30.0,
         os.str());
}

// C5: dual-BCD primal matches the SOCP oracle; KKT residuals small.
void criterion5() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 4;
  cfg.num_users = 3;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 2;
  cfg.candidate_size = 2;
  cfg.rate_min = 1.0;
  int toys = 0, gap_ok = 0, kkt_ok = 0;
  double worst_gap = 0.0, worst_kkt = 0.0;
  for (std::uint64_t seed = 1; toys < 30 && seed < 400; ++seed) {
    auto fx = feasible_witness(cfg, seed);
    if (!fx.has_value()) continue;
    ++toys;
    const auto rs = receiver_update(fx->first, fx->second);
    const std::vector<double> omega(4, fx->first.power.eta);
    const auto sub = build_wpm_subproblem(fx->first, fx->second.cluster, rs, omega);
    const auto bcd = bcd_solve(sub);
    const double primal = tu::weighted_power_objective(sub, bcd.primal);
    const auto oracle = tu::build_wpm_socp(fx->first, sub);
    const auto sol = solve_cone_program(oracle.prog, 1e-8, 200);
    const double gap = sol.status == SolveStatus::Optimal
                           ? std::abs(primal - sol.objective) / (1.0 + std::abs(primal))
                           : 1.0;
    worst_gap = std::max(worst_gap, gap);
    if (gap <= 1e-4) ++gap_ok;
    const double kkt = std::max({bcd.kkt.rate_violation, bcd.kkt.power_violation,
                                 bcd.kkt.comp_rate, bcd.kkt.comp_power,
                                 bcd.kkt.stationarity});
    worst_kkt = std::max(worst_kkt, kkt);
    if (kkt <= 1e-5) ++kkt_ok;
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Zero-duality-gap oracle: gap " << gap_ok << "/" << toys << " (worst "
     << worst_gap << "), kkt " << kkt_ok << "/" << toys << " (worst " << worst_kkt
     << "), " << dt << " s (< 120 s)";
  report("C5", toys == 30 && gap_ok == 30 && kkt_ok == 30 && dt < 120.0, os.str());
}

// C6: user-selection quality replica across rate requirements.
void criterion6() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 6;
  cfg.num_users = 5;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 1;
  cfg.candidate_size = 2;
  const std::vector<double> rate_mins = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> mean_usc, mean_greedy, mean_exh;
  double gap_sum = 0.0;
  int gap_n = 0;
  bool per_trial_ok = true;
  for (double rmin : rate_mins) {
    cfg.rate_min = rmin;
    double s_usc = 0.0, s_greedy = 0.0, s_exh = 0.0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
      cfg.rng_seed = 9000 + trial;
      const auto inst = generate_instance(cfg, {});
      const auto usc = usc_select_users(inst);
      const auto greedy = greedy_user_selection(inst);
      const auto exh = exhaustive_user_selection(inst);
      per_trial_ok = per_trial_ok &&
                     exh.admitted_users.size() >= usc.admitted_users.size() &&
                     exh.admitted_users.size() >= greedy.admitted_users.size();
      s_usc += static_cast<double>(usc.admitted_users.size());
      s_greedy += static_cast<double>(greedy.admitted_users.size());
      s_exh += static_cast<double>(exh.admitted_users.size());
      gap_sum += static_cast<double>(exh.admitted_users.size()) -
                 static_cast<double>(usc.admitted_users.size());
      ++gap_n;
    }
    mean_usc.push_back(s_usc / 50.0);
    mean_greedy.push_back(s_greedy / 50.0);
    mean_exh.push_back(s_exh / 50.0);
  }
  bool mean_order = true, nonincreasing = true;
  for (std::size_t v = 0; v < rate_mins.size(); ++v) {
    mean_order = mean_order && mean_exh[v] >= mean_greedy[v] - 1e-12 &&
                 mean_greedy[v] >= mean_usc[v] - 1e-12;
    if (v > 0)
      nonincreasing = nonincreasing && mean_usc[v] <= mean_usc[v - 1] + 1e-12 &&
                      mean_greedy[v] <= mean_greedy[v - 1] + 1e-12 &&
                      mean_exh[v] <= mean_exh[v - 1] + 1e-12;
  }
  const double mean_gap = gap_sum / gap_n;
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Selection-quality replica: mean admitted usc/greedy/exh @R=1..4 = ";
  for (std::size_t v = 0; v < rate_mins.size(); ++v)
    os << "(" << mean_usc[v] << "," << mean_greedy[v] << "," << mean_exh[v] << ") ";
  os << "gap " << mean_gap << " (<= 0.5), " << dt << " s";
  report("C6",
         per_trial_ok && mean_order && nonincreasing && mean_gap <= 0.5,
         os.str());
}

// C7: network-power ordering replica across methods.
void criterion7() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 6;
  cfg.num_users = 4;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 1;
  cfg.candidate_size = 3;
  cfg.rate_min = 1.0;
  int trials = 0;
  bool order_ok = true;
  double sum_rln = 0.0, sum_exh = 0.0, sum_active = 0.0;
  for (std::uint64_t seed = 1; trials < 30 && seed < 600; ++seed) {
    auto fx = feasible_witness(cfg, seed);
    if (!fx.has_value()) continue;
    ++trials;
    const auto& inst = fx->first;
    const auto users = fx->second.cluster.users;
    const auto rln = rln_solve(inst, fx->second.cluster, fx->second);
    const auto full = full_cooperation(inst, users);
    const auto exh = exhaustive_rrh_search(inst, users);
    order_ok = order_ok && exh.feasible && full.feasible &&
               exh.npc.full_npc <= rln.npc.full_npc + 1e-6 &&
               rln.npc.full_npc <= full.npc.full_npc + 1e-6;
    sum_rln += rln.npc.full_npc;
    sum_exh += exh.npc.full_npc;
    sum_active += static_cast<double>(rln.active_set.size());
  }
  const double mean_rln = sum_rln / trials;
  const double mean_exh = sum_exh / trials;
  const double mean_active = sum_active / trials;
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "NPC ordering replica: trials " << trials << ", per-trial order "
     << (order_ok ? "ok" : "VIOLATED") << ", mean rln/exh = " << mean_rln << "/"
     << mean_exh << " (ratio " << mean_rln / mean_exh << " <= 1.10), mean active "
     << mean_active << " (< 6), " << dt << " s";
  report("C7",
         trials == 30 && order_ok && mean_rln <= 1.10 * mean_exh && mean_active < 6.0,
         os.str());
}

// C8: convergence-speed properties of the stage-II solvers.
void criterion8() {
  Timer timer;
  NetworkConfig cfg;  // paper-default size
  cfg.rate_min = 2.0;
  int fixtures = 0;
  bool rln_flat_ok = true, newton_ok = true, mu_ok = true;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; fixtures < 3 && seed < 200; ++seed) {
    auto fx = feasible_witness(cfg, seed);
    if (!fx.has_value()) continue;
    ++fixtures;
    const auto& inst = fx->first;
    // RLN trace flat (relative change < 1e-3) after at most 8 iterations
    Stage2Options opt;
    opt.rln_max = 10;
    const auto rln = rln_solve(inst, fx->second.cluster, fx->second, opt);
    const auto& t = rln.state.npc_trace;
    int flat_at = static_cast<int>(t.size());
    for (std::size_t n = 1; n < t.size(); ++n)
      if (std::abs(t[n] - t[n - 1]) < 1e-3 * std::max(1.0, t[n])) {
        flat_at = static_cast<int>(n) + 1;
        break;
      }
    rln_flat_ok = rln_flat_ok && flat_at <= 8;

    // Newton decrement and projected-gradient iteration counts on the
    // first WMMSE subproblem
    const auto rs = receiver_update(inst, fx->second);
    const std::vector<double> omega(static_cast<std::size_t>(cfg.num_rrhs),
                                    inst.power.eta);
    const auto sub = build_wpm_subproblem(inst, fx->second.cluster, rs, omega);
    int newton_iters = -1, mu_iters = -1;
    const RVec lambda1 = newton_lambda(sub, RVec::Ones(sub.rrhs()),
                                       RVec::Ones(sub.users()), {}, &newton_iters);
    gradient_mu(sub, lambda1, RVec::Ones(sub.rrhs()), {}, &mu_iters);
    newton_ok = newton_ok && newton_iters <= 15;
    mu_ok = mu_ok && mu_iters <= 5;
    detail << "(flat@" << flat_at << ",newton " << newton_iters << ",mu " << mu_iters
           << ") ";
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Convergence-speed: " << detail.str() << dt << " s";
  report("C8", fixtures == 3 && rln_flat_ok && newton_ok && mu_ok, os.str());
}

// C9: byte-identical serialized outputs across reruns.
void criterion9() {
  Timer timer;
  NetworkConfig cfg;
  cfg.num_rrhs = 5;
  cfg.num_users = 3;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.streams = 1;
  cfg.candidate_size = 2;
  cfg.rate_min = 1.0;
  cfg.rng_seed = 12345;
  bool ok = true;
  {
    const auto a = instance_to_json(generate_instance(cfg, {})).dump();
    const auto b = instance_to_json(generate_instance(cfg, {})).dump();
    ok = ok && a == b;
  }
  {
    const auto a = to_json(usc_select_users(generate_instance(cfg, {}))).dump();
    const auto b = to_json(usc_select_users(generate_instance(cfg, {}))).dump();
    ok = ok && a == b;
  }
  {
    const auto run = [&]() {
      const auto inst = generate_instance(cfg, {});
      const auto s1 = usc_select_users(inst);
      const auto rln = rln_solve(inst, s1.precoders.cluster, s1.precoders);
      return to_json(rln).dump();
    };
    ok = ok && run() == run();
  }
  {
    ExperimentSpec spec;
    spec.config = cfg;
    spec.sweep_values = {1.0, 2.0};
    spec.trials = 2;
    spec.methods = {Method::Usc, Method::Rln, Method::Successive};
    spec.seed = 7;
    std::ostringstream a, b;
    write_jsonl(run_sweep(spec, 1), a);
    write_jsonl(run_sweep(spec, 2), b);
    ok = ok && a.str() == b.str() && !a.str().empty();
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "Determinism: instance/stage1/solve/sweep reruns byte-identical, " << dt
     << " s";
  report("C9", ok, os.str());
}

// C10: end-to-end desk-scale sweep within the wall-clock budget.
void criterion10() {
  Timer timer;
  ExperimentSpec spec;  // paper-default network
  spec.sweep_axis = "rate_min";
  spec.sweep_values = {1.0, 2.0, 3.0};
  spec.trials = 10;
  spec.methods = {Method::Rln, Method::FullCoop, Method::Successive};
  spec.seed = 2026;
  const auto records = run_sweep(spec, 1);
  int ok_rows = 0, skipped = 0;
  for (const auto& r : records) {
    if (r.status == "ok") ++ok_rows;
    if (r.status == "skipped_infeasible") ++skipped;
  }
  const double dt = timer.elapsed();
  std::ostringstream os;
  os << "End-to-end sweep: " << records.size() << " rows, " << ok_rows << " ok, "
     << skipped << " skipped, " << dt << " s (< 900 s)";
  report("C10", ok_rows > 0 && dt < 900.0, os.str());
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures;
}
