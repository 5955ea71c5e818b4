// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ucran/ucran.hpp"

namespace {

using namespace ucran;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitNonConverged = 3;

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

void write_output(const Json& j, const std::string& out) {
  if (out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << j.dump(2) << "\n";
}

struct InstanceSource {
  std::string instance_path;
  std::string config_path;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--instance", instance_path, "instance snapshot JSON");
    cmd->add_option("--config", config_path, "network/power config JSON");
    cmd->add_option("--seed", seed, "override the generator seed");
  }

  NetworkInstance load() const {
    if (!instance_path.empty()) return instance_from_json(load_json(instance_path));
    NetworkConfig cfg;
    PowerModel pm;
    if (!config_path.empty()) {
      const Json j = load_json(config_path);
      if (j.contains("network")) cfg = config_from_json(j.at("network"));
      if (j.contains("power")) pm = power_from_json(j.at("power"));
    }
    if (seed.has_value()) cfg.rng_seed = *seed;
    return generate_instance(cfg, pm);
  }
};

int cmd_generate(const InstanceSource& src, const std::string& out) {
  write_output(instance_to_json(src.load()), out);
  return kExitOk;
}

int cmd_stage1(const InstanceSource& src, const std::string& scheme,
               const std::string& out) {
  const auto inst = src.load();
  Stage1Options opt;
  opt.init = scheme == "rand" ? InitScheme::RandInitial : InitScheme::SvdInitial;
  const auto res = usc_select_users(inst, opt);
  Json j = to_json(res);
  j["schema"] = "ucran-stage1-v1";
  write_output(j, out);
  if (res.admitted_users.empty()) return kExitInfeasible;
  return res.converged ? kExitOk : kExitNonConverged;
}

int cmd_solve(const InstanceSource& src, const std::string& out, bool verbose) {
  const auto inst = src.load();
  const auto stage1 = usc_select_users(inst);
  if (stage1.admitted_users.empty()) {
    std::cerr << "solve: no admissible users\n";
    return kExitInfeasible;
  }
  Stage2Options opt;
  if (verbose) opt.bcd.trace = &std::cerr;
  const auto res = rln_solve(inst, stage1.precoders.cluster, stage1.precoders, opt);
  Json j = to_json(res);
  j["schema"] = "ucran-solve-v1";
  j["admitted_users"] = stage1.admitted_users;
  j["removal_order"] = stage1.removal_order;
  j["rates"] = all_rates(inst, res.precoders);
  write_output(j, out);
  return res.converged ? kExitOk : kExitNonConverged;
}

int cmd_baseline(const InstanceSource& src, const std::string& method,
                 const std::string& out) {
  const auto inst = src.load();
  const auto stage1 = usc_select_users(inst);
  if (stage1.admitted_users.empty()) {
    std::cerr << "baseline: no admissible users\n";
    return kExitInfeasible;
  }
  BaselineMethod bm;
  if (method == "full_coop") bm = BaselineMethod::FullCooperation;
  else if (method == "successive") bm = BaselineMethod::SuccessiveSelection;
  else if (method == "rrh_greedy") bm = BaselineMethod::GreedySearch;
  else if (method == "rrh_exhaustive") bm = BaselineMethod::ExhaustiveSearch;
  else throw CLI::ValidationError("--method", "unknown baseline: " + method);
  const auto rep = run_baseline(bm, inst, stage1.admitted_users);
  Json j = to_json(rep);
  j["schema"] = "ucran-baseline-v1";
  j["admitted_users"] = stage1.admitted_users;
  write_output(j, out);
  return rep.feasible ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const std::string& spec_path, const std::string& prefix, int jobs) {
  const auto spec = spec_from_json(load_json(spec_path));
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_sweep(spec, jobs);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream os(prefix + ".jsonl");
    if (!os) throw std::runtime_error("cannot write " + prefix + ".jsonl");
    write_jsonl(records, os);
  }
  {
    std::ofstream os(prefix + ".csv");
    if (!os) throw std::runtime_error("cannot write " + prefix + ".csv");
    write_csv(records, os);
  }
  int ok = 0, skipped = 0, failed = 0;
  for (const auto& r : records) {
    if (r.status == "ok") ++ok;
    else if (r.status == "skipped_infeasible") ++skipped;
    else ++failed;
  }
  std::cerr << "sweep: " << records.size() << " rows (" << ok << " ok, " << skipped
            << " skipped, " << failed << " failed) in " << elapsed << " s\n";
  if (ok == 0) return kExitInfeasible;
  return failed == 0 ? kExitOk : kExitNonConverged;
}

// Invariant suite on one seed; one PASS/FAIL line per check.
int cmd_verify(std::uint64_t seed, const std::string& config_path) {
  NetworkConfig cfg;
  PowerModel pm;
  if (!config_path.empty()) {
    const Json j = load_json(config_path);
    if (j.contains("network")) cfg = config_from_json(j.at("network"));
    if (j.contains("power")) pm = power_from_json(j.at("power"));
  } else {
    cfg.num_rrhs = 6;
    cfg.num_users = 4;
    cfg.candidate_size = 2;
    cfg.rate_min = 1.5;
  }
  cfg.rng_seed = seed;
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
  };

  const auto inst = generate_instance(cfg, pm);
  {
    const auto again = generate_instance(cfg, pm);
    bool same = inst.rrh_pos == again.rrh_pos && inst.user_pos == again.user_pos &&
                inst.noise_power == again.noise_power;
    for (std::size_t l = 0; same && l < inst.channels.size(); ++l)
      same = inst.channels[l] == again.channels[l];
    check("generator determinism", same);
  }
  {
    bool sym = true;
    for (int k = 0; k < cfg.num_users; ++k)
      for (int i : inst.cand_rrhs[static_cast<std::size_t>(k)]) {
        const auto& u = inst.cand_users[static_cast<std::size_t>(i)];
        sym = sym && std::find(u.begin(), u.end(), k) != u.end();
      }
    check("candidate-set symmetry", sym);
  }
  {
    const auto cl = full_cluster(inst);
    bool ok = true;
    Philox rng(seed ^ 0x5eedULL);
    std::uint64_t ctr = 0;
    for (int rep = 0; rep < 20 && ok; ++rep) {
      auto p = PrecoderSet::zeros(cl, cfg.tx_antennas, cfg.streams);
      for (std::size_t u = 0; u < cl.users.size(); ++u)
        for (auto& blk : p.blocks[u])
          for (int c = 0; c < cfg.streams; ++c)
            for (int r = 0; r < cfg.tx_antennas; ++r)
              blk(r, c) = rng.cnormal(0, ctr++);
      for (int k : cl.users) {
        const auto [u, w] = optimal_receiver_and_weight(inst, p, k);
        const double rate = user_rate(inst, p, k);
        const double h = h_lower_bound(inst, p, u, w, k);
        ok = ok && std::abs(h - rate) <= 1e-8 * (1.0 + std::abs(rate));
      }
    }
    check("rate lower bound tight after optimal update", ok);
  }
  {
    const auto cl = full_cluster(inst);
    const auto res = solve_alternative_problem(
        inst, cl, init_precoders(inst, cl, InitScheme::SvdInitial));
    bool mono = !res.objective_trace.empty();
    for (std::size_t n = 1; n < res.objective_trace.size(); ++n)
      mono = mono && res.objective_trace[n] <= res.objective_trace[n - 1] + 1e-9;
    check("admission objective monotone", mono);
  }
  {
    std::vector<int> users(static_cast<std::size_t>(cfg.num_users));
    std::iota(users.begin(), users.end(), 0);
    std::vector<int> rrhs(static_cast<std::size_t>(cfg.num_rrhs));
    std::iota(rrhs.begin(), rrhs.end(), 0);
    auto [feasible, witness] = check_feasibility(inst, users, rrhs);
    bool ok = true;
    if (feasible) {
      const auto rs = receiver_update(inst, witness);
      const std::vector<double> omega(static_cast<std::size_t>(cfg.num_rrhs), pm.eta);
      const auto sub = build_wpm_subproblem(inst, witness.cluster, rs, omega);
      DualState st;
      st.lambda = RVec::Ones(sub.users());
      st.mu = RVec::Ones(sub.rrhs());
      refresh_dual_cache(sub, st);
      const RVec g = grad_lambda(sub, st);
      for (int k = 0; k < g.size() && ok; ++k) {
        RVec lp = st.lambda, lm = st.lambda;
        lp(k) += 1e-5;
        lm(k) -= 1e-5;
        const double fd =
            (dual_value(sub, lp, st.mu) - dual_value(sub, lm, st.mu)) / 2e-5;
        ok = std::abs(g(k) - fd) <= 1e-5 * (1.0 + g.cwiseAbs().maxCoeff());
      }
    }
    check("dual gradient matches finite differences", ok);
  }
  {
    const auto cl = full_cluster(inst);
    auto p = init_precoders(inst, cl, InitScheme::SvdInitial);
    const auto rates = all_rates(inst, p);
    const auto b = npc(inst, p, rates, cl.rrhs);
    check("npc components sum exactly",
          b.objective_value + b.sleep_power + b.bbu_power == b.full_npc);
  }
  std::cout << (failures == 0 ? "verify: all checks passed\n"
                              : "verify: FAILURES present\n");
  return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"user-centric C-RAN admission and green precoding toolkit"};
  app.require_subcommand(1);

  InstanceSource gen_src, s1_src, solve_src, base_src;
  std::string out_generate = "-", out_stage1 = "-", out_solve = "-", out_base = "-";
  std::string scheme = "svd";
  std::string base_method = "full_coop";
  std::string spec_path, sweep_prefix = "sweep";
  int jobs = 1;
  bool verbose = false;
  std::uint64_t verify_seed = 1;
  std::string verify_config;

  auto* generate = app.add_subcommand("generate", "draw a network instance snapshot");
  gen_src.attach(generate);
  generate->add_option("--out", out_generate, "output path (- for stdout)");

  auto* stage1 = app.add_subcommand("stage1", "user admission (Stage I)");
  s1_src.attach(stage1);
  stage1->add_option("--scheme", scheme, "initializer: svd | rand");
  stage1->add_option("--out", out_stage1, "output path (- for stdout)");

  auto* solve = app.add_subcommand("solve", "full pipeline: admission + sparse precoding");
  solve_src.attach(solve);
  solve->add_option("--out", out_solve, "output path (- for stdout)");
  solve->add_flag("--verbose", verbose, "dual-solver JSONL trace on stderr");

  auto* baseline = app.add_subcommand("baseline", "RRH-selection baseline method");
  base_src.attach(baseline);
  baseline->add_option("--method", base_method,
                       "full_coop | successive | rrh_greedy | rrh_exhaustive")
      ->required();
  baseline->add_option("--out", out_base, "output path (- for stdout)");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo experiment sweep");
  sweep->add_option("--spec", spec_path, "experiment spec JSON")->required();
  sweep->add_option("--out-prefix", sweep_prefix, "prefix for .csv/.jsonl outputs");
  sweep->add_option("--jobs", jobs, "worker threads");

  auto* verify = app.add_subcommand("verify", "run the invariant suite on a seed");
  verify->add_option("--seed", verify_seed, "generator seed");
  verify->add_option("--config", verify_config, "network/power config JSON");

  CLI11_PARSE(app, argc, argv);
  try {
    if (generate->parsed()) return cmd_generate(gen_src, out_generate);
    if (stage1->parsed()) return cmd_stage1(s1_src, scheme, out_stage1);
    if (solve->parsed()) return cmd_solve(solve_src, out_solve, verbose);
    if (baseline->parsed()) return cmd_baseline(base_src, base_method, out_base);
    if (sweep->parsed()) return cmd_sweep(spec_path, sweep_prefix, jobs);
    if (verify->parsed()) return cmd_verify(verify_seed, verify_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
