// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ucran/baselines.hpp"
#include "ucran/json_io.hpp"
#include "ucran/stage1.hpp"
#include "ucran/stage2.hpp"

namespace ucran {

enum class Method {
  Usc,
  UserGreedy,
  UserExhaustive,
  Rln,
  FullCoop,
  Successive,
  RrhGreedy,
  RrhExhaustive,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Usc: return "usc";
    case Method::UserGreedy: return "user_greedy";
    case Method::UserExhaustive: return "user_exhaustive";
    case Method::Rln: return "rln";
    case Method::FullCoop: return "full_coop";
    case Method::Successive: return "successive";
    case Method::RrhGreedy: return "rrh_greedy";
    case Method::RrhExhaustive: return "rrh_exhaustive";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  for (Method m : {Method::Usc, Method::UserGreedy, Method::UserExhaustive,
                   Method::Rln, Method::FullCoop, Method::Successive,
                   Method::RrhGreedy, Method::RrhExhaustive})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown method: " + name);
}

/// A stage-II comparison method (follows the paper's feasible-only protocol).
inline bool is_comparison_method(Method m) {
  switch (m) {
    case Method::Rln:
    case Method::FullCoop:
    case Method::Successive:
    case Method::RrhGreedy:
    case Method::RrhExhaustive:
      return true;
    default:
      return false;
  }
}

struct ExperimentSpec {
  NetworkConfig config;
  PowerModel power;
  std::string sweep_axis = "rate_min";
  std::vector<double> sweep_values = {config.rate_min};
  int trials = 20;
  std::vector<Method> methods = {Method::Usc};
  std::uint64_t seed = 1;
  std::optional<bool> feasible_only;  // default: any comparison method present
  Stage1Options stage1;
  Stage2Options stage2;

  bool feasible_only_effective() const {
    if (feasible_only.has_value()) return *feasible_only;
    return std::any_of(methods.begin(), methods.end(), is_comparison_method);
  }
};

struct TrialRecord {
  std::uint64_t seed = 0;
  int trial = 0;
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::string method;
  std::string status = "ok";  // ok | skipped_infeasible | guard | failed
  std::vector<int> admitted_users;
  std::vector<int> active_set;
  NpcBreakdown npc;
  std::vector<double> rates;
  int iterations = 0;
  double wall_clock_s = 0.0;  // kept out of the serialized record
};

inline NetworkConfig apply_sweep(NetworkConfig cfg, const std::string& axis,
                                 double value) {
  if (axis == "rate_min")
    cfg.rate_min = value;
  else if (axis == "num_rrhs")
    cfg.num_rrhs = static_cast<int>(value);
  else if (axis == "num_users")
    cfg.num_users = static_cast<int>(value);
  else if (axis == "tx_antennas")
    cfg.tx_antennas = static_cast<int>(value);
  else if (axis == "rx_antennas")
    cfg.rx_antennas = static_cast<int>(value);
  else if (axis == "streams")
    cfg.streams = static_cast<int>(value);
  else if (axis == "candidate_size")
    cfg.candidate_size = static_cast<int>(value);
  else
    throw std::invalid_argument("unknown sweep axis: " + axis);
  return cfg;
}

namespace detail {

inline TrialRecord base_record(const ExperimentSpec& spec, double value, int trial,
                               std::uint64_t seed, Method m) {
  TrialRecord rec;
  rec.seed = seed;
  rec.trial = trial;
  rec.sweep_axis = spec.sweep_axis;
  rec.sweep_value = value;
  rec.method = method_name(m);
  return rec;
}

inline void fill_from_admission(const NetworkInstance& inst,
                                const AdmissionResult& res, TrialRecord& rec) {
  rec.admitted_users = res.admitted_users;
  rec.iterations = static_cast<int>(res.objective_trace.size());
  if (!res.admitted_users.empty()) {
    rec.active_set = res.precoders.cluster.rrhs;
    rec.rates = all_rates(inst, res.precoders);
    rec.npc = npc(inst, res.precoders, rec.rates, rec.active_set);
  }
}

}  // namespace detail

/// One trial: generate the instance at seed = base xor trial index, run
/// Stage I, then every requested method on the admitted users.
inline std::vector<TrialRecord> run_trial(const ExperimentSpec& spec,
                                          double sweep_value, int trial) {
  const std::uint64_t seed = spec.seed ^ static_cast<std::uint64_t>(trial);
  NetworkConfig cfg = apply_sweep(spec.config, spec.sweep_axis, sweep_value);
  cfg.rng_seed = seed;
  const NetworkInstance inst = generate_instance(cfg, spec.power);

  std::vector<int> all_users(static_cast<std::size_t>(cfg.num_users));
  std::iota(all_users.begin(), all_users.end(), 0);
  std::vector<int> all_rrhs(static_cast<std::size_t>(cfg.num_rrhs));
  std::iota(all_rrhs.begin(), all_rrhs.end(), 0);

  std::vector<TrialRecord> records;
  if (spec.feasible_only_effective() &&
      !check_feasibility(inst, all_users, all_rrhs, spec.stage1).first) {
    for (Method m : spec.methods) {
      auto rec = detail::base_record(spec, sweep_value, trial, seed, m);
      rec.status = "skipped_infeasible";
      records.push_back(std::move(rec));
    }
    return records;
  }

  const auto stage1 = usc_select_users(inst, spec.stage1);
  const std::vector<int>& admitted = stage1.admitted_users;

  for (Method m : spec.methods) {
    auto rec = detail::base_record(spec, sweep_value, trial, seed, m);
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (m) {
        case Method::Usc:
          detail::fill_from_admission(inst, stage1, rec);
          break;
        case Method::UserGreedy:
          detail::fill_from_admission(inst, greedy_user_selection(inst, spec.stage1), rec);
          break;
        case Method::UserExhaustive:
          detail::fill_from_admission(inst, exhaustive_user_selection(inst, spec.stage1), rec);
          break;
        case Method::Rln: {
          if (admitted.empty()) {
            rec.status = "failed";
            break;
          }
          const auto res =
              rln_solve(inst, stage1.precoders.cluster, stage1.precoders, spec.stage2);
          rec.admitted_users = admitted;
          rec.active_set = res.active_set;
          rec.rates = all_rates(inst, res.precoders);
          rec.npc = res.npc;
          rec.iterations = res.state.iteration;
          break;
        }
        default: {
          if (admitted.empty()) {
            rec.status = "failed";
            break;
          }
          BaselineMethod bm = BaselineMethod::FullCooperation;
          if (m == Method::Successive) bm = BaselineMethod::SuccessiveSelection;
          if (m == Method::RrhGreedy) bm = BaselineMethod::GreedySearch;
          if (m == Method::RrhExhaustive) bm = BaselineMethod::ExhaustiveSearch;
          const auto rep = run_baseline(bm, inst, admitted, spec.stage2);
          if (!rep.feasible) {
            rec.status = "failed";
            break;
          }
          rec.admitted_users = admitted;
          rec.active_set = rep.active_set;
          rec.rates = all_rates(inst, rep.precoders);
          rec.npc = rep.npc;
          rec.iterations = rep.feasibility_checks;
          break;
        }
      }
    } catch (const std::invalid_argument&) {
      rec.status = "guard";
    }
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    records.push_back(std::move(rec));
  }
  return records;
}

/// Full sweep: every (value, trial) pair, optionally across a worker pool.
/// Output order is deterministic and independent of the job count.
inline std::vector<TrialRecord> run_sweep(const ExperimentSpec& spec, int jobs = 1) {
  detail::require(spec.trials >= 1, "sweep: trials >= 1");
  struct Task {
    double value;
    int trial;
  };
  std::vector<Task> tasks;
  for (double v : spec.sweep_values)
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({v, t});
  std::vector<std::vector<TrialRecord>> slots(tasks.size());

  const int workers = std::max(1, jobs);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) break;
      slots[idx] = run_trial(spec, tasks[idx].value, tasks[idx].trial);
    }
  };
  if (workers == 1) {
    work();
  } else {
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<TrialRecord> records;
  for (auto& s : slots)
    for (auto& r : s) records.push_back(std::move(r));
  std::stable_sort(records.begin(), records.end(),
                   [](const TrialRecord& a, const TrialRecord& b) {
                     if (a.sweep_value != b.sweep_value)
                       return a.sweep_value < b.sweep_value;
                     if (a.trial != b.trial) return a.trial < b.trial;
                     return a.method < b.method;
                   });
  return records;
}

/// Canonical serialized record; wall-clock is deliberately excluded so that
/// reruns of the same spec and seed are byte-identical.
inline Json record_to_json(const TrialRecord& r) {
  return Json{{"schema", "ucran-trial-v1"},
              {"seed", r.seed},
              {"trial", r.trial},
              {"sweep_axis", r.sweep_axis},
              {"sweep_value", r.sweep_value},
              {"method", r.method},
              {"status", r.status},
              {"admitted_users", r.admitted_users},
              {"active_set", r.active_set},
              {"npc", to_json(r.npc)},
              {"rates", r.rates},
              {"iterations", r.iterations}};
}

inline void write_jsonl(const std::vector<TrialRecord>& records, std::ostream& os) {
  for (const auto& r : records) os << record_to_json(r).dump() << "\n";
}

namespace detail {

struct Accumulator {
  int n = 0;
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double v) {
    ++n;
    sum += v;
    sumsq += v * v;
  }
  double mean() const { return n > 0 ? sum / n : 0.0; }
  double sem() const {
    if (n < 2) return 0.0;
    const double var = (sumsq - sum * sum / n) / (n - 1);
    return std::sqrt(std::max(0.0, var) / n);
  }
};

inline std::string num(double v) { return Json(v).dump(); }

}  // namespace detail

/// Mean and standard-error aggregation over the ok rows, one CSV line per
/// (sweep value, method). Columns documented in the README.
inline void write_csv(const std::vector<TrialRecord>& records, std::ostream& os) {
  os << "sweep_axis,sweep_value,method,n_ok,n_total,admitted_mean,admitted_se,"
        "active_rrh_mean,active_rrh_se,npc_mean,npc_se,objective_mean,"
        "transmit_mean,fronthaul_mean,circuit_mean,rate_sum_mean,iterations_mean\n";
  std::map<std::pair<double, std::string>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) groups[{r.sweep_value, r.method}].push_back(&r);
  for (const auto& [key, rows] : groups) {
    detail::Accumulator adm, act, npc_acc, obj, tx, fr, circ, rate, iters;
    int n_ok = 0;
    for (const auto* r : rows) {
      if (r->status != "ok") continue;
      ++n_ok;
      adm.add(static_cast<double>(r->admitted_users.size()));
      act.add(static_cast<double>(r->active_set.size()));
      npc_acc.add(r->npc.full_npc);
      obj.add(r->npc.objective_value);
      tx.add(r->npc.transmit_power_total);
      fr.add(r->npc.fronthaul_rate_power);
      circ.add(r->npc.active_circuit_power);
      double rsum = 0.0;
      for (double v : r->rates) rsum += v;
      rate.add(rsum);
      iters.add(static_cast<double>(r->iterations));
    }
    os << rows.front()->sweep_axis << "," << detail::num(key.first) << ","
       << key.second << "," << n_ok << "," << rows.size() << ","
       << detail::num(adm.mean()) << "," << detail::num(adm.sem()) << ","
       << detail::num(act.mean()) << "," << detail::num(act.sem()) << ","
       << detail::num(npc_acc.mean()) << "," << detail::num(npc_acc.sem()) << ","
       << detail::num(obj.mean()) << "," << detail::num(tx.mean()) << ","
       << detail::num(fr.mean()) << "," << detail::num(circ.mean()) << ","
       << detail::num(rate.mean()) << "," << detail::num(iters.mean()) << "\n";
  }
}

inline ExperimentSpec spec_from_json(const Json& j) {
  ExperimentSpec spec;
  if (j.contains("network")) spec.config = config_from_json(j.at("network"));
  if (j.contains("power")) spec.power = power_from_json(j.at("power"));
  if (j.contains("sweep")) {
    spec.sweep_axis = j.at("sweep").value("axis", spec.sweep_axis);
    if (j.at("sweep").contains("values"))
      spec.sweep_values = j.at("sweep").at("values").get<std::vector<double>>();
  } else {
    spec.sweep_values = {spec.config.rate_min};
  }
  spec.trials = j.value("trials", spec.trials);
  if (j.contains("methods")) {
    spec.methods.clear();
    for (const auto& name : j.at("methods"))
      spec.methods.push_back(parse_method(name.get<std::string>()));
  }
  spec.seed = j.value("seed", spec.seed);
  if (j.contains("feasible_only")) spec.feasible_only = j.at("feasible_only").get<bool>();
  return spec;
}

}  // namespace ucran
