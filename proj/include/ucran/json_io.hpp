// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ucran/baselines.hpp"
#include "ucran/network.hpp"
#include "ucran/stage1.hpp"
#include "ucran/stage2.hpp"

namespace ucran {

using Json = nlohmann::json;

inline Json to_json(const NetworkConfig& c) {
  return Json{{"num_rrhs", c.num_rrhs},
              {"num_users", c.num_users},
              {"tx_antennas", c.tx_antennas},
              {"rx_antennas", c.rx_antennas},
              {"streams", c.streams},
              {"candidate_size", c.candidate_size},
              {"region_half_width", c.region_half_width},
              {"rate_min", c.rate_min},
              {"noise_dbm", c.noise_dbm},
              {"seed", c.rng_seed}};
}

inline NetworkConfig config_from_json(const Json& j) {
  NetworkConfig c;
  c.num_rrhs = j.value("num_rrhs", c.num_rrhs);
  c.num_users = j.value("num_users", c.num_users);
  c.tx_antennas = j.value("tx_antennas", c.tx_antennas);
  c.rx_antennas = j.value("rx_antennas", c.rx_antennas);
  c.streams = j.value("streams", c.streams);
  c.candidate_size = j.value("candidate_size", c.candidate_size);
  c.region_half_width = j.value("region_half_width", c.region_half_width);
  c.rate_min = j.value("rate_min", c.rate_min);
  c.noise_dbm = j.value("noise_dbm", c.noise_dbm);
  c.rng_seed = j.value("seed", c.rng_seed);
  return c;
}

inline Json to_json(const PowerModel& p) {
  return Json{{"eta", p.eta},
              {"rho", p.rho},
              {"p_active_rrh", p.p_active_rrh},
              {"p_sleep_rrh", p.p_sleep_rrh},
              {"p_active_fr", p.p_active_fr},
              {"p_sleep_fr", p.p_sleep_fr},
              {"p_bbu", p.p_bbu},
              {"p_max", p.p_max}};
}

inline PowerModel power_from_json(const Json& j) {
  PowerModel p;
  p.eta = j.value("eta", p.eta);
  p.rho = j.value("rho", p.rho);
  p.p_active_rrh = j.value("p_active_rrh", p.p_active_rrh);
  p.p_sleep_rrh = j.value("p_sleep_rrh", p.p_sleep_rrh);
  p.p_active_fr = j.value("p_active_fr", p.p_active_fr);
  p.p_sleep_fr = j.value("p_sleep_fr", p.p_sleep_fr);
  p.p_bbu = j.value("p_bbu", p.p_bbu);
  p.p_max = j.value("p_max", p.p_max);
  return p;
}

namespace detail {

inline Json cmat_to_json(const CMat& m) {
  Json re = Json::array();
  Json im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row_re = Json::array();
    Json row_im = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row_re.push_back(m(r, c).real());
      row_im.push_back(m(r, c).imag());
    }
    re.push_back(std::move(row_re));
    im.push_back(std::move(row_im));
  }
  return Json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline CMat cmat_from_json(const Json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const auto rows = static_cast<Eigen::Index>(re.size());
  const auto cols = static_cast<Eigen::Index>(re.at(0).size());
  CMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = Cplx(re.at(r).at(c).get<double>(), im.at(r).at(c).get<double>());
  return m;
}

}  // namespace detail

/// Full snapshot for replay: geometry, channels, noise, candidate sets.
inline Json instance_to_json(const NetworkInstance& inst) {
  Json j;
  j["schema"] = "ucran-instance-v1";
  j["config"] = to_json(inst.config);
  j["power"] = to_json(inst.power);
  Json rrh = Json::array();
  for (int i = 0; i < inst.config.num_rrhs; ++i)
    rrh.push_back({inst.rrh_pos(i, 0), inst.rrh_pos(i, 1)});
  j["rrh_positions"] = std::move(rrh);
  Json usr = Json::array();
  for (int k = 0; k < inst.config.num_users; ++k)
    usr.push_back({inst.user_pos(k, 0), inst.user_pos(k, 1)});
  j["user_positions"] = std::move(usr);
  Json links = Json::array();
  for (int i = 0; i < inst.config.num_rrhs; ++i)
    for (int k = 0; k < inst.config.num_users; ++k)
      links.push_back(detail::cmat_to_json(inst.channel(i, k)));
  j["channels"] = std::move(links);
  j["noise_power"] =
      std::vector<double>(inst.noise_power.data(),
                          inst.noise_power.data() + inst.noise_power.size());
  j["candidate_rrhs"] = inst.cand_rrhs;
  return j;
}

inline NetworkInstance instance_from_json(const Json& j) {
  detail::require(j.value("schema", "") == "ucran-instance-v1",
                  "instance_from_json: unknown schema");
  NetworkInstance inst;
  inst.config = config_from_json(j.at("config"));
  inst.power = power_from_json(j.at("power"));
  const int I = inst.config.num_rrhs;
  const int K = inst.config.num_users;
  inst.rrh_pos.resize(I, 2);
  for (int i = 0; i < I; ++i) {
    inst.rrh_pos(i, 0) = j.at("rrh_positions").at(i).at(0).get<double>();
    inst.rrh_pos(i, 1) = j.at("rrh_positions").at(i).at(1).get<double>();
  }
  inst.user_pos.resize(K, 2);
  for (int k = 0; k < K; ++k) {
    inst.user_pos(k, 0) = j.at("user_positions").at(k).at(0).get<double>();
    inst.user_pos(k, 1) = j.at("user_positions").at(k).at(1).get<double>();
  }
  inst.channels.resize(static_cast<std::size_t>(I) * K);
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k)
      inst.channels[static_cast<std::size_t>(i) * K + k] =
          detail::cmat_from_json(j.at("channels").at(i * K + k));
  const auto noise = j.at("noise_power").get<std::vector<double>>();
  inst.noise_power.resize(K);
  for (int k = 0; k < K; ++k) inst.noise_power(k) = noise[static_cast<std::size_t>(k)];
  inst.cand_rrhs = j.at("candidate_rrhs").get<std::vector<std::vector<int>>>();
  inst.cand_users.assign(static_cast<std::size_t>(I), {});
  for (int k = 0; k < K; ++k)
    for (int i : inst.cand_rrhs[static_cast<std::size_t>(k)])
      inst.cand_users[static_cast<std::size_t>(i)].push_back(k);
  for (auto& u : inst.cand_users) std::sort(u.begin(), u.end());
  return inst;
}

inline Json to_json(const NpcBreakdown& b) {
  return Json{{"transmit_power_total", b.transmit_power_total},
              {"fronthaul_rate_power", b.fronthaul_rate_power},
              {"active_circuit_power", b.active_circuit_power},
              {"sleep_power", b.sleep_power},
              {"bbu_power", b.bbu_power},
              {"objective_value", b.objective_value},
              {"full_npc", b.full_npc},
              {"active_set", b.active_set}};
}

inline Json to_json(const AdmissionResult& r) {
  return Json{{"admitted_users", r.admitted_users},
              {"alphas", r.alphas},
              {"removal_order", r.removal_order},
              {"objective_trace", r.objective_trace},
              {"converged", r.converged}};
}

inline Json to_json(const RlnResult& r) {
  return Json{{"active_set", r.active_set},
              {"npc", to_json(r.npc)},
              {"npc_trace", r.state.npc_trace},
              {"active_count_trace", r.state.active_count_trace},
              {"weights", r.state.weights},
              {"wmmse_iterations_total", r.wmmse_iterations_total},
              {"converged", r.converged}};
}

inline Json to_json(const BaselineReport& r) {
  return Json{{"method", baseline_name(r.method)},
              {"active_set", r.active_set},
              {"npc", to_json(r.npc)},
              {"feasibility_checks", r.feasibility_checks},
              {"feasible", r.feasible}};
}

}  // namespace ucran
