// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "ucran/common.hpp"
#include "ucran/precoder.hpp"
#include "ucran/prng.hpp"

namespace ucran {

inline constexpr double kAntennaGainDbi = 9.0;
inline constexpr double kPathLossFixedDb = 148.1;
inline constexpr double kPathLossSlopeDb = 37.6;
inline constexpr double kShadowStdDb = 8.0;
inline constexpr double kMinLinkDistanceM = 1.0;

struct NetworkConfig {
  int num_rrhs = 12;       // I
  int num_users = 8;       // K
  int tx_antennas = 2;     // M
  int rx_antennas = 2;     // N
  int streams = 2;         // d
  int candidate_size = 3;  // X, nearest RRHs per user
  double region_half_width = 1000.0;  // m
  double rate_min = 2.0;              // nats/s/Hz, same target for all users
  double noise_dbm = -104.0;          // thermal noise power
  std::uint64_t rng_seed = 1;

  void validate() const {
    detail::require(num_rrhs >= 1, "config: num_rrhs >= 1");
    detail::require(num_users >= 1, "config: num_users >= 1");
    detail::require(tx_antennas >= 1 && rx_antennas >= 1,
                    "config: antenna counts >= 1");
    detail::require(streams >= 1 && streams <= std::min(tx_antennas, rx_antennas),
                    "config: 1 <= streams <= min(tx, rx)");
    detail::require(candidate_size >= 1 && candidate_size <= num_rrhs,
                    "config: 1 <= candidate_size <= num_rrhs");
    detail::require(rate_min >= 0.0, "config: rate_min >= 0");
    detail::require(region_half_width > 0.0, "config: region_half_width > 0");
  }
};

struct PowerModel {
  double eta = 4.0;           // amplifier inefficiency, > 1
  double rho = 0.5;           // fronthaul W per nat/s/Hz
  double p_active_rrh = 3.4;  // W per antenna, active
  double p_sleep_rrh = 2.15;  // W per antenna, sleep
  double p_active_fr = 3.85;  // W per fronthaul link, active
  double p_sleep_fr = 0.75;   // W per fronthaul link, sleep
  double p_bbu = 20.0;        // W
  double p_max = 4.0;         // per-RRH transmit cap, W

  /// P_c: extra draw of an active RRH over sleep, antennas + fronthaul.
  double circuit_active(int tx_antennas) const {
    return tx_antennas * (p_active_rrh - p_sleep_rrh) + p_active_fr - p_sleep_fr;
  }

  /// P_s: floor draw of a sleeping RRH.
  double circuit_sleep(int tx_antennas) const {
    return tx_antennas * p_sleep_rrh + p_sleep_fr;
  }

  void validate() const {
    detail::require(eta > 1.0, "power: eta > 1");
    detail::require(rho >= 0.0, "power: rho >= 0");
    detail::require(p_active_rrh >= p_sleep_rrh, "power: active >= sleep (rrh)");
    detail::require(p_active_fr >= p_sleep_fr, "power: active >= sleep (fr)");
    detail::require(p_sleep_rrh >= 0.0 && p_sleep_fr >= 0.0 && p_bbu >= 0.0,
                    "power: components >= 0");
    detail::require(p_max > 0.0, "power: p_max > 0");
  }
};

struct NetworkInstance {
  NetworkConfig config;
  PowerModel power;
  RMat rrh_pos;   // I x 2, m
  RMat user_pos;  // K x 2, m
  std::vector<CMat> channels;  // row-major over (i, k), each N x M
  RVec noise_power;            // per user, W
  std::vector<std::vector<int>> cand_rrhs;   // I_k, ascending, |I_k| = X
  std::vector<std::vector<int>> cand_users;  // U_i, ascending

  const CMat& channel(int i, int k) const {
    return channels[static_cast<std::size_t>(i) * config.num_users + k];
  }
};

inline double path_loss_db(double distance_m) {
  const double d = std::max(distance_m, kMinLinkDistanceM);
  return kPathLossFixedDb + kPathLossSlopeDb * std::log10(d / 1000.0);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return 1e-3 * db_to_linear(dbm); }

namespace detail {

// Stream ids of the generator draws; the addressing below is a determinism
// contract for instance snapshots (see README).
enum : std::uint64_t {
  kStreamRrhPos = 0,
  kStreamUserPos = 1,
  kStreamShadow = 2,
  kStreamFading = 3,
  kStreamInterfShadow = 4,
};

inline double dist2d(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace detail

/// Draws one random network: i.i.d. uniform positions in the central square,
/// LTE path loss + log-normal shadowing + Rayleigh fading links, per-user
/// noise floors raised by eight surrounding uncoordinated macrocell
/// transmitters (one per neighbor cell, placed at the cell center), and
/// X-nearest candidate sets. Deterministic in config.rng_seed.
inline NetworkInstance generate_instance(const NetworkConfig& config,
                                         const PowerModel& power) {
  config.validate();
  power.validate();
  NetworkInstance inst;
  inst.config = config;
  inst.power = power;

  const int I = config.num_rrhs;
  const int K = config.num_users;
  const int M = config.tx_antennas;
  const int N = config.rx_antennas;
  const double W = config.region_half_width;
  const Philox rng(config.rng_seed);

  inst.rrh_pos.resize(I, 2);
  for (int i = 0; i < I; ++i) {
    inst.rrh_pos(i, 0) = -W + 2.0 * W * rng.uniform(detail::kStreamRrhPos, 2 * i);
    inst.rrh_pos(i, 1) = -W + 2.0 * W * rng.uniform(detail::kStreamRrhPos, 2 * i + 1);
  }
  inst.user_pos.resize(K, 2);
  for (int k = 0; k < K; ++k) {
    inst.user_pos(k, 0) = -W + 2.0 * W * rng.uniform(detail::kStreamUserPos, 2 * k);
    inst.user_pos(k, 1) = -W + 2.0 * W * rng.uniform(detail::kStreamUserPos, 2 * k + 1);
  }

  inst.channels.resize(static_cast<std::size_t>(I) * K);
  for (int i = 0; i < I; ++i) {
    for (int k = 0; k < K; ++k) {
      const std::uint64_t link = static_cast<std::uint64_t>(i) * K + k;
      const double d = detail::dist2d(inst.rrh_pos(i, 0), inst.rrh_pos(i, 1),
                                      inst.user_pos(k, 0), inst.user_pos(k, 1));
      const double shadow_db = kShadowStdDb * rng.normal(detail::kStreamShadow, link);
      const double gain_db = -path_loss_db(d) + shadow_db + kAntennaGainDbi;
      const double amp = std::sqrt(db_to_linear(gain_db));
      CMat h(N, M);
      for (int c = 0; c < M; ++c)
        for (int r = 0; r < N; ++r)
          h(r, c) = amp * rng.cnormal(detail::kStreamFading,
                                      link * static_cast<std::uint64_t>(N) * M +
                                          static_cast<std::uint64_t>(c) * N + r);
      inst.channels[static_cast<std::size_t>(i) * K + k] = std::move(h);
    }
  }

  // Eight neighbor-cell interferers, enumerated in lexicographic offset order.
  const double sigma2 = dbm_to_watts(config.noise_dbm);
  const double g_lin = db_to_linear(kAntennaGainDbi);
  inst.noise_power.resize(K);
  for (int k = 0; k < K; ++k) inst.noise_power(k) = sigma2;
  int m = 0;
  for (int ox = -1; ox <= 1; ++ox) {
    for (int oy = -1; oy <= 1; ++oy) {
      if (ox == 0 && oy == 0) continue;
      const double bx = 2.0 * W * ox;
      const double by = 2.0 * W * oy;
      for (int k = 0; k < K; ++k) {
        const double d = detail::dist2d(bx, by, inst.user_pos(k, 0), inst.user_pos(k, 1));
        const double pl_lin = db_to_linear(-path_loss_db(d));
        const double s_lin = db_to_linear(
            kShadowStdDb * rng.normal(detail::kStreamInterfShadow,
                                      static_cast<std::uint64_t>(m) * K + k));
        inst.noise_power(k) += power.p_max * pl_lin * s_lin * g_lin;
      }
      ++m;
    }
  }

  inst.cand_rrhs.resize(K);
  inst.cand_users.resize(I);
  for (int k = 0; k < K; ++k) {
    std::vector<int> order(I);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(I);
    for (int i = 0; i < I; ++i)
      dist[i] = detail::dist2d(inst.rrh_pos(i, 0), inst.rrh_pos(i, 1),
                               inst.user_pos(k, 0), inst.user_pos(k, 1));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    });
    order.resize(config.candidate_size);
    std::sort(order.begin(), order.end());
    inst.cand_rrhs[k] = order;
    for (int i : order) inst.cand_users[i].push_back(k);
  }
  for (auto& u : inst.cand_users) std::sort(u.begin(), u.end());
  return inst;
}

/// Cluster of `users` restricted to `active_rrhs`; nullopt when some selected
/// user loses every candidate RRH.
inline std::optional<Cluster> make_cluster(const NetworkInstance& inst,
                                           std::vector<int> users,
                                           const std::vector<int>& active_rrhs) {
  std::sort(users.begin(), users.end());
  std::vector<char> active(static_cast<std::size_t>(inst.config.num_rrhs), 0);
  for (int i : active_rrhs) active[static_cast<std::size_t>(i)] = 1;

  Cluster cl;
  cl.users = users;
  cl.rrhs_of.resize(static_cast<std::size_t>(inst.config.num_users));
  cl.users_of.resize(static_cast<std::size_t>(inst.config.num_rrhs));
  for (int k : users) {
    for (int i : inst.cand_rrhs[static_cast<std::size_t>(k)])
      if (active[static_cast<std::size_t>(i)])
        cl.rrhs_of[static_cast<std::size_t>(k)].push_back(i);
    if (cl.rrhs_of[static_cast<std::size_t>(k)].empty()) return std::nullopt;
    for (int i : cl.rrhs_of[static_cast<std::size_t>(k)])
      cl.users_of[static_cast<std::size_t>(i)].push_back(k);
  }
  for (int i = 0; i < inst.config.num_rrhs; ++i)
    if (!cl.users_of[static_cast<std::size_t>(i)].empty()) cl.rrhs.push_back(i);
  return cl;
}

/// Full cluster: all users, all candidate RRHs.
inline Cluster full_cluster(const NetworkInstance& inst) {
  std::vector<int> users(static_cast<std::size_t>(inst.config.num_users));
  std::iota(users.begin(), users.end(), 0);
  std::vector<int> rrhs(static_cast<std::size_t>(inst.config.num_rrhs));
  std::iota(rrhs.begin(), rrhs.end(), 0);
  return *make_cluster(inst, users, rrhs);
}

/// Channel from user j's serving RRHs to user k, blocks in ascending RRH
/// order: N x |I_j| M.
inline CMat stacked_channel(const NetworkInstance& inst, const Cluster& cl,
                            int j, int k) {
  const auto& list = cl.rrhs_of[static_cast<std::size_t>(j)];
  detail::require(!list.empty(), "stacked_channel: user has no serving RRHs");
  const int N = inst.config.rx_antennas;
  const int M = inst.config.tx_antennas;
  CMat h(N, static_cast<Eigen::Index>(list.size()) * M);
  for (std::size_t b = 0; b < list.size(); ++b)
    h.middleCols(static_cast<Eigen::Index>(b) * M, M) = inst.channel(list[b], k);
  return h;
}

/// Total transmit power of RRH i: sum of squared Frobenius norms over the
/// users it serves.
inline double transmit_power(const PrecoderSet& p, int i) {
  double total = 0.0;
  for (int k : p.cluster.users_of[static_cast<std::size_t>(i)])
    total += p.block(i, k).squaredNorm();
  return total;
}

/// Achievable rate of user k in nats/s/Hz, natural-log det form. The
/// interference-plus-noise covariance is Cholesky-whitened and the signal
/// quadratic reduced to a Hermitian eigenproblem.
inline double user_rate(const NetworkInstance& inst, const PrecoderSet& p, int k) {
  const int N = inst.config.rx_antennas;
  CMat j_cov = inst.noise_power(k) * CMat::Identity(N, N);
  for (int j : p.cluster.users) {
    if (j == k) continue;
    const CMat x = stacked_channel(inst, p.cluster, j, k) * stack_big_precoder(p, j);
    j_cov.noalias() += x * x.adjoint();
  }
  Eigen::LLT<CMat> llt(j_cov);
  detail::require(llt.info() == Eigen::Success, "user_rate: singular J_k");
  const CMat signal = stacked_channel(inst, p.cluster, k, k) * stack_big_precoder(p, k);
  const CMat t = llt.matrixL().solve(signal);
  Eigen::SelfAdjointEigenSolver<CMat> eig(t.adjoint() * t);
  double rate = 0.0;
  for (Eigen::Index s = 0; s < eig.eigenvalues().size(); ++s)
    rate += std::log1p(std::max(0.0, eig.eigenvalues()(s)));
  return rate;
}

/// Rates for every user in the set, indexed by global user id (zero for
/// unselected users).
inline std::vector<double> all_rates(const NetworkInstance& inst,
                                     const PrecoderSet& p) {
  std::vector<double> r(static_cast<std::size_t>(inst.config.num_users), 0.0);
  for (int k : p.cluster.users) r[static_cast<std::size_t>(k)] = user_rate(inst, p, k);
  return r;
}

struct NpcBreakdown {
  double transmit_power_total = 0.0;  // amplifier draw, sum of eta * P_tr
  double fronthaul_rate_power = 0.0;
  double active_circuit_power = 0.0;
  double sleep_power = 0.0;
  double bbu_power = 0.0;
  double objective_value = 0.0;  // transmit + fronthaul + circuit
  double full_npc = 0.0;         // objective + sleep + bbu
  std::vector<int> active_set;
};

/// Network power consumption breakdown for a given active-RRH set. RRHs
/// outside the active set must carry zero transmit power.
inline NpcBreakdown npc(const NetworkInstance& inst, const PrecoderSet& p,
                        const std::vector<double>& rates,
                        std::vector<int> active_set) {
  std::sort(active_set.begin(), active_set.end());
  NpcBreakdown out;
  out.active_set = active_set;
  std::vector<char> active(static_cast<std::size_t>(inst.config.num_rrhs), 0);
  for (int i : active_set) active[static_cast<std::size_t>(i)] = 1;

  for (int i = 0; i < inst.config.num_rrhs; ++i) {
    const bool served = !p.cluster.users_of[static_cast<std::size_t>(i)].empty();
    const double p_tr = served ? transmit_power(p, i) : 0.0;
    if (!active[static_cast<std::size_t>(i)]) {
      detail::require(p_tr <= 1e-9, "npc: nonzero transmit power at inactive RRH");
      continue;
    }
    out.transmit_power_total += inst.power.eta * p_tr;
    double rate_sum = 0.0;
    for (int k : p.cluster.users_of[static_cast<std::size_t>(i)])
      rate_sum += rates[static_cast<std::size_t>(k)];
    out.fronthaul_rate_power += inst.power.rho * rate_sum;
    out.active_circuit_power += inst.power.circuit_active(inst.config.tx_antennas);
  }
  out.sleep_power = inst.config.num_rrhs * inst.power.circuit_sleep(inst.config.tx_antennas);
  out.bbu_power = inst.power.p_bbu;
  out.objective_value = out.transmit_power_total + out.fronthaul_rate_power +
                        out.active_circuit_power;
  out.full_npc = out.objective_value + out.sleep_power + out.bbu_power;
  return out;
}

}  // namespace ucran
