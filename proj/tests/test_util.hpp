// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ucran/mmse.hpp"
#include "ucran/network.hpp"
#include "ucran/prng.hpp"

namespace ucran::testing {

/// Hand-built instance with explicit channels and noise; positions are
/// placeholders (tests that need geometry use generate_instance).
inline NetworkInstance manual_instance(int num_rrhs, int num_users, int tx,
                                       int rx, int streams,
                                       std::vector<std::vector<int>> cand_rrhs,
                                       std::vector<CMat> channels,
                                       std::vector<double> noise,
                                       PowerModel power = {}) {
  NetworkInstance inst;
  inst.config.num_rrhs = num_rrhs;
  inst.config.num_users = num_users;
  inst.config.tx_antennas = tx;
  inst.config.rx_antennas = rx;
  inst.config.streams = streams;
  inst.config.candidate_size = static_cast<int>(cand_rrhs[0].size());
  inst.power = power;
  inst.rrh_pos = RMat::Zero(num_rrhs, 2);
  inst.user_pos = RMat::Zero(num_users, 2);
  inst.channels = std::move(channels);
  inst.noise_power.resize(num_users);
  for (int k = 0; k < num_users; ++k) inst.noise_power(k) = noise[static_cast<std::size_t>(k)];
  inst.cand_rrhs = std::move(cand_rrhs);
  inst.cand_users.assign(static_cast<std::size_t>(num_rrhs), {});
  for (int k = 0; k < num_users; ++k)
    for (int i : inst.cand_rrhs[static_cast<std::size_t>(k)])
      inst.cand_users[static_cast<std::size_t>(i)].push_back(k);
  return inst;
}

inline CMat random_cmat(const Philox& rng, std::uint64_t stream, std::uint64_t& ctr,
                        int rows, int cols) {
  CMat m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.cnormal(stream, ctr++);
  return m;
}

/// Random precoders scaled so each serving RRH uses `fill` of its power cap.
inline PrecoderSet random_precoders(const NetworkInstance& inst, const Cluster& cl,
                                    std::uint64_t seed, double fill = 0.9) {
  Philox rng(seed);
  std::uint64_t ctr = 0;
  PrecoderSet p = PrecoderSet::zeros(cl, inst.config.tx_antennas, inst.config.streams);
  for (std::size_t u = 0; u < cl.users.size(); ++u)
    for (auto& blk : p.blocks[u])
      blk = random_cmat(rng, 0, ctr, inst.config.tx_antennas, inst.config.streams);
  for (int i : cl.rrhs) {
    const double pw = transmit_power(p, i);
    if (pw <= 0.0) continue;
    const double scale = std::sqrt(fill * inst.power.p_max / pw);
    for (int k : cl.users_of[static_cast<std::size_t>(i)]) p.block(i, k) *= scale;
  }
  return p;
}

inline CMat random_unitary(int d, const Philox& rng, std::uint64_t& ctr) {
  CMat x = random_cmat(rng, 3, ctr, d, d);
  Eigen::HouseholderQR<CMat> qr(x);
  CMat q = qr.householderQ();
  return q;
}

/// Random Hermitian positive definite d x d with unit-order eigenvalues.
inline CMat random_hpd(int d, const Philox& rng, std::uint64_t& ctr) {
  CMat x = random_cmat(rng, 4, ctr, d, d);
  CMat w = x * x.adjoint() / d;
  w.diagonal().array() += 0.1;
  return w;
}

}  // namespace ucran::testing
