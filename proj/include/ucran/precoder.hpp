// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <vector>

#include "ucran/common.hpp"

namespace ucran {

/// Serving topology restricted to a subset of users and RRHs. `rrhs_of` and
/// `users_of` are indexed by global ids and kept in ascending order; the
/// ascending RRH order fixes the block layout of every stacked precoder.
struct Cluster {
  std::vector<int> users;                 // selected users, ascending
  std::vector<int> rrhs;                  // union of serving sets, ascending
  std::vector<std::vector<int>> rrhs_of;  // per global user id
  std::vector<std::vector<int>> users_of; // per global RRH id

  int user_pos(int k) const {
    auto it = std::lower_bound(users.begin(), users.end(), k);
    if (it == users.end() || *it != k) return -1;
    return static_cast<int>(it - users.begin());
  }

  bool has_user(int k) const { return user_pos(k) >= 0; }

  /// Position of RRH i inside user k's serving list, -1 if absent.
  int block_pos(int i, int k) const {
    const auto& list = rrhs_of[static_cast<std::size_t>(k)];
    auto it = std::lower_bound(list.begin(), list.end(), i);
    if (it == list.end() || *it != i) return -1;
    return static_cast<int>(it - list.begin());
  }
};

/// Per-(RRH, user) precoding blocks V_{i,k}, each tx_antennas x streams,
/// stored per user in the cluster's ascending-RRH order.
struct PrecoderSet {
  Cluster cluster;
  std::vector<std::vector<CMat>> blocks;  // [user position][serving position]

  static PrecoderSet zeros(const Cluster& cl, int tx_antennas, int streams) {
    PrecoderSet p;
    p.cluster = cl;
    p.blocks.resize(cl.users.size());
    for (std::size_t u = 0; u < cl.users.size(); ++u) {
      const int k = cl.users[u];
      p.blocks[u].assign(cl.rrhs_of[static_cast<std::size_t>(k)].size(),
                         CMat::Zero(tx_antennas, streams));
    }
    return p;
  }

  bool has_block(int i, int k) const {
    return cluster.has_user(k) && cluster.block_pos(i, k) >= 0;
  }

  const CMat& block(int i, int k) const {
    const int u = cluster.user_pos(k);
    detail::require(u >= 0, "PrecoderSet::block: user not in set");
    const int j = cluster.block_pos(i, k);
    detail::require(j >= 0, "PrecoderSet::block: RRH not serving user");
    return blocks[static_cast<std::size_t>(u)][static_cast<std::size_t>(j)];
  }

  CMat& block(int i, int k) {
    return const_cast<CMat&>(
        static_cast<const PrecoderSet&>(*this).block(i, k));
  }
};

/// Vertical concatenation of user k's blocks over its serving RRHs in
/// ascending RRH-index order.
inline CMat stack_big_precoder(const PrecoderSet& p, int k) {
  const int u = p.cluster.user_pos(k);
  detail::require(u >= 0, "stack_big_precoder: user not in set");
  const auto& list = p.blocks[static_cast<std::size_t>(u)];
  detail::require(!list.empty(), "stack_big_precoder: user has no blocks");
  const auto rows = list[0].rows();
  const auto cols = list[0].cols();
  CMat out(rows * static_cast<Eigen::Index>(list.size()), cols);
  for (std::size_t j = 0; j < list.size(); ++j) {
    detail::require(list[j].rows() == rows && list[j].cols() == cols,
                    "stack_big_precoder: inconsistent block shapes");
    out.middleRows(static_cast<Eigen::Index>(j) * rows, rows) = list[j];
  }
  return out;
}

/// Writes a stacked big precoder back into per-RRH blocks.
inline void unstack_big_precoder(PrecoderSet& p, int k, const CMat& vbar) {
  const int u = p.cluster.user_pos(k);
  detail::require(u >= 0, "unstack_big_precoder: user not in set");
  auto& list = p.blocks[static_cast<std::size_t>(u)];
  const auto rows = vbar.rows() / static_cast<Eigen::Index>(list.size());
  detail::require(rows * static_cast<Eigen::Index>(list.size()) == vbar.rows(),
                  "unstack_big_precoder: row count mismatch");
  for (std::size_t j = 0; j < list.size(); ++j)
    list[j] = vbar.middleRows(static_cast<Eigen::Index>(j) * rows, rows);
}

}  // namespace ucran
