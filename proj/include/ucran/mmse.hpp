// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ucran/network.hpp"

namespace ucran {

/// Linear receive filters U_k (rx x streams) and MSE weight matrices W_k
/// (streams x streams, Hermitian PSD), indexed by global user id.
struct ReceiverState {
  std::vector<CMat> u;
  std::vector<CMat> w;
};

/// Hermitian square root with negative eigenvalues clamped to zero.
inline CMat hermitian_sqrt_psd(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(a);
  RVec d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().adjoint();
}

inline double log_det_hermitian_pd(const CMat& a, const char* what) {
  Eigen::LLT<CMat> llt(a);
  detail::require(llt.info() == Eigen::Success, what);
  double v = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    v += 2.0 * std::log(std::real(llt.matrixL()(r, r)));
  return v;
}

/// MSE matrix E_k of user k under receiver U_k: signal mismatch plus
/// interference plus filtered noise. Hermitian PSD by construction.
inline CMat mse_matrix(const NetworkInstance& inst, const PrecoderSet& p,
                       const CMat& u_k, int k) {
  const int d = inst.config.streams;
  CMat e = CMat::Zero(d, d);
  {
    const CMat s = u_k.adjoint() * stacked_channel(inst, p.cluster, k, k) *
                       stack_big_precoder(p, k) -
                   CMat::Identity(d, d);
    e.noalias() += s * s.adjoint();
  }
  for (int j : p.cluster.users) {
    if (j == k) continue;
    const CMat x = u_k.adjoint() * stacked_channel(inst, p.cluster, j, k) *
                   stack_big_precoder(p, j);
    e.noalias() += x * x.adjoint();
  }
  e.noalias() += inst.noise_power(k) * (u_k.adjoint() * u_k);
  return 0.5 * (e + e.adjoint());
}

/// Closed-form optimal receiver and weight for user k at the current
/// precoders: MMSE filter and inverse-MSE weight. The weight inversion is
/// regularized when a stream collapses.
inline std::pair<CMat, CMat> optimal_receiver_and_weight(
    const NetworkInstance& inst, const PrecoderSet& p, int k) {
  const int n_rx = inst.config.rx_antennas;
  const int d = inst.config.streams;
  CMat cov = inst.noise_power(k) * CMat::Identity(n_rx, n_rx);
  for (int j : p.cluster.users) {
    const CMat x = stacked_channel(inst, p.cluster, j, k) * stack_big_precoder(p, j);
    cov.noalias() += x * x.adjoint();
  }
  const CMat signal = stacked_channel(inst, p.cluster, k, k) * stack_big_precoder(p, k);
  Eigen::LLT<CMat> llt(cov);
  detail::require(llt.info() == Eigen::Success,
                  "optimal_receiver_and_weight: singular receive covariance");
  const CMat u = llt.solve(signal);
  CMat e = CMat::Identity(d, d) - signal.adjoint() * u;
  e = 0.5 * (e + e.adjoint());

  Eigen::SelfAdjointEigenSolver<CMat> eig(e);
  RVec vals = eig.eigenvalues();
  if (vals.minCoeff() < 1e-12) vals.array() += 1e-12;
  CMat w = eig.eigenvectors() * vals.cwiseInverse().asDiagonal() *
           eig.eigenvectors().adjoint();
  return {u, 0.5 * (w + w.adjoint())};
}

/// Rate lower bound h_k = log|W_k| - Tr(W_k E_k) + d. Equals R_k when (U, W)
/// are the optimal updates, and never exceeds it otherwise.
inline double h_lower_bound(const NetworkInstance& inst, const PrecoderSet& p,
                            const CMat& u_k, const CMat& w_k, int k) {
  const double logdet = log_det_hermitian_pd(w_k, "h_lower_bound: W_k not positive definite");
  const CMat e = mse_matrix(inst, p, u_k, k);
  return logdet - std::real((w_k * e).trace()) + inst.config.streams;
}

/// Optimal (U, W) updates for every user in the set.
inline ReceiverState receiver_update(const NetworkInstance& inst,
                                     const PrecoderSet& p) {
  ReceiverState rs;
  rs.u.resize(static_cast<std::size_t>(inst.config.num_users));
  rs.w.resize(static_cast<std::size_t>(inst.config.num_users));
  for (int k : p.cluster.users) {
    auto [u, w] = optimal_receiver_and_weight(inst, p, k);
    rs.u[static_cast<std::size_t>(k)] = std::move(u);
    rs.w[static_cast<std::size_t>(k)] = std::move(w);
  }
  return rs;
}

}  // namespace ucran
