// SPDX-License-Identifier: Apache-2.0
#include "ucran/mmse.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using namespace ucran;
namespace tu = ucran::testing;

NetworkInstance scalar_instance() {
  return tu::manual_instance(1, 1, 1, 1, 1, {{0}}, {CMat::Constant(1, 1, 1.0)},
                             {1.0});
}

TEST(StackBigPrecoder, SingleBlockUnchanged) {
  const auto inst = scalar_instance();
  auto p = PrecoderSet::zeros(full_cluster(inst), 1, 1);
  p.block(0, 0)(0, 0) = Cplx(0.3, -0.4);
  const CMat v = stack_big_precoder(p, 0);
  ASSERT_EQ(v.rows(), 1);
  EXPECT_EQ(v(0, 0), Cplx(0.3, -0.4));
}

TEST(StackBigPrecoder, ConcatenatesInAscendingRrhOrder) {
  // candidate set {5, 2}: stacking must use order (2, 5)
  std::vector<CMat> h(12, CMat::Zero(1, 2));
  auto inst = tu::manual_instance(6, 2, 2, 1, 1, {{2, 5}, {0, 1}}, h, {1.0, 1.0});
  const auto cl = full_cluster(inst);
  auto p = PrecoderSet::zeros(cl, 2, 1);
  CMat a(2, 1), b(2, 1);
  a << 1.0, 2.0;
  b << 3.0, 4.0;
  p.block(2, 0) = a;
  p.block(5, 0) = b;
  const CMat v = stack_big_precoder(p, 0);
  ASSERT_EQ(v.rows(), 4);
  EXPECT_EQ(v(0, 0), Cplx(1.0));
  EXPECT_EQ(v(1, 0), Cplx(2.0));
  EXPECT_EQ(v(2, 0), Cplx(3.0));
  EXPECT_EQ(v(3, 0), Cplx(4.0));
}

TEST(MseMatrix, ZeroReceiverGivesIdentity) {
  NetworkConfig cfg;
  cfg.num_rrhs = 3;
  cfg.num_users = 2;
  cfg.candidate_size = 2;
  cfg.rng_seed = 5;
  const auto inst = generate_instance(cfg, {});
  const auto cl = full_cluster(inst);
  const auto p = tu::random_precoders(inst, cl, 8);
  const CMat e = mse_matrix(inst, p, CMat::Zero(cfg.rx_antennas, cfg.streams), 0);
  EXPECT_LT((e - CMat::Identity(2, 2)).norm(), 1e-14);
}

TEST(MseMatrix, ZeroPrecodersLeaveIdentityPlusNoiseTerm) {
  NetworkConfig cfg;
  cfg.num_rrhs = 3;
  cfg.num_users = 2;
  cfg.candidate_size = 2;
  cfg.rng_seed = 6;
  const auto inst = generate_instance(cfg, {});
  const auto cl = full_cluster(inst);
  const auto p = PrecoderSet::zeros(cl, cfg.tx_antennas, cfg.streams);
  Philox rng(3);
  std::uint64_t ctr = 0;
  const CMat u = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
  const CMat e = mse_matrix(inst, p, u, 0);
  const CMat expect =
      CMat::Identity(2, 2) + inst.noise_power(0) * (u.adjoint() * u);
  EXPECT_LT((e - expect).norm(), 1e-12 * (1.0 + expect.norm()));
}

TEST(MseMatrix, ScalarOptimalReceiverHalf) {
  const auto inst = scalar_instance();
  auto p = PrecoderSet::zeros(full_cluster(inst), 1, 1);
  p.block(0, 0)(0, 0) = 1.0;
  const CMat e = mse_matrix(inst, p, CMat::Constant(1, 1, 0.5), 0);
  EXPECT_NEAR(std::real(e(0, 0)), 0.5, 1e-14);
}

TEST(OptimalReceiver, ScalarClosedForm) {
  const auto inst = scalar_instance();
  auto p = PrecoderSet::zeros(full_cluster(inst), 1, 1);
  p.block(0, 0)(0, 0) = 1.0;
  const auto [u, w] = optimal_receiver_and_weight(inst, p, 0);
  EXPECT_NEAR(std::real(u(0, 0)), 0.5, 1e-12);
  EXPECT_NEAR(std::real(w(0, 0)), 2.0, 1e-9);
}

TEST(OptimalReceiver, ZeroPrecoderGivesIdentityWeight) {
  NetworkConfig cfg;
  cfg.num_rrhs = 2;
  cfg.num_users = 2;
  cfg.candidate_size = 1;
  cfg.rng_seed = 9;
  const auto inst = generate_instance(cfg, {});
  const auto cl = full_cluster(inst);
  const auto p = PrecoderSet::zeros(cl, cfg.tx_antennas, cfg.streams);
  const auto [u, w] = optimal_receiver_and_weight(inst, p, 0);
  EXPECT_LT(u.norm(), 1e-14);
  EXPECT_LT((w - CMat::Identity(2, 2)).norm(), 1e-9);
}

TEST(LowerBound, ScalarSubstitution) {
  const auto inst = scalar_instance();
  auto p = PrecoderSet::zeros(full_cluster(inst), 1, 1);
  p.block(0, 0)(0, 0) = 1.0;
  const double h = h_lower_bound(inst, p, CMat::Constant(1, 1, 0.5),
                                 CMat::Constant(1, 1, 2.0), 0);
  EXPECT_NEAR(h, std::log(2.0), 1e-12);
}

TEST(LowerBound, TightAfterOptimalUpdate) {
  NetworkConfig cfg;
  cfg.num_rrhs = 4;
  cfg.num_users = 3;
  cfg.candidate_size = 2;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.rng_seed = seed;
    const auto inst = generate_instance(cfg, {});
    const auto cl = full_cluster(inst);
    const auto p = tu::random_precoders(inst, cl, seed * 13);
    for (int k : cl.users) {
      const auto [u, w] = optimal_receiver_and_weight(inst, p, k);
      const double h = h_lower_bound(inst, p, u, w, k);
      const double r = user_rate(inst, p, k);
      EXPECT_NEAR(h, r, 1e-8 * (1.0 + std::abs(r))) << "seed " << seed;
    }
  }
}

TEST(LowerBound, NeverExceedsRateOnRandomDraws) {
  NetworkConfig cfg;
  cfg.num_rrhs = 4;
  cfg.num_users = 3;
  cfg.candidate_size = 2;
  Philox rng(123);
  std::uint64_t ctr = 0;
  int draws = 0;
  for (std::uint64_t seed = 1; draws < 300; ++seed) {
    cfg.rng_seed = seed;
    const auto inst = generate_instance(cfg, {});
    const auto cl = full_cluster(inst);
    for (int rep = 0; rep < 10; ++rep) {
      const auto p = tu::random_precoders(inst, cl, seed * 1000 + rep);
      for (int k : cl.users) {
        const CMat u = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
        const CMat w = tu::random_hpd(cfg.streams, rng, ctr);
        const double h = h_lower_bound(inst, p, u, w, k);
        const double r = user_rate(inst, p, k);
        EXPECT_LE(h, r + 1e-8) << "seed " << seed;
        ++draws;
      }
    }
  }
}

TEST(MseMatrix, HermitianPsdOnRandomInputs) {
  NetworkConfig cfg;
  cfg.num_rrhs = 3;
  cfg.num_users = 3;
  cfg.candidate_size = 2;
  Philox rng(55);
  std::uint64_t ctr = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.rng_seed = seed;
    const auto inst = generate_instance(cfg, {});
    const auto cl = full_cluster(inst);
    const auto p = tu::random_precoders(inst, cl, seed);
    const CMat u = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
    const CMat e = mse_matrix(inst, p, u, 0);
    EXPECT_LT((e - e.adjoint()).norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<CMat> eig(e);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(LowerBound, MidpointConcavityInUAndW) {
  NetworkConfig cfg;
  cfg.num_rrhs = 3;
  cfg.num_users = 2;
  cfg.candidate_size = 2;
  Philox rng(91);
  std::uint64_t ctr = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.rng_seed = seed;
    const auto inst = generate_instance(cfg, {});
    const auto cl = full_cluster(inst);
    const auto p = tu::random_precoders(inst, cl, seed + 500);
    const int k = 0;
    const CMat w = tu::random_hpd(cfg.streams, rng, ctr);
    const CMat ua = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
    const CMat ub = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
    const double lhs_u = h_lower_bound(inst, p, 0.5 * (ua + ub), w, k);
    const double rhs_u = 0.5 * (h_lower_bound(inst, p, ua, w, k) +
                                h_lower_bound(inst, p, ub, w, k));
    EXPECT_GE(lhs_u, rhs_u - 1e-9);

    const CMat u = tu::random_cmat(rng, 0, ctr, cfg.rx_antennas, cfg.streams);
    const CMat wa = tu::random_hpd(cfg.streams, rng, ctr);
    const CMat wb = tu::random_hpd(cfg.streams, rng, ctr);
    const double lhs_w = h_lower_bound(inst, p, u, 0.5 * (wa + wb), k);
    const double rhs_w = 0.5 * (h_lower_bound(inst, p, u, wa, k) +
                                h_lower_bound(inst, p, u, wb, k));
    EXPECT_GE(lhs_w, rhs_w - 1e-9);
  }
}

TEST(HermitianSqrt, SquaresBackAndClampsNegatives) {
  Philox rng(4);
  std::uint64_t ctr = 0;
  const CMat w = tu::random_hpd(3, rng, ctr);
  const CMat r = hermitian_sqrt_psd(w);
  EXPECT_LT((r * r - w).norm(), 1e-12 * (1.0 + w.norm()));
  CMat neg = -CMat::Identity(2, 2);
  EXPECT_LT(hermitian_sqrt_psd(neg).norm(), 1e-12);
}

TEST(LowerBound, RejectsIndefiniteWeight) {
  const auto inst = scalar_instance();
  auto p = PrecoderSet::zeros(full_cluster(inst), 1, 1);
  p.block(0, 0)(0, 0) = 1.0;
  EXPECT_THROW(h_lower_bound(inst, p, CMat::Constant(1, 1, 0.5),
                             CMat::Constant(1, 1, -1.0), 0),
               std::invalid_argument);
}

}  // namespace
