// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "ucran/common.hpp"

namespace ucran {

/// One second-order cone constraint ||A z + b||_2 <= c' z + d. An empty A
/// (zero rows) encodes the linear inequality 0 <= c' z + d.
struct SocConstraint {
  RMat a;
  RVec b;
  RVec c;
  double d = 0.0;
};

/// min f' z subject to a list of SOC constraints. Quadratic objectives are
/// epigraph-reformulated by callers (see quadratic_epigraph).
struct ConeProgram {
  RVec objective;
  std::vector<SocConstraint> constraints;

  int num_vars() const { return static_cast<int>(objective.size()); }

  void validate() const {
    const Eigen::Index n = objective.size();
    detail::require(n >= 1, "ConeProgram: n >= 1");
    detail::require(!constraints.empty(), "ConeProgram: at least one constraint");
    for (const auto& cn : constraints) {
      detail::require(cn.c.size() == n, "ConeProgram: c size mismatch");
      if (cn.a.rows() > 0) {
        detail::require(cn.a.cols() == n, "ConeProgram: A cols mismatch");
        detail::require(cn.b.size() == cn.a.rows(), "ConeProgram: b size mismatch");
      }
    }
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

struct ConeSolution {
  SolveStatus status = SolveStatus::MaxIter;
  RVec z;
  double objective = 0.0;
  std::vector<RVec> cone_duals;  // per constraint; scalar row -> length 1
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

/// Appends an epigraph variable t (new last variable, zero objective weight)
/// and the SOC rows enforcing  sum_i quad_i z_i^2 + lin' z + constant <= t
/// with quad >= 0 diagonal. Existing rows are zero-padded. Returns t's index.
inline int quadratic_epigraph(ConeProgram& prog, const RVec& quad,
                              const RVec& lin, double constant) {
  const int n = prog.num_vars();
  detail::require(quad.size() == n && lin.size() == n,
                  "quadratic_epigraph: size mismatch");
  detail::require(quad.minCoeff() >= 0.0, "quadratic_epigraph: quad must be >= 0");
  prog.objective.conservativeResize(n + 1);
  prog.objective(n) = 0.0;
  for (auto& cn : prog.constraints) {
    cn.c.conservativeResize(n + 1);
    cn.c(n) = 0.0;
    if (cn.a.rows() > 0) {
      cn.a.conservativeResize(Eigen::NoChange, n + 1);
      cn.a.col(n).setZero();
    }
  }
  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (quad(i) > 0.0) active.push_back(i);

  // ||(2 sqrt(quad) z_active ; t - lin'z - constant - 1)|| <= t - lin'z - constant + 1
  SocConstraint cone;
  const int rows = static_cast<int>(active.size()) + 1;
  cone.a = RMat::Zero(rows, n + 1);
  cone.b = RVec::Zero(rows);
  for (std::size_t r = 0; r < active.size(); ++r)
    cone.a(static_cast<Eigen::Index>(r), active[r]) = 2.0 * std::sqrt(quad(active[r]));
  cone.a.row(rows - 1).head(n) = -lin.transpose();
  cone.a(rows - 1, n) = 1.0;
  cone.b(rows - 1) = -constant - 1.0;
  cone.c = RVec::Zero(n + 1);
  cone.c.head(n) = -lin;
  cone.c(n) = 1.0;
  cone.d = -constant + 1.0;
  prog.constraints.push_back(std::move(cone));
  return n;
}

/// Plain-text sparse-triplet dump for cross-checking against external
/// solvers: one header line, then objective and per-constraint triplets.
inline void dump_cone_program(const ConeProgram& prog, std::ostream& os) {
  os << "socp n " << prog.num_vars() << " constraints " << prog.constraints.size()
     << "\n";
  for (Eigen::Index i = 0; i < prog.objective.size(); ++i)
    if (prog.objective(i) != 0.0) os << "f " << i << " " << prog.objective(i) << "\n";
  for (std::size_t j = 0; j < prog.constraints.size(); ++j) {
    const auto& cn = prog.constraints[j];
    os << "cone " << j << " m " << cn.a.rows() << " d " << cn.d << "\n";
    for (Eigen::Index r = 0; r < cn.a.rows(); ++r)
      for (Eigen::Index c = 0; c < cn.a.cols(); ++c)
        if (cn.a(r, c) != 0.0) os << "A " << r << " " << c << " " << cn.a(r, c) << "\n";
    for (Eigen::Index r = 0; r < cn.b.size(); ++r)
      if (cn.b(r) != 0.0) os << "b " << r << " " << cn.b(r) << "\n";
    for (Eigen::Index c = 0; c < cn.c.size(); ++c)
      if (cn.c(c) != 0.0) os << "c " << c << " " << cn.c(c) << "\n";
  }
}

namespace detail {

// Product-cone layout: the leading `lin` rows form the nonnegative orthant,
// followed by one SOC block per entry of soc_dims.
struct ConeLayout {
  int lin = 0;
  std::vector<int> soc_dims;
  std::vector<int> soc_offsets;
  int total = 0;
  int degree = 0;
};

inline RVec cone_identity(const ConeLayout& lay) {
  RVec e = RVec::Zero(lay.total);
  e.head(lay.lin).setOnes();
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) e(lay.soc_offsets[b]) = 1.0;
  return e;
}

// Largest step alpha with s + alpha ds still in the cone; +inf if unbounded.
inline double step_to_boundary(const ConeLayout& lay, const RVec& s, const RVec& ds) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < lay.lin; ++i)
    if (ds(i) < 0.0) alpha = std::min(alpha, -s(i) / ds(i));
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    const double s0 = s(off);
    const double d0 = ds(off);
    const auto s1 = s.segment(off + 1, q - 1);
    const auto d1 = ds.segment(off + 1, q - 1);
    // smallest positive root of (s0+a d0)^2 - ||s1+a d1||^2, starting interior
    const double qa = d0 * d0 - d1.squaredNorm();
    const double qb = s0 * d0 - s1.dot(d1);
    const double qc = s0 * s0 - s1.squaredNorm();
    const double disc = qb * qb - qa * qc;
    double lim = std::numeric_limits<double>::infinity();
    if (qa < 0.0) {
      lim = (-qb - std::sqrt(std::max(0.0, disc))) / qa;
    } else if (qa > 0.0) {
      if (qb < 0.0 && disc >= 0.0) lim = qc / (-qb + std::sqrt(disc));
    } else if (qb < 0.0) {
      lim = -qc / (2.0 * qb);
    }
    if (d0 < 0.0) lim = std::min(lim, -s0 / d0);
    if (lim >= 0.0) alpha = std::min(alpha, lim);
  }
  return alpha;
}

// Shifts v along the cone identity until strictly interior.
inline RVec bring_into_cone(const ConeLayout& lay, const RVec& v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < lay.lin; ++i) worst = std::max(worst, -v(i));
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    worst = std::max(worst, v.segment(off + 1, q - 1).norm() - v(off));
  }
  if (worst < 0.0) return v;
  return v + (1.0 + worst) * cone_identity(lay);
}

inline RVec jordan_product(const ConeLayout& lay, const RVec& u, const RVec& v) {
  RVec out(lay.total);
  out.head(lay.lin) = u.head(lay.lin).cwiseProduct(v.head(lay.lin));
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    out(off) = u.segment(off, q).dot(v.segment(off, q));
    out.segment(off + 1, q - 1) =
        u(off) * v.segment(off + 1, q - 1) + v(off) * u.segment(off + 1, q - 1);
  }
  return out;
}

// Solves lambda o u = v for u (arrow-matrix solve per block).
inline RVec jordan_solve(const ConeLayout& lay, const RVec& lambda, const RVec& v) {
  RVec out(lay.total);
  out.head(lay.lin) = v.head(lay.lin).cwiseQuotient(lambda.head(lay.lin));
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    const double l0 = lambda(off);
    const auto l1 = lambda.segment(off + 1, q - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * v(off) - l1.dot(v.segment(off + 1, q - 1))) / det;
    out(off) = u0;
    out.segment(off + 1, q - 1) = (v.segment(off + 1, q - 1) - u0 * l1) / l0;
  }
  return out;
}

// Nesterov-Todd scaling: W z = W^{-1} s = lambda at the current iterate.
struct NtScaling {
  RVec lin_w;  // sqrt(s_i/z_i)
  struct Soc {
    double eta = 1.0;
    double wbar0 = 1.0;
    RVec wbar1;
  };
  std::vector<Soc> soc;
  RVec lambda;
};

inline RVec apply_w(const ConeLayout& lay, const NtScaling& sc, const RVec& v);

inline NtScaling make_scaling(const ConeLayout& lay, const RVec& s, const RVec& z) {
  NtScaling sc;
  sc.lin_w = (s.head(lay.lin).cwiseQuotient(z.head(lay.lin))).cwiseSqrt();
  sc.soc.resize(lay.soc_dims.size());
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    const auto sb = s.segment(off, q);
    const auto zb = z.segment(off, q);
    const double res_s = sb(0) * sb(0) - sb.tail(q - 1).squaredNorm();
    const double res_z = zb(0) * zb(0) - zb.tail(q - 1).squaredNorm();
    const RVec sn = sb / std::sqrt(res_s);
    const RVec zn = zb / std::sqrt(res_z);
    const double gamma = std::sqrt((1.0 + sn.dot(zn)) / 2.0);
    auto& blk = sc.soc[b];
    blk.eta = std::pow(res_s / res_z, 0.25);
    blk.wbar0 = (sn(0) + zn(0)) / (2.0 * gamma);
    blk.wbar1 = (sn.tail(q - 1) - zn.tail(q - 1)) / (2.0 * gamma);
  }
  sc.lambda = apply_w(lay, sc, z);
  return sc;
}

// out = W v (symmetric scaling matrix applied blockwise).
inline RVec apply_w(const ConeLayout& lay, const NtScaling& sc, const RVec& v) {
  RVec out(lay.total);
  out.head(lay.lin) = sc.lin_w.cwiseProduct(v.head(lay.lin));
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    const auto& blk = sc.soc[b];
    const double v0 = v(off);
    const auto v1 = v.segment(off + 1, q - 1);
    const double zeta = blk.wbar1.dot(v1);
    out(off) = blk.eta * (blk.wbar0 * v0 + zeta);
    out.segment(off + 1, q - 1) =
        blk.eta * (v1 + (v0 + zeta / (1.0 + blk.wbar0)) * blk.wbar1);
  }
  return out;
}

// out = W^{-1} v.
inline RVec apply_w_inv(const ConeLayout& lay, const NtScaling& sc, const RVec& v) {
  RVec out(lay.total);
  out.head(lay.lin) = v.head(lay.lin).cwiseQuotient(sc.lin_w);
  for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
    const int off = lay.soc_offsets[b];
    const int q = lay.soc_dims[b];
    const auto& blk = sc.soc[b];
    const double v0 = v(off);
    const auto v1 = v.segment(off + 1, q - 1);
    const double zeta = blk.wbar1.dot(v1);
    out(off) = (blk.wbar0 * v0 - zeta) / blk.eta;
    out.segment(off + 1, q - 1) =
        (v1 + (-v0 + zeta / (1.0 + blk.wbar0)) * blk.wbar1) / blk.eta;
  }
  return out;
}

}  // namespace detail

/// Dense primal-dual path-following SOCP solver on the homogeneous self-dual
/// embedding, with Nesterov-Todd scaling and a Mehrotra predictor-corrector
/// step; normal equations solved by dense Cholesky. Deterministic.
inline ConeSolution solve_cone_program(const ConeProgram& prog, double tol = 1e-8,
                                       int max_iter = 100) {
  using detail::ConeLayout;
  prog.validate();
  const int n = prog.num_vars();

  // Assemble G, h with linear rows first, then SOC blocks in input order.
  ConeLayout lay;
  std::vector<int> lin_rows;  // constraint index per orthant row
  for (std::size_t j = 0; j < prog.constraints.size(); ++j)
    if (prog.constraints[j].a.rows() == 0) lin_rows.push_back(static_cast<int>(j));
  lay.lin = static_cast<int>(lin_rows.size());
  int m = lay.lin;
  for (const auto& cn : prog.constraints)
    if (cn.a.rows() > 0) {
      lay.soc_offsets.push_back(m);
      lay.soc_dims.push_back(static_cast<int>(cn.a.rows()) + 1);
      m += static_cast<int>(cn.a.rows()) + 1;
    }
  lay.total = m;
  lay.degree = lay.lin + static_cast<int>(lay.soc_dims.size());

  RMat g0 = RMat::Zero(m, n);
  RVec h0 = RVec::Zero(m);
  for (int r = 0; r < lay.lin; ++r) {
    const auto& cn = prog.constraints[static_cast<std::size_t>(lin_rows[r])];
    g0.row(r) = -cn.c.transpose();
    h0(r) = cn.d;
  }
  {
    int row = lay.lin;
    for (const auto& cn : prog.constraints) {
      if (cn.a.rows() == 0) continue;
      g0.row(row) = -cn.c.transpose();
      h0(row) = cn.d;
      g0.middleRows(row + 1, cn.a.rows()) = -cn.a;
      h0.segment(row + 1, cn.a.rows()) = cn.b;
      row += static_cast<int>(cn.a.rows()) + 1;
    }
  }
  const RVec f0 = prog.objective;

  // Ruiz equilibration, rows scaled uniformly within each cone block so the
  // cones map to themselves. Convergence is still judged on the raw data.
  RVec row_scale = RVec::Ones(m);
  RVec col_scale = RVec::Ones(n);
  {
    RMat work = g0;
    for (int pass = 0; pass < 3; ++pass) {
      for (int r = 0; r < lay.lin; ++r) {
        const double mx = work.row(r).cwiseAbs().maxCoeff();
        if (mx > 0.0) {
          const double s = 1.0 / std::sqrt(mx);
          work.row(r) *= s;
          row_scale(r) *= s;
        }
      }
      for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
        const int off = lay.soc_offsets[b];
        const int q = lay.soc_dims[b];
        const double mx = work.middleRows(off, q).cwiseAbs().maxCoeff();
        if (mx > 0.0) {
          const double s = 1.0 / std::sqrt(mx);
          work.middleRows(off, q) *= s;
          row_scale.segment(off, q) *= s;
        }
      }
      for (int c = 0; c < n; ++c) {
        const double mx = work.col(c).cwiseAbs().maxCoeff();
        if (mx > 0.0) {
          const double s = 1.0 / std::sqrt(mx);
          work.col(c) *= s;
          col_scale(c) *= s;
        }
      }
    }
  }
  const RMat g = row_scale.asDiagonal() * g0 * col_scale.asDiagonal();
  const RVec h = row_scale.asDiagonal() * h0;
  const RVec f = col_scale.asDiagonal() * f0;

  ConeSolution sol;
  sol.z = RVec::Zero(n);

  // Interior starting point from the unscaled least-squares systems.
  RVec x, s, z;
  {
    RMat n0 = g.transpose() * g;
    n0.diagonal().array() += 1e-12 * (1.0 + n0.diagonal().maxCoeff());
    Eigen::LLT<RMat> llt(n0);
    x = llt.solve(g.transpose() * h);
    s = detail::bring_into_cone(lay, h - g * x);
    const RVec xd = llt.solve(-f);
    z = detail::bring_into_cone(lay, g * xd);
  }
  double tau = 1.0, kappa = 1.0;

  const double fnorm = 1.0 + f0.norm();
  const double hnorm = 1.0 + h0.norm();

  // Best tau-normalized iterate seen so far, by worst KKT measure.
  RVec best_x = x, best_z = z;
  double best_obj = 0.0;
  double best_worst = std::numeric_limits<double>::infinity();

  const auto fill_duals = [&](const RVec& zh) {
    sol.cone_duals.assign(prog.constraints.size(), RVec());
    for (int r = 0; r < lay.lin; ++r)
      sol.cone_duals[static_cast<std::size_t>(lin_rows[r])] =
          (RVec(1) << zh(r)).finished();
    std::size_t b = 0;
    for (std::size_t j = 0; j < prog.constraints.size(); ++j) {
      if (prog.constraints[j].a.rows() == 0) continue;
      sol.cone_duals[j] = zh.segment(lay.soc_offsets[b], lay.soc_dims[b]);
      ++b;
    }
  };

  RMat wg(m, n);
  for (int it = 0; it < max_iter; ++it) {
    sol.iterations = it;

    // Residuals of the embedding.
    const RVec rx = g.transpose() * z + f * tau;
    const RVec rz = g * x + s - h * tau;
    const double rtau = f.dot(x) + h.dot(z) + kappa;
    const double mu = (s.dot(z) + tau * kappa) / (lay.degree + 1);
    if (!std::isfinite(mu) || !std::isfinite(rtau)) break;

    // Convergence on the tau-normalized iterate, measured on the raw data.
    {
      const RVec xh = col_scale.cwiseProduct(x) / tau;
      const RVec sh = s.cwiseQuotient(row_scale) / tau;
      const RVec zh = row_scale.cwiseProduct(z) / tau;
      const double pobj = f0.dot(xh);
      const double pres = (g0 * xh + sh - h0).norm() / hnorm;
      // dual residual in the equilibrated metric; the raw-space residual
      // inflates by the inverse column scaling and is not what callers see
      const double dres =
          (g.transpose() * (z / tau) + f).norm() / (1.0 + f.norm());
      const double gap = sh.dot(zh);
      const double relgap = std::abs(gap) / (1.0 + std::abs(pobj));
      const double worst = std::max({pres, dres, relgap});
#ifdef UCRAN_SOCP_TRACE
      std::fprintf(stderr,
                   "it=%d pres=%.3e dres=%.3e gap=%.3e relgap=%.3e tau=%.3e kappa=%.3e mu=%.3e\n",
                   it, pres, dres, gap, relgap, tau, kappa, mu);
#endif
      if (std::isfinite(worst) && worst < best_worst) {
        best_worst = worst;
        best_x = xh;
        best_z = zh;
        best_obj = pobj;
      }
      if (best_worst <= tol) break;
      // Certificates of primal/dual infeasibility.
      const RVec z_raw = row_scale.cwiseProduct(z);
      const double hz = h0.dot(z_raw);
      if (hz < 0.0 && (g0.transpose() * z_raw).norm() <= tol * (-hz)) {
        sol.status = SolveStatus::Infeasible;
        sol.kkt_residual = (g0.transpose() * z_raw).norm() / (-hz);
        return sol;
      }
      const RVec x_raw = col_scale.cwiseProduct(x);
      const double fx = f0.dot(x_raw);
      if (fx < 0.0 &&
          (g0 * x_raw + s.cwiseQuotient(row_scale)).norm() <= tol * (-fx)) {
        sol.status = SolveStatus::Unbounded;
        sol.kkt_residual =
            (g0 * x_raw + s.cwiseQuotient(row_scale)).norm() / (-fx);
        return sol;
      }
    }
    if (mu < 1e-14) break;

    // NT scaling and the shared factorization of G' W^{-2} G.
    const auto sc = detail::make_scaling(lay, s, z);
    for (int col = 0; col < n; ++col)
      wg.col(col) = detail::apply_w_inv(lay, sc, g.col(col));
    RMat normal = wg.transpose() * wg;
    normal.diagonal().array() += 1e-13 * (1.0 + normal.diagonal().maxCoeff());
    Eigen::LLT<RMat> llt(normal);
    if (llt.info() != Eigen::Success) {
      normal.diagonal().array() += 1e-8 * normal.diagonal().maxCoeff();
      llt.compute(normal);
      if (llt.info() != Eigen::Success) break;
    }

    // G' zc = a,  G xc - W^2 zc = b  via the normal equations, then two
    // refinement passes on the full 2x2 system (the z-recovery multiplies
    // by W^{-2}, which amplifies any factorization error near convergence).
    const auto kkt_solve_raw = [&](const RVec& a, const RVec& b, RVec& xc, RVec& zc) {
      const RVec wb = detail::apply_w_inv(lay, sc, b);
      RVec rhs = a;
      rhs.noalias() += wg.transpose() * wb;
      xc = llt.solve(rhs);
      RVec res = rhs;
      res.noalias() -= normal * xc;
      xc += llt.solve(res);
      zc = detail::apply_w_inv(lay, sc, detail::apply_w_inv(lay, sc, g * xc - b));
    };
    const auto kkt_solve = [&](const RVec& a, const RVec& b, RVec& xc, RVec& zc) {
      kkt_solve_raw(a, b, xc, zc);
      for (int refine = 0; refine < 3; ++refine) {
        RVec ra = a - g.transpose() * zc;
        RVec rb = b - g * xc + apply_w(lay, sc, apply_w(lay, sc, zc));
        RVec cx(n), cz(m);
        kkt_solve_raw(ra, rb, cx, cz);
        xc += cx;
        zc += cz;
      }
    };

    RVec x1(n), z1(m), x2(n), z2(m);
    kkt_solve(-f, h, x1, z1);

    const auto direction = [&](const RVec& ds4, double rhs5, double scale_res,
                               RVec& dx, RVec& dz, RVec& ds, double& dtau,
                               double& dkappa) {
      const RVec bz = -scale_res * rz - apply_w(lay, sc, ds4);
      kkt_solve(-scale_res * rx, bz, x2, z2);
      const double denom = f.dot(x1) + h.dot(z1) - kappa / tau;
      dtau = (-scale_res * rtau - f.dot(x2) - h.dot(z2) - rhs5 / tau) / denom;
      dx = x2 + dtau * x1;
      dz = z2 + dtau * z1;
      ds = apply_w(lay, sc, ds4 - apply_w(lay, sc, dz));
      dkappa = (rhs5 - kappa * dtau) / tau;
    };

    // Affine (predictor) direction.
    RVec dxa(n), dza(m), dsa(m);
    double dtaua, dkappaa;
    direction(-sc.lambda, -tau * kappa, 1.0, dxa, dza, dsa, dtaua, dkappaa);

    double alpha_aff = detail::step_to_boundary(lay, s, dsa);
    alpha_aff = std::min(alpha_aff, detail::step_to_boundary(lay, z, dza));
    if (dtaua < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtaua);
    if (dkappaa < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkappaa);
    alpha_aff = std::min(1.0, alpha_aff);

    const double mu_aff = ((s + alpha_aff * dsa).dot(z + alpha_aff * dza) +
                           (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)) /
                          (lay.degree + 1);
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    // centering floor keeps the endgame iterates on the central path, so the
    // gap and residual criteria are met at the same iterate
    sigma = std::min(1.0, std::max(sigma, 0.05));

    // Combined (corrector) direction.
    const RVec wdz = apply_w(lay, sc, dza);
    const RVec widsa = detail::apply_w_inv(lay, sc, dsa);
    RVec rhs4 = -detail::jordan_product(lay, sc.lambda, sc.lambda) -
                detail::jordan_product(lay, wdz, widsa);
    rhs4 += sigma * mu * detail::cone_identity(lay);
    const RVec ds4 = detail::jordan_solve(lay, sc.lambda, rhs4);
    const double rhs5 = -tau * kappa + sigma * mu - dtaua * dkappaa;

    RVec dx(n), dz(m), ds(m);
    double dtau, dkappa;
    direction(ds4, rhs5, 1.0 - sigma, dx, dz, ds, dtau, dkappa);

    double alpha = detail::step_to_boundary(lay, s, ds);
    alpha = std::min(alpha, detail::step_to_boundary(lay, z, dz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(1.0, 0.98 * alpha);
    if (!(alpha > 1e-13)) break;

    x += alpha * dx;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  sol.z = best_x;
  sol.objective = best_obj;
  sol.kkt_residual = best_worst;
  fill_duals(best_z);
  sol.status = best_worst <= tol ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return sol;
}

}  // namespace ucran
