// Infeasible primal-dual path-following method (HKM search direction with a
// Mehrotra predictor-corrector) for
//
//   maximize    b^T y
//   subject to  F_k(y) = F_k0 + sum_i y_i F_ki >= 0,   k = 1..K
//
// and its conic dual
//
//   minimize    sum_k <F_k0, X_k>
//   subject to  sum_k <F_ki, X_k> = -b_i,   X_k >= 0.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "ddfrag/sdp.hpp"

namespace ddfrag::sdp {
namespace {

struct Block {
  Mat F0;
  std::vector<std::pair<int, Mat>> F;
  Eigen::Index size() const { return F0.rows(); }
};

struct Iterate {
  std::vector<Mat> X;
  std::vector<Mat> Z;
  Vec y;
};

struct Direction {
  std::vector<Mat> dX;
  std::vector<Mat> dZ;
  Vec dy;
};

double inner(const Mat& A, const Mat& B) { return A.cwiseProduct(B).sum(); }

std::vector<Block> assemble_blocks(const Problem& p) {
  std::vector<Block> blocks;
  for (const auto& c : p.constraints()) {
    Block b;
    b.F0 = symmetrize(c.expr.constant_part());
    for (const auto& [k, coef] : c.expr.terms()) {
      if (coef.cwiseAbs().maxCoeff() == 0.0) continue;
      b.F.emplace_back(k, symmetrize(coef));
    }
    blocks.push_back(std::move(b));
  }
  for (const auto& [k, lb] : p.lower_bounds()) {
    Block b;
    b.F0 = Mat::Constant(1, 1, -lb);
    b.F.emplace_back(k, Mat::Ones(1, 1));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

Mat evaluate_block(const Block& b, const Vec& y) {
  Mat out = b.F0;
  for (const auto& [k, Fk] : b.F) out += y(k) * Fk;
  return out;
}

// A(X)_i = sum_k <F_ki, X_k>
Vec apply_adjoint(const std::vector<Block>& blocks, const std::vector<Mat>& X,
                  int m) {
  Vec out = Vec::Zero(m);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    for (const auto& [i, Fi] : blocks[k].F) out(i) += inner(Fi, X[k]);
  }
  return out;
}

// Largest alpha in (0, inf] with M + alpha dM >= 0, M positive definite.
double max_step(const Mat& M, const Mat& dM) {
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) return 0.0;
  const Mat Linv = llt.matrixL().solve(Mat::Identity(M.rows(), M.cols()));
  const Mat S = symmetrize(Linv * dM * Linv.transpose());
  const double lo = Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly)
                        .eigenvalues()(0);
  if (lo >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lo;
}

bool is_pd(const Mat& M) {
  Eigen::LLT<Mat> llt(M);
  return llt.info() == Eigen::Success;
}

Mat inverse_pd(const Mat& M) {
  Eigen::LLT<Mat> llt(M);
  return symmetrize(llt.solve(Mat::Identity(M.rows(), M.cols())));
}

class Solver {
 public:
  Solver(const Problem& problem)
      : problem_(problem),
        blocks_(assemble_blocks(problem)),
        m_(problem.num_scalars()),
        b_(problem.objective_vector()),
        opts_(problem.options()) {
    for (const auto& blk : blocks_) total_size_ += blk.size();
    if (std::getenv("DDFRAG_SDP_VERBOSE")) opts_.verbose = true;
  }

  Solution run() {
    Solution sol;
    if (blocks_.empty()) return unconstrained();

    Iterate it = initial_point();
    double f0_norm = 0.0;
    for (const auto& blk : blocks_) f0_norm += blk.F0.squaredNorm();
    f0_norm = std::sqrt(f0_norm);
    const double b_norm = b_.norm();

    int stalled = 0;
    double best_merit = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter <= opts_.max_iterations; ++iter) {
      sol.iterations = iter;
      // Residuals.
      std::vector<Mat> rd(blocks_.size());
      double rd_norm2 = 0.0;
      for (std::size_t k = 0; k < blocks_.size(); ++k) {
        rd[k] = evaluate_block(blocks_[k], it.y) - it.Z[k];
        rd_norm2 += rd[k].squaredNorm();
      }
      const Vec AX = apply_adjoint(blocks_, it.X, m_);
      const Vec rp = -b_ - AX;
      double pobj = 0.0;
      double xz = 0.0;
      for (std::size_t k = 0; k < blocks_.size(); ++k) {
        pobj += inner(blocks_[k].F0, it.X[k]);
        xz += inner(it.X[k], it.Z[k]);
      }
      const double dobj = b_.dot(it.y);
      const double pinf = rp.norm() / (1.0 + b_norm);
      const double dinf = std::sqrt(rd_norm2) / (1.0 + f0_norm);
      const double gap =
          std::max(std::abs(pobj - dobj), xz) /
          (1.0 + std::abs(pobj) + std::abs(dobj));
      sol.primal_residual = pinf;
      sol.dual_residual = dinf;
      sol.gap = gap;
      if (opts_.verbose) {
        std::fprintf(stderr,
                     "it %3d pobj %+.6e dobj %+.6e pinf %.2e dinf %.2e gap "
                     "%.2e mu %.2e\n",
                     iter, pobj, dobj, pinf, dinf, gap,
                     xz / static_cast<double>(total_size_));
      }

      if (pinf <= opts_.feas_tol && dinf <= opts_.feas_tol &&
          gap <= opts_.feas_tol) {
        return finish(it, Status::Optimal, sol);
      }

      // Certificate that no y satisfies F(y) >= 0: X >= 0 with A(X) ~ 0 and
      // <F0, X> < 0.
      if (pobj < 0.0 && AX.norm() <= 1e-8 * (-pobj) * (1.0 + b_norm) &&
          dinf > opts_.feas_tol) {
        return finish(it, Status::Infeasible, sol);
      }
      // Certificate of an unbounded objective: a direction dy with
      // sum dy_i F_i >= 0 and b^T dy > 0.
      if (dobj > 0.0 && it.y.norm() > 1e8 && pinf > opts_.feas_tol) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
          const Mat G = evaluate_block(blocks_[k], it.y) - blocks_[k].F0;
          worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Mat>(
                                      G, Eigen::EigenvaluesOnly)
                                      .eigenvalues()(0));
        }
        if (worst >= -1e-8 * dobj) return finish(it, Status::Unbounded, sol);
      }

      const double merit = std::max({pinf, dinf, gap});
      if (merit < 0.5 * best_merit) {
        best_merit = merit;
        stalled = 0;
      } else if (++stalled > 60) {
        break;
      }
      if (iter == opts_.max_iterations) break;

      if (!step(it, rd, rp, xz / static_cast<double>(total_size_))) break;
    }

    // Out of iterations or stalled: accept a point that is accurate to a
    // looser tolerance, otherwise report the breakdown.
    const double loose = std::sqrt(opts_.feas_tol) * 1e-1;
    if (sol.primal_residual <= loose && sol.dual_residual <= loose &&
        sol.gap <= loose) {
      return finish(it, Status::Optimal, sol);
    }
    return finish(it, Status::NumericalFailure, sol);
  }

 private:
  Solution unconstrained() {
    Solution sol;
    if (b_.size() > 0 && b_.norm() > 0.0) {
      sol.status = Status::Unbounded;
    } else {
      sol.status = Status::Optimal;
    }
    sol.scalars = Vec::Zero(m_);
    sol.objective = problem_.objective_offset();
    if (!problem_.is_maximization()) sol.objective = -sol.objective;
    for (const auto& v : problem_.variables()) {
      sol.values[v.name()] = v.value(sol.scalars);
    }
    return sol;
  }

  Iterate initial_point() const {
    Iterate it;
    double max_f = 0.0;
    double ratio = 0.0;
    for (const auto& blk : blocks_) {
      max_f = std::max(max_f, blk.F0.norm());
      for (const auto& [i, Fi] : blk.F) {
        max_f = std::max(max_f, Fi.norm());
        ratio = std::max(ratio, (1.0 + std::abs(b_(i))) / (1.0 + Fi.norm()));
      }
    }
    for (const auto& blk : blocks_) {
      const double n = static_cast<double>(blk.size());
      const double xi = std::max({10.0, std::sqrt(n), std::sqrt(n) * ratio});
      const double eta = std::max({10.0, std::sqrt(n), max_f});
      it.X.push_back(xi * Mat::Identity(blk.size(), blk.size()));
      it.Z.push_back(eta * Mat::Identity(blk.size(), blk.size()));
    }
    it.y = Vec::Zero(m_);
    return it;
  }

  // One predictor-corrector step. Returns false on numerical breakdown.
  bool step(Iterate& it, const std::vector<Mat>& rd, const Vec& rp,
            double mu) {
    const std::size_t K = blocks_.size();
    std::vector<Mat> Zinv(K);
    for (std::size_t k = 0; k < K; ++k) {
      if (!is_pd(it.Z[k]) || !is_pd(it.X[k])) return false;
      Zinv[k] = inverse_pd(it.Z[k]);
    }

    // Schur complement H_ij = sum_k <F_ki, X_k F_kj Z_k^-1>.
    Mat H = Mat::Zero(m_, m_);
    for (std::size_t k = 0; k < K; ++k) {
      const auto& F = blocks_[k].F;
      std::vector<Mat> W(F.size());
      for (std::size_t a = 0; a < F.size(); ++a) {
        W[a] = it.X[k] * F[a].second * Zinv[k];
      }
      for (std::size_t a = 0; a < F.size(); ++a) {
        for (std::size_t c = a; c < F.size(); ++c) {
          const double h = F[a].second.cwiseProduct(W[c].transpose()).sum();
          H(F[a].first, F[c].first) += h;
          if (a != c) H(F[c].first, F[a].first) += h;
        }
      }
    }
    H = symmetrize(H);
    const double hscale = m_ > 0 ? std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : 1.0;
    Mat Hreg = H;
    for (int i = 0; i < m_; ++i) {
      if (H(i, i) <= 1e-14 * hscale) Hreg(i, i) += 1e-10 * hscale;
    }
    Eigen::LDLT<Mat> ldlt(Hreg);
    if (m_ > 0 && ldlt.info() != Eigen::Success) return false;

    // X rd Z^-1 contribution is shared by both solves.
    Vec base = -rp;
    for (std::size_t k = 0; k < K; ++k) {
      const Mat T = it.X[k] * rd[k] * Zinv[k];
      for (const auto& [i, Fi] : blocks_[k].F) base(i) -= inner(Fi, T);
    }

    auto solve_direction = [&](const std::vector<Mat>& R) {
      Direction d;
      Vec rhs = base;
      for (std::size_t k = 0; k < K; ++k) {
        for (const auto& [i, Fi] : blocks_[k].F) rhs(i) += inner(Fi, R[k]);
      }
      d.dy = m_ > 0 ? Vec(ldlt.solve(rhs)) : Vec();
      d.dX.resize(K);
      d.dZ.resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        Mat dZ = rd[k];
        for (const auto& [i, Fi] : blocks_[k].F) dZ += d.dy(i) * Fi;
        d.dZ[k] = symmetrize(dZ);
        d.dX[k] = symmetrize(R[k] - it.X[k] * d.dZ[k] * Zinv[k]);
      }
      return d;
    };

    auto step_lengths = [&](const Direction& d) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        ap = std::min(ap, max_step(it.X[k], d.dX[k]));
        ad = std::min(ad, max_step(it.Z[k], d.dZ[k]));
      }
      return std::pair{ap, ad};
    };

    // Predictor.
    std::vector<Mat> R(K);
    for (std::size_t k = 0; k < K; ++k) R[k] = -it.X[k];
    const Direction aff = solve_direction(R);
    auto [ap_aff, ad_aff] = step_lengths(aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      mu_aff += inner(it.X[k] + ap_aff * aff.dX[k], it.Z[k] + ad_aff * aff.dZ[k]);
    }
    mu_aff /= static_cast<double>(total_size_);
    double sigma = mu > 0.0 ? std::pow(std::max(0.0, mu_aff) / mu, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < K; ++k) {
      R[k] = sigma * mu * Zinv[k] - it.X[k] - aff.dX[k] * aff.dZ[k] * Zinv[k];
    }
    const Direction d = solve_direction(R);
    auto [ap, ad] = step_lengths(d);
    ap = std::min(1.0, opts_.step_fraction * ap);
    ad = std::min(1.0, opts_.step_fraction * ad);
    if (!(ap > 0.0) || !(ad > 0.0)) return false;

    for (std::size_t k = 0; k < K; ++k) {
      it.X[k] = symmetrize(it.X[k] + ap * d.dX[k]);
      it.Z[k] = symmetrize(it.Z[k] + ad * d.dZ[k]);
    }
    if (m_ > 0) it.y += ad * d.dy;
    return it.y.allFinite();
  }

  Solution finish(const Iterate& it, Status status, Solution sol) const {
    sol.status = status;
    sol.scalars = it.y;
    const double raw = b_.dot(it.y) + problem_.objective_offset();
    sol.objective = problem_.is_maximization() ? raw : -raw;
    for (const auto& v : problem_.variables()) {
      sol.values[v.name()] = v.value(it.y);
    }
    sol.slack.clear();
    for (const auto& c : problem_.constraints()) {
      sol.slack.push_back(min_eig(symmetrize(c.expr.evaluate(it.y))));
    }
    return sol;
  }

  const Problem& problem_;
  std::vector<Block> blocks_;
  int m_;
  Vec b_;
  SolverOptions opts_;
  Eigen::Index total_size_ = 0;
};

}  // namespace

Solution solve(const Problem& problem) { return Solver(problem).run(); }

StrictResult strict_feasible(const Problem& problem,
                             const std::vector<std::size_t>& which,
                             double eps_strict) {
  const auto& cons = problem.constraints();
  std::vector<bool> selected(cons.size(), which.empty());
  for (auto k : which) {
    if (k >= cons.size()) {
      throw std::out_of_range("strict_feasible: constraint index out of range");
    }
    selected[k] = true;
  }

  Problem relaxed;
  for (const auto& v : problem.variables()) {
    switch (v.kind()) {
      case VarKind::Symmetric:
        relaxed.add_sym_var(v.name(), v.rows());
        break;
      case VarKind::Rectangular:
        relaxed.add_rect_var(v.name(), v.rows(), v.cols());
        break;
      case VarKind::Scalar: {
        std::optional<double> lb;
        for (const auto& [k, bound] : problem.lower_bounds()) {
          if (k == v.offset()) lb = bound;
        }
        relaxed.add_scalar_var(v.name(), lb);
        break;
      }
    }
  }
  const Variable t = relaxed.add_scalar_var("__margin");
  for (std::size_t k = 0; k < cons.size(); ++k) {
    AffineExpr e = cons[k].expr;
    if (selected[k]) e -= scalar_times(t, Mat::Identity(e.rows(), e.cols()));
    relaxed.add_psd_constraint(e, cons[k].label);
  }
  relaxed.add_psd_constraint(AffineExpr::identity(1) - AffineExpr(t),
                             "__margin <= 1");
  relaxed.maximize(t);
  relaxed.options() = problem.options();

  StrictResult result;
  result.solution = solve(relaxed);
  result.margin = result.solution.status == Status::Optimal
                      ? result.solution.scalar("__margin")
                      : 0.0;
  result.feasible = result.solution.status == Status::Optimal &&
                    result.margin > eps_strict;
  return result;
}

}  // namespace ddfrag::sdp
