#pragma once

// Experiment data for x(t+1) = A x(t) + B u(t) + w(t): noise models, recorded
// trajectories, the stacked data matrices, the informativity matrix N and the
// set of systems consistent with the data.

#include <optional>
#include <random>
#include <vector>

#include "ddfrag/linalg.hpp"

namespace ddfrag {

/// Noise bound W_-^T in Z_T(Phi), stored in its (n, T) block form.
struct NoiseModel {
  Eigen::Index n = 0;
  Eigen::Index T = 0;
  Mat Phi11;
  Mat Phi12;
  Mat Phi22;

  /// ||W_-|| <= eps: Phi11 = eps^2 I, Phi12 = 0, Phi22 = -I.
  static NoiseModel norm_bound(Eigen::Index n, Eigen::Index T, double eps);
  /// W_- = 0: Phi11 = 0, Phi12 = 0, Phi22 = -I.
  static NoiseModel noise_free(Eigen::Index n, Eigen::Index T);
  /// Explicit blocks; validated before returning.
  static NoiseModel general(const Mat& Phi11, const Mat& Phi12,
                            const Mat& Phi22);

  /// Throws std::invalid_argument unless the blocks are consistent, Phi22 is
  /// negative definite and Phi is in the Pi class for partition (n, T).
  void validate() const;

  /// Whether the noise sequence W (n x T, columns w(t)) satisfies the bound.
  bool admits(const Mat& W, double tol = 1e-9) const;
};

struct SystemModel {
  Mat A;
  Mat B;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  /// [A B]
  Mat stacked() const;
  void validate() const;
};

struct TrajectoryData {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index T = 0;
  std::vector<Vec> u;  // T entries of length m
  std::vector<Vec> x;  // T + 1 entries of length n
  std::optional<std::vector<Vec>> w;

  void validate() const;
};

struct DataMatrices {
  Mat Uminus;  // m x T
  Mat Xminus;  // n x T
  Mat Xplus;   // n x T

  Eigen::Index n() const { return Xminus.rows(); }
  Eigen::Index m() const { return Uminus.rows(); }
  Eigen::Index T() const { return Xminus.cols(); }
};

/// N with blocks of size (n, n, m).
struct InformativityMatrix {
  Mat N;
  Eigen::Index n = 0;
  Eigen::Index m = 0;

  Mat block(int i, int j) const;  // 1-based block indices
  /// [[N22, N23], [N32, N33]]
  Mat lower() const { return N.bottomRightCorner(n + m, n + m); }
  /// [N21; N31]
  Mat cross() const { return N.bottomLeftCorner(n + m, n); }
};

/// Sigma_D = { [A B] = [Ahat Bhat] + Lsig S Rsig : S S^T <= I }.
struct SigmaParam {
  Mat Ahat;
  Mat Bhat;
  Mat Lsig;
  Mat Rsig;
};

TrajectoryData simulate(const SystemModel& sys, const Vec& x0,
                        const std::vector<Vec>& u, const std::vector<Vec>& w);

DataMatrices to_data_matrices(const TrajectoryData& d);

/// Noise columns X_+ - A X_- - B U_-.
Mat residual(const DataMatrices& dm, const SystemModel& sys);

InformativityMatrix build_N(const DataMatrices& dm, const NoiseModel& nm);

bool is_consistent(const InformativityMatrix& N, const SystemModel& sys,
                   double tol = 1e-9);

bool is_bounded(const DataMatrices& dm);

/// Whether the lower block of N is negative definite, i.e. Sigma_D is bounded.
bool has_bounded_sigma(const InformativityMatrix& N);

/// N11 - [N21; N31]^T lower^{-1} [N21; N31]; rejects unbounded Sigma_D.
Mat singleton_defect_matrix(const InformativityMatrix& N);
/// Spectral norm of singleton_defect_matrix.
double singleton_defect(const InformativityMatrix& N);
/// ||defect|| ||lower^{-1}|| <= rel_tol * max(1, ||[Ahat Bhat]||^2): the
/// squared radius of Sigma_D relative to its center is negligible. Invariant
/// under scaling of N.
bool is_singleton(const InformativityMatrix& N, double rel_tol = 1e-8);

/// [A B] = -[N21; N31]^T lower^{-1}; rejects unbounded Sigma_D.
SystemModel recover_true(const InformativityMatrix& N);

SigmaParam sigma_param(const InformativityMatrix& N);

/// [Ahat Bhat] + Lsig S Rsig for an n x (n+m) S with ||S|| <= 1 + tol.
SystemModel sample_sigma(const SigmaParam& p, const Mat& S, double tol = 1e-9);

/// Exact congruence N = Tinv^{-T} Nhat Tinv^{-1} with
/// Nhat = blkdiag(defect, -I), Tinv = [[I, 0], [Zhat, (-lower)^{-1/2}]] and
/// Zhat = [Ahat Bhat]^T, so that [I; Z] = Tinv [I; Z']. Rejects unbounded
/// Sigma_D.
struct CenteredN {
  Mat Tinv;
  Mat Nhat;
};

CenteredN center_N(const InformativityMatrix& N);

/// Standard normal entries scaled by factor / max(1, ||G||).
Mat random_contraction(std::mt19937_64& rng, Eigen::Index rows,
                       Eigen::Index cols, double factor = 1.0);

}  // namespace ddfrag
