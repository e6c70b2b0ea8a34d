#include "ddfrag/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddfrag {
namespace {

double magnitude(const Mat& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

void require_square(const Mat& M, const char* what) {
  if (M.rows() != M.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
}

void require_partition(const Mat& Pi, SymPartition part, const char* what) {
  require_square(Pi, what);
  if (part.q < 1 || part.r < 1 || part.q + part.r != Pi.rows()) {
    throw std::invalid_argument(std::string(what) +
                                ": partition does not match matrix size");
  }
}

Eigen::SelfAdjointEigenSolver<Mat> sym_eig(const Mat& M, const char* what) {
  require_square(M, what);
  const double scale = std::max(1.0, magnitude(M));
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix is not symmetric");
  }
  return Eigen::SelfAdjointEigenSolver<Mat>(symmetrize(M));
}

}  // namespace

Mat symmetrize(const Mat& M) {
  require_square(M, "symmetrize");
  return 0.5 * (M + M.transpose());
}

Mat pinv(const Mat& M, double tol) {
  if (M.size() == 0) return Mat(M.cols(), M.rows());
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = tol * (s.size() > 0 ? s(0) : 0.0);
  Vec inv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Mat gen_schur_complement(const Mat& Pi, SymPartition part, double tol) {
  require_partition(Pi, part, "gen_schur_complement");
  const Mat S = symmetrize(Pi);
  const auto q = part.q;
  const auto r = part.r;
  const Mat P12 = S.topRightCorner(q, r);
  return symmetrize(S.topLeftCorner(q, q) -
                    P12 * pinv(S.bottomRightCorner(r, r), tol) *
                        P12.transpose());
}

bool in_pi_class(const Mat& Pi, SymPartition part, double tol) {
  require_partition(Pi, part, "in_pi_class");
  const Mat S = symmetrize(Pi);
  const double scale = std::max(1.0, magnitude(S));
  const Mat P22 = S.bottomRightCorner(part.r, part.r);
  if (max_eig(P22) > tol * scale) return false;
  if (min_eig(gen_schur_complement(S, part)) < -tol * scale) return false;
  const Mat ker = null_space(P22, std::max(tol, kDefaultPinvTol));
  if (ker.cols() > 0) {
    const Mat P12 = S.topRightCorner(part.q, part.r);
    if ((P12 * ker).norm() > tol * scale) return false;
  }
  return true;
}

Mat qmi_value(const Mat& Pi, SymPartition part, const Mat& Z) {
  require_partition(Pi, part, "qmi_value");
  if (Z.rows() != part.r || Z.cols() != part.q) {
    throw std::invalid_argument("qmi_value: Z must be r x q");
  }
  Mat stacked(part.q + part.r, part.q);
  stacked << Mat::Identity(part.q, part.q), Z;
  return symmetrize(stacked.transpose() * symmetrize(Pi) * stacked);
}

bool qmi_member(const Mat& Pi, SymPartition part, const Mat& Z, bool strict,
                double tol) {
  const double scale = std::max(1.0, spectral_norm(Pi));
  const double lo = min_eig(qmi_value(Pi, part, Z));
  return strict ? lo > tol * scale : lo >= -tol * scale;
}

double spectral_radius(const Mat& A) {
  require_square(A, "spectral_radius");
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_schur(const Mat& A, double tol) {
  return spectral_radius(A) < 1.0 - tol;
}

Mat psd_sqrt(const Mat& M, double tol) {
  const auto es = sym_eig(M, "psd_sqrt");
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Vec d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < -tol * scale) {
      throw std::domain_error("psd_sqrt: matrix is not positive semidefinite");
    }
    d(i) = std::sqrt(std::max(0.0, d(i)));
  }
  return symmetrize(es.eigenvectors() * d.asDiagonal() *
                    es.eigenvectors().transpose());
}

Mat pd_inv_sqrt(const Mat& M) {
  const auto es = sym_eig(M, "pd_inv_sqrt");
  Vec d = es.eigenvalues();
  if (d.size() > 0 && d.minCoeff() <= 0.0) {
    throw std::domain_error("pd_inv_sqrt: matrix is not positive definite");
  }
  d = d.cwiseSqrt().cwiseInverse();
  return symmetrize(es.eigenvectors() * d.asDiagonal() *
                    es.eigenvectors().transpose());
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

Eigen::Index numeric_rank(const Mat& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(M);
  const Vec& s = svd.singularValues();
  const double cutoff = tol * s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) ++rank;
  }
  return rank;
}

double min_eig(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return sym_eig(M, "min_eig").eigenvalues()(0);
}

double max_eig(const Mat& M) {
  if (M.size() == 0) return 0.0;
  const auto es = sym_eig(M, "max_eig");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

Mat null_space(const Mat& M, double tol) {
  const auto cols = M.cols();
  if (M.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double cutoff = tol * (s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) ++rank;
  }
  return svd.matrixV().rightCols(cols - rank);
}

Mat blkdiag(const Mat& A, const Mat& B) {
  Mat out = Mat::Zero(A.rows() + B.rows(), A.cols() + B.cols());
  out.topLeftCorner(A.rows(), A.cols()) = A;
  out.bottomRightCorner(B.rows(), B.cols()) = B;
  return out;
}

}  // namespace ddfrag
