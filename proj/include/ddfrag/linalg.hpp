#pragma once

// Dense real-matrix primitives shared by the data model, the LMI builders and
// the fragility analysis. Everything here is a pure function of its inputs.

#include <cstddef>

#include <Eigen/Dense>

namespace ddfrag {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Relative singular-value cutoff used wherever a pseudoinverse or a numerical
/// rank appears.
inline constexpr double kDefaultPinvTol = 1e-10;

/// Block sizes of a symmetric (q+r)x(q+r) matrix partitioned as
/// [[Pi11, Pi12], [Pi21, Pi22]] with Pi11 q x q and Pi22 r x r.
struct SymPartition {
  Eigen::Index q = 0;
  Eigen::Index r = 0;
};

/// (M + M^T) / 2. Throws std::invalid_argument for non-square input.
Mat symmetrize(const Mat& M);

/// Moore-Penrose pseudoinverse; singular values below tol * sigma_max are
/// treated as zero. The zero matrix maps to the zero matrix.
Mat pinv(const Mat& M, double tol = kDefaultPinvTol);

/// Pi11 - Pi12 * pinv(Pi22) * Pi21.
Mat gen_schur_complement(const Mat& Pi, SymPartition part,
                         double tol = kDefaultPinvTol);

/// Membership in the class of symmetric matrices with Pi22 <= 0,
/// Pi|Pi22 >= 0 and ker Pi22 contained in ker Pi12, each tested within tol
/// (scaled by the magnitude of Pi).
bool in_pi_class(const Mat& Pi, SymPartition part, double tol = 1e-9);

/// Value of the quadratic form [I; Z]^T Pi [I; Z] (q x q) for Z of size r x q.
Mat qmi_value(const Mat& Pi, SymPartition part, const Mat& Z);

/// Whether [I; Z]^T Pi [I; Z] >= 0 (or > 0 when strict). The strict test
/// requires the smallest eigenvalue to exceed tol * max(1, ||Pi||); the
/// non-strict test allows -tol * max(1, ||Pi||).
bool qmi_member(const Mat& Pi, SymPartition part, const Mat& Z, bool strict,
                double tol = 1e-9);

/// Largest eigenvalue modulus.
double spectral_radius(const Mat& A);

/// True iff every eigenvalue of A satisfies |lambda| < 1 - tol.
bool is_schur(const Mat& A, double tol = 0.0);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-tol * scale, 0) are clamped to zero; anything more negative throws
/// std::domain_error.
Mat psd_sqrt(const Mat& M, double tol = 1e-9);

/// Inverse square root of a symmetric positive definite matrix.
Mat pd_inv_sqrt(const Mat& M);

double spectral_norm(const Mat& M);

/// Number of singular values above tol * sigma_max.
Eigen::Index numeric_rank(const Mat& M, double tol = kDefaultPinvTol);

/// Smallest eigenvalue of a symmetric matrix. Throws std::invalid_argument if
/// M is not symmetric to within 1e-8 relative.
double min_eig(const Mat& M);

/// Largest eigenvalue of a symmetric matrix (same symmetry contract as min_eig).
double max_eig(const Mat& M);

/// Orthonormal basis of ker M (columns), from the SVD with the given relative
/// cutoff. Returns a matrix with zero columns when M has full column rank.
Mat null_space(const Mat& M, double tol = kDefaultPinvTol);

/// Block-diagonal concatenation of two matrices.
Mat blkdiag(const Mat& A, const Mat& B);

}  // namespace ddfrag
