#pragma once

// Informativity for quadratic stabilization and the set of data-driven
// stabilizing gains K(P, alpha) as an ellipsoid in gain space.

#include <string>

#include "ddfrag/data_model.hpp"
#include "ddfrag/sdp.hpp"

namespace ddfrag {

enum class CertificateSource { FullLMI, ReducedLMI, UserSupplied };

const char* to_string(CertificateSource s);

struct GainCertificate {
  Mat P;  // normalized to largest eigenvalue 1
  double alpha = 0.0;
  Mat K;
  double margin = 0.0;
  CertificateSource source = CertificateSource::UserSupplied;
};

struct CertificateMatrices {
  Mat Gamma;  // (2n+m) x (2n+m)
  Mat Theta;  // 2n x 2n
  Mat M;      // (m+n) x (m+n)
  Eigen::Index n = 0;
  Eigen::Index m = 0;

  Mat M11() const { return M.topLeftCorner(m, m); }
  Mat M12() const { return M.topRightCorner(m, n); }
  Mat M22() const { return M.bottomRightCorner(n, n); }
  /// M11 - M12 M22^{-1} M21
  Mat schur() const;
  /// -M12 M22^{-1}
  Mat center() const;
};

enum class Verdict { Informative, NotInformative, NumericalFailure };

const char* to_string(Verdict v);

struct InformativityResult {
  Verdict verdict = Verdict::NumericalFailure;
  /// Achieved strict margin (<= 0 when not informative).
  double margin = 0.0;
  GainCertificate certificate;  // meaningful only when Informative
  sdp::Status solver_status = sdp::Status::NumericalFailure;
};

/// S^T F S - scale * blkdiag(Nhat, 0) with S = blkdiag(Tinv, I): a congruence
/// of F - scale * blkdiag(N, 0) for any F whose leading block matches N.
sdp::AffineExpr centered_data_lmi(const CenteredN& c, const sdp::AffineExpr& F,
                                  const sdp::AffineExpr& scale);

CertificateMatrices cert_matrices(const InformativityMatrix& N, const Mat& P,
                                  double alpha);

/// The 4-block LMI in (P, alpha, L); K = L P^{-1}.
InformativityResult check_informativity_full(const InformativityMatrix& N,
                                             double eps_strict = 1e-7);

/// Gamma > 0 and Theta > 0 in (P, alpha); K = -M12 M22^{-1}.
InformativityResult check_informativity_reduced(const InformativityMatrix& N,
                                                double eps_strict = 1e-7);

/// Whether Gamma and Theta both exceed margin in their smallest eigenvalue.
bool certificate_valid(const CertificateMatrices& cm, double margin = 0.0);

/// [I; K^T]^T M [I; K^T] > margin I. Throws std::invalid_argument when
/// (P, alpha) does not satisfy Gamma > 0, Theta > 0.
bool gain_in_set(const InformativityMatrix& N, const Mat& P, double alpha,
                 const Mat& K, double margin = 0.0);

/// -M12 M22^{-1} + (M|M22)^{1/2} S (-M22)^{-1/2} for an m x n S, ||S|| < 1.
Mat parameterize_gains(const InformativityMatrix& N, const Mat& P, double alpha,
                       const Mat& S);

struct GainCoordinates {
  Mat S;
  /// Relative mismatch when mapping S back to K (nonzero only when M|M22
  /// is singular and K leaves its range).
  double residual = 0.0;
};

/// Inverse of parameterize_gains.
GainCoordinates gain_coordinates(const InformativityMatrix& N, const Mat& P,
                                 double alpha, const Mat& K);

}  // namespace ddfrag
