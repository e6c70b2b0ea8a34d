#include "ddfrag/stabilization.hpp"

#include <algorithm>
#include <stdexcept>

namespace ddfrag {

using sdp::AffineExpr;

const char* to_string(CertificateSource s) {
  switch (s) {
    case CertificateSource::FullLMI:
      return "FullLMI";
    case CertificateSource::ReducedLMI:
      return "ReducedLMI";
    case CertificateSource::UserSupplied:
      return "UserSupplied";
  }
  return "Unknown";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Informative:
      return "informative";
    case Verdict::NotInformative:
      return "not_informative";
    case Verdict::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

Mat CertificateMatrices::schur() const {
  return symmetrize(M11() - M12() * M22().ldlt().solve(M12().transpose()));
}

Mat CertificateMatrices::center() const {
  return -M22().ldlt().solve(M12().transpose()).transpose();
}

CertificateMatrices cert_matrices(const InformativityMatrix& N, const Mat& P,
                                  double alpha) {
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  if (P.rows() != n || P.cols() != n) {
    throw std::invalid_argument("cert_matrices: P must be n x n");
  }
  CertificateMatrices cm;
  cm.n = n;
  cm.m = m;
  cm.Gamma = -alpha * N.N;
  cm.Gamma.topLeftCorner(n, n) += P;
  cm.Gamma = symmetrize(cm.Gamma);

  cm.Theta = -alpha * N.N.topLeftCorner(2 * n, 2 * n);
  cm.Theta.topLeftCorner(n, n) += P;
  cm.Theta.bottomRightCorner(n, n) -= P;
  cm.Theta = symmetrize(cm.Theta);

  Mat left = Mat::Zero(m + n, 2 * n);
  left.topRows(m) = alpha * N.N.bottomLeftCorner(m, 2 * n);
  left.bottomRightCorner(n, n) = P;
  Mat base = Mat::Zero(m + n, m + n);
  base.topLeftCorner(m, m) = -alpha * N.block(3, 3);
  base.bottomRightCorner(n, n) = -P;
  cm.M = symmetrize(base - left * pinv(cm.Theta) * left.transpose());
  return cm;
}

namespace {

void require_shape(const InformativityMatrix& N) {
  if (N.n < 1) throw std::invalid_argument("state dimension must be >= 1");
  if (N.m < 1) throw std::invalid_argument("input dimension must be >= 1");
  if (!has_bounded_sigma(N)) {
    throw std::invalid_argument(
        "informativity check requires [X_-; U_-] to have full row rank");
  }
}

InformativityResult finish(const sdp::StrictResult& r, double eps_strict) {
  InformativityResult out;
  out.solver_status = r.solution.status;
  out.margin = r.margin;
  if (r.solution.status == sdp::Status::NumericalFailure) {
    out.verdict = Verdict::NumericalFailure;
  } else {
    out.verdict = r.solution.status == sdp::Status::Optimal &&
                          r.margin > eps_strict
                      ? Verdict::Informative
                      : Verdict::NotInformative;
  }
  return out;
}

}  // namespace

AffineExpr centered_data_lmi(const CenteredN& c, const AffineExpr& F,
                             const AffineExpr& scale) {
  const Eigen::Index extra = F.rows() - c.Tinv.rows();
  if (extra < 0 || F.cols() != F.rows()) {
    throw std::invalid_argument("centered_data_lmi: F is too small");
  }
  const Mat S = blkdiag(c.Tinv, Mat::Identity(extra, extra));
  return S.transpose() * F * S -
         scalar_times(scale, blkdiag(c.Nhat, Mat::Zero(extra, extra)));
}

InformativityResult check_informativity_full(const InformativityMatrix& N,
                                             double eps_strict) {
  require_shape(N);
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  const CenteredN c = center_N(N);

  sdp::Problem prob;
  const AffineExpr P = prob.add_sym_var("P", n);
  const AffineExpr alpha = prob.add_scalar_var("alpha", 0.0);
  const AffineExpr L = prob.add_rect_var("L", m, n);
  const auto Z = [](Eigen::Index r, Eigen::Index c) {
    return AffineExpr::zero(r, c);
  };
  const AffineExpr F =
      AffineExpr::blocks({{P, Z(n, n), Z(n, m), Z(n, n)},
                          {Z(n, n), -P, -L.transpose(), Z(n, n)},
                          {Z(m, n), -L, Z(m, m), L},
                          {Z(n, n), Z(n, n), L.transpose(), P}});
  const auto main =
      prob.add_psd_constraint(centered_data_lmi(c, F, alpha), "informativity");
  prob.add_psd_constraint(AffineExpr::identity(n) - P, "P <= I");

  const sdp::StrictResult r = sdp::strict_feasible(prob, {main}, eps_strict);
  InformativityResult out = finish(r, eps_strict);
  if (out.verdict != Verdict::Informative) return out;

  const Mat Pv = symmetrize(r.solution.value("P"));
  const double top = max_eig(Pv);
  GainCertificate& cert = out.certificate;
  cert.P = Pv / top;
  cert.alpha = r.solution.scalar("alpha") / top;
  cert.K = r.solution.value("L") * Pv.inverse();
  cert.margin = r.margin / top;
  cert.source = CertificateSource::FullLMI;
  out.margin = cert.margin;
  return out;
}

InformativityResult check_informativity_reduced(const InformativityMatrix& N,
                                                double eps_strict) {
  require_shape(N);
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  // Gamma and Theta after exact congruences: Gamma by the centering of N,
  // Theta by [[I, 0], [G, W]] with G = -N22^{-1} N21, W = (-N22)^{-1/2}.
  const CenteredN c = center_N(N);
  const Mat defect = c.Nhat.topLeftCorner(n, n);
  const Mat N22 = N.block(2, 2);
  const Mat G = -N22.ldlt().solve(N.block(2, 1));
  const Mat W = pd_inv_sqrt(symmetrize(-N22));
  const Mat theta_schur =
      symmetrize(N.block(1, 1) + N.block(1, 2) * G);

  sdp::Problem prob;
  const AffineExpr P = prob.add_sym_var("P", n);
  const AffineExpr alpha = prob.add_scalar_var("alpha", 0.0);
  const auto Z = [](Eigen::Index r, Eigen::Index c) {
    return AffineExpr::zero(r, c);
  };
  const AffineExpr gamma = AffineExpr::blocks(
      {{P - scalar_times(alpha, defect), Z(n, n + m)},
       {Z(n + m, n), scalar_times(alpha, Mat::Identity(n + m, n + m))}});
  const AffineExpr cross = -(G.transpose() * P * W);
  const AffineExpr theta = AffineExpr::blocks(
      {{P - G.transpose() * P * G - scalar_times(alpha, theta_schur), cross},
       {cross.transpose(),
        scalar_times(alpha, Mat::Identity(n, n)) - W * P * W}});
  const auto g = prob.add_psd_constraint(gamma, "Gamma");
  const auto t = prob.add_psd_constraint(theta, "Theta");
  const auto p = prob.add_psd_constraint(P, "P > 0");
  prob.add_psd_constraint(AffineExpr::identity(n) - P, "P <= I");

  const sdp::StrictResult r = sdp::strict_feasible(prob, {g, t, p}, eps_strict);
  InformativityResult out = finish(r, eps_strict);
  if (out.verdict != Verdict::Informative) return out;

  const Mat Pv = symmetrize(r.solution.value("P"));
  const double top = max_eig(Pv);
  GainCertificate& cert = out.certificate;
  cert.P = Pv / top;
  cert.alpha = r.solution.scalar("alpha") / top;
  cert.K = cert_matrices(N, cert.P, cert.alpha).center();
  cert.margin = r.margin / top;
  cert.source = CertificateSource::ReducedLMI;
  out.margin = cert.margin;
  return out;
}

bool certificate_valid(const CertificateMatrices& cm, double margin) {
  return min_eig(cm.Gamma) > margin && min_eig(cm.Theta) > margin;
}

namespace {

CertificateMatrices checked_matrices(const InformativityMatrix& N,
                                     const Mat& P, double alpha,
                                     const char* who) {
  if (alpha < 0.0) {
    throw std::invalid_argument(std::string(who) + ": alpha must be >= 0");
  }
  CertificateMatrices cm = cert_matrices(N, P, alpha);
  if (!certificate_valid(cm)) {
    throw std::invalid_argument(std::string(who) +
                                ": (P, alpha) does not satisfy Gamma > 0 "
                                "and Theta > 0");
  }
  return cm;
}

Mat gain_from_coordinates(const CertificateMatrices& cm, const Mat& S) {
  const Mat left = psd_sqrt(cm.schur(), 1e-8);
  const Mat right = pd_inv_sqrt(symmetrize(-cm.M22()));
  return cm.center() + left * S * right;
}

}  // namespace

bool gain_in_set(const InformativityMatrix& N, const Mat& P, double alpha,
                 const Mat& K, double margin) {
  const CertificateMatrices cm = checked_matrices(N, P, alpha, "gain_in_set");
  if (K.rows() != N.m || K.cols() != N.n) {
    throw std::invalid_argument("gain_in_set: K must be m x n");
  }
  const Mat v = qmi_value(cm.M, {N.m, N.n}, K.transpose());
  return min_eig(symmetrize(v)) > margin;
}

Mat parameterize_gains(const InformativityMatrix& N, const Mat& P, double alpha,
                       const Mat& S) {
  const CertificateMatrices cm =
      checked_matrices(N, P, alpha, "parameterize_gains");
  if (S.rows() != N.m || S.cols() != N.n) {
    throw std::invalid_argument("parameterize_gains: S must be m x n");
  }
  if (spectral_norm(S) >= 1.0) {
    throw std::invalid_argument("parameterize_gains: requires ||S|| < 1");
  }
  return gain_from_coordinates(cm, S);
}

GainCoordinates gain_coordinates(const InformativityMatrix& N, const Mat& P,
                                 double alpha, const Mat& K) {
  const CertificateMatrices cm =
      checked_matrices(N, P, alpha, "gain_coordinates");
  const Mat left = psd_sqrt(cm.schur(), 1e-8);
  const Mat right = psd_sqrt(symmetrize(-cm.M22()));
  GainCoordinates out;
  out.S = pinv(left) * (K - cm.center()) * right;
  const Mat back = gain_from_coordinates(cm, out.S);
  out.residual = (back - K).norm() / std::max(1.0, K.norm());
  return out;
}

}  // namespace ddfrag
