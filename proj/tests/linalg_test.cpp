#include "ddfrag/linalg.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace ddfrag {
namespace {

Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
  return M;
}

// Jury stability criterion on the characteristic polynomial, used as an
// eigensolver-free oracle for is_schur.
bool jury_schur(const Mat& A) {
  if (A.rows() == 2) {
    const double tr = A.trace();
    const double det = A.determinant();
    return std::abs(det) < 1.0 && std::abs(tr) < 1.0 + det;
  }
  // z^3 + a2 z^2 + a1 z + a0
  const double a2 = -A.trace();
  const double a1 = 0.5 * (A.trace() * A.trace() - (A * A).trace());
  const double a0 = -A.determinant();
  const double p1 = 1.0 + a2 + a1 + a0;
  const double pm1 = -1.0 + a2 - a1 + a0;
  return p1 > 0.0 && -pm1 > 0.0 && std::abs(a0) < 1.0 &&
         std::abs(a0 * a0 - 1.0) > std::abs(a0 * a2 - a1);
}

TEST(Pinv, SpecExamples) {
  EXPECT_TRUE(pinv(Mat::Identity(3, 3)).isApprox(Mat::Identity(3, 3)));
  const Mat z = pinv(Mat::Zero(2, 3));
  EXPECT_EQ(z.rows(), 3);
  EXPECT_EQ(z.cols(), 2);
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  Mat expected = Mat::Zero(2, 2);
  expected(0, 0) = 0.5;
  EXPECT_TRUE(pinv(d).isApprox(expected));
}

TEST(Pinv, PenroseIdentitiesOnRankDeficient) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index r = 2 + trial % 5;
    const Eigen::Index c = 3 + trial % 4;
    const Eigen::Index k = 1 + trial % std::min(r, c);
    const Mat M = random_matrix(rng, r, k) * random_matrix(rng, k, c);
    const Mat P = pinv(M);
    const double scale = spectral_norm(M);
    EXPECT_LE((M * P * M - M).cwiseAbs().maxCoeff(), 1e-9 * scale);
    EXPECT_LE((P * M * P - P).cwiseAbs().maxCoeff(),
              1e-9 * spectral_norm(P));
  }
}

TEST(GenSchurComplement, SpecExamples) {
  Mat pi(2, 2);
  pi << 2, 0, 0, -1;
  EXPECT_NEAR(gen_schur_complement(pi, {1, 1})(0, 0), 2.0, 1e-14);
  pi << 2, 1, 1, -1;
  EXPECT_NEAR(gen_schur_complement(pi, {1, 1})(0, 0), 3.0, 1e-14);
  Mat zero_block = Mat::Zero(3, 3);
  zero_block.topLeftCorner(2, 2) << 4, 1, 1, 3;
  EXPECT_TRUE(gen_schur_complement(zero_block, {2, 1})
                  .isApprox(zero_block.topLeftCorner(2, 2)));
}

TEST(GenSchurComplement, MatchesDirectInverseWhenInvertible) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index q = 1 + trial % 4;
    const Eigen::Index r = 1 + (trial / 4) % 4;
    const Mat R = random_matrix(rng, q + r, q + r);
    Mat pi = R + R.transpose();
    pi.bottomRightCorner(r, r) -= (2.0 * static_cast<double>(q + r)) *
                                  Mat::Identity(r, r);
    const Mat direct =
        pi.topLeftCorner(q, q) - pi.topRightCorner(q, r) *
                                     pi.bottomRightCorner(r, r).inverse() *
                                     pi.bottomLeftCorner(r, q);
    const double scale = pi.cwiseAbs().maxCoeff();
    EXPECT_LE((gen_schur_complement(pi, {q, r}) - direct).cwiseAbs().maxCoeff(),
              1e-10 * scale);
  }
}

TEST(PiClass, SpecExamples) {
  EXPECT_TRUE(in_pi_class(blkdiag(Mat::Identity(2, 2), -Mat::Identity(4, 4)),
                          {2, 4}));
  Mat positive = blkdiag(Mat::Identity(1, 1), Mat::Identity(1, 1));
  EXPECT_FALSE(in_pi_class(positive, {1, 1}));
  EXPECT_FALSE(in_pi_class(-Mat::Identity(2, 2), {1, 1}));
}

TEST(PiClass, KernelInclusionViolation) {
  // Pi22 = 0 but Pi12 != 0.
  Mat pi(2, 2);
  pi << 1, 1, 1, 0;
  EXPECT_FALSE(in_pi_class(pi, {1, 1}));
}

TEST(QmiMember, SpecExamples) {
  const Mat pi = blkdiag(Mat::Identity(1, 1), -Mat::Identity(1, 1));
  EXPECT_TRUE(qmi_member(pi, {1, 1}, Mat::Constant(1, 1, 0.5), false));
  EXPECT_NEAR(qmi_value(pi, {1, 1}, Mat::Constant(1, 1, 0.5))(0, 0), 0.75,
              1e-15);
  EXPECT_FALSE(qmi_member(pi, {1, 1}, Mat::Constant(1, 1, 2.0), false));
  Mat psd11 = blkdiag(Mat::Identity(2, 2), -Mat::Identity(3, 3));
  EXPECT_TRUE(qmi_member(psd11, {2, 3}, Mat::Zero(3, 2), false));
}

TEST(IsSchur, SpecExamples) {
  EXPECT_TRUE(is_schur(0.5 * Mat::Identity(2, 2)));
  Mat a(2, 2);
  a << 1, 1, 0, 1;
  EXPECT_FALSE(is_schur(a));
  Mat b(2, 1);
  b << 0.5, 1;
  Mat k(1, 2);
  k << -1.35, -1.7;
  const Mat closed = a + b * k;
  EXPECT_TRUE(is_schur(closed));
  Eigen::EigenSolver<Mat> es(closed);
  const Vec moduli = es.eigenvalues().cwiseAbs();
  EXPECT_NEAR(moduli.minCoeff(), 0.058, 5e-4);
  EXPECT_NEAR(moduli.maxCoeff(), 0.433, 5e-4);
}

TEST(IsSchur, AgreesWithJuryCriterion) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.2, 1.0);
  int stable = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Eigen::Index n = 2 + trial % 2;
    const Mat A = scale(rng) * random_matrix(rng, n, n);
    const double rho = spectral_radius(A);
    if (std::abs(rho - 1.0) < 1e-6) continue;  // too close to call
    EXPECT_EQ(is_schur(A), jury_schur(A)) << A;
    stable += is_schur(A) ? 1 : 0;
  }
  EXPECT_GT(stable, 20);
}

TEST(PsdSqrt, SpecExamples) {
  EXPECT_TRUE(psd_sqrt(Mat::Identity(2, 2)).isApprox(Mat::Identity(2, 2)));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  Mat e = Mat::Zero(2, 2);
  e(0, 0) = 2;
  e(1, 1) = 3;
  EXPECT_TRUE(psd_sqrt(d).isApprox(e));
  EXPECT_EQ(psd_sqrt(Mat::Zero(2, 2)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(psd_sqrt(-Mat::Identity(2, 2)), std::domain_error);
}

TEST(PsdSqrt, SquaresBackForRandomPsd) {
  std::mt19937_64 rng(7);
  for (Eigen::Index n = 1; n <= 20; ++n) {
    const Mat G = random_matrix(rng, n, std::max<Eigen::Index>(1, n / 2));
    const Mat M = G * G.transpose();
    const Mat S = psd_sqrt(M);
    EXPECT_LE((S * S - M).cwiseAbs().maxCoeff(), 1e-9 * spectral_norm(M));
  }
}

TEST(Norms, SpecExamples) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = -5;
  EXPECT_NEAR(spectral_norm(d), 5.0, 1e-14);
  EXPECT_NEAR(min_eig(Mat::Identity(2, 2)), 1.0, 1e-15);
  Mat nonsym(2, 2);
  nonsym << 1, 2, 0, 1;
  EXPECT_THROW(min_eig(nonsym), std::invalid_argument);
}

TEST(Norms, RankOfExampleDataTable) {
  // [X_-^T U_-^T] for the four-sample double-integrator experiment.
  Mat stacked(4, 3);
  stacked << 0, 0, 2,  //
      1, 2, -4,        //
      2, -2, 3,        //
      1.5, 1, 5;
  EXPECT_EQ(numeric_rank(stacked), 3);
  EXPECT_EQ(numeric_rank(stacked.topRows(2)), 2);
}

}  // namespace
}  // namespace ddfrag
