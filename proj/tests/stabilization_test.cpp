#include "ddfrag/stabilization.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace ddfrag {
namespace {

using testing_support::example_data;
using testing_support::random_matrix;

InformativityMatrix example_N() {
  return build_N(to_data_matrices(example_data()),
                 NoiseModel::norm_bound(2, 4, 1.0));
}

// Data with noise bounded by eps from a random system.
InformativityMatrix random_noisy_N(std::mt19937_64& rng, Eigen::Index n,
                                   Eigen::Index m, Eigen::Index T, double eps,
                                   SystemModel* truth = nullptr) {
  const SystemModel sys{random_matrix(rng, n, n), random_matrix(rng, n, m)};
  std::vector<Vec> u;
  std::vector<Vec> w;
  Mat W = random_matrix(rng, n, T);
  W *= 0.9 * eps / spectral_norm(W);
  for (Eigen::Index t = 0; t < T; ++t) {
    u.push_back(random_matrix(rng, m, 1));
    w.push_back(W.col(t));
  }
  if (truth) *truth = sys;
  return build_N(to_data_matrices(simulate(sys, random_matrix(rng, n, 1), u, w)),
                 NoiseModel::norm_bound(n, T, eps));
}

TEST(CertMatrices, AlphaZeroGivesZeroM) {
  const InformativityMatrix N = example_N();
  Mat P(2, 2);
  P << 2, 0.3, 0.3, 1;
  const CertificateMatrices cm = cert_matrices(N, P, 0.0);
  EXPECT_LE((cm.Theta - blkdiag(P, -P)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(cm.M.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CertMatrices, ZeroNNeverCertifies) {
  InformativityMatrix N;
  N.n = 2;
  N.m = 1;
  N.N = Mat::Zero(5, 5);
  const CertificateMatrices cm = cert_matrices(N, Mat::Identity(2, 2), 1.0);
  EXPECT_EQ(cm.Gamma, blkdiag(Mat::Identity(2, 2), Mat::Zero(3, 3)));
  EXPECT_FALSE(certificate_valid(cm));
}

TEST(Informativity, ExampleFullLmi) {
  const InformativityMatrix N = example_N();
  const InformativityResult r = check_informativity_full(N);
  ASSERT_EQ(r.verdict, Verdict::Informative);
  const GainCertificate& c = r.certificate;
  EXPECT_NEAR(max_eig(c.P), 1.0, 1e-12);
  EXPECT_GT(c.alpha, 0.0);
  EXPECT_GT(c.margin, 1e-7);

  const SigmaParam p = sigma_param(N);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 500; ++k) {
    Mat S = random_contraction(rng, 2, 3);
    if (k % 5 == 0) S /= spectral_norm(S);  // boundary members
    const SystemModel s = sample_sigma(p, S);
    const Mat AK = s.A + s.B * c.K;
    EXPECT_TRUE(is_schur(AK));
    EXPECT_GT(min_eig(symmetrize(c.P - AK * c.P * AK.transpose())), 0.0);
  }
}

TEST(Informativity, ExampleReducedLmi) {
  const InformativityMatrix N = example_N();
  const InformativityResult r = check_informativity_reduced(N);
  ASSERT_EQ(r.verdict, Verdict::Informative);
  const GainCertificate& c = r.certificate;
  EXPECT_EQ(c.source, CertificateSource::ReducedLMI);
  const CertificateMatrices cm = cert_matrices(N, c.P, c.alpha);
  EXPECT_TRUE(certificate_valid(cm));
  EXPECT_LT(max_eig(cm.M22()), 0.0);
  EXPECT_LE(max_eig(symmetrize(cm.M22() + c.P)), 1e-9);
  EXPECT_TRUE(gain_in_set(N, c.P, c.alpha, c.K));

  const SigmaParam p = sigma_param(N);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const SystemModel s = sample_sigma(p, random_contraction(rng, 2, 3));
    const Mat AK = s.A + s.B * c.K;
    EXPECT_GT(min_eig(symmetrize(c.P - AK * c.P * AK.transpose())), 0.0);
  }
}

TEST(Informativity, UnstabilizableDataRejected) {
  // x(t+1) = 2 x(t), the input has no effect.
  const SystemModel sys{2.0 * Mat::Identity(2, 2), Mat::Zero(2, 1)};
  std::mt19937_64 rng(6);
  std::vector<Vec> u;
  std::vector<Vec> w;
  for (int t = 0; t < 6; ++t) {
    u.push_back(random_matrix(rng, 1, 1));
    w.push_back(Vec::Zero(2));
  }
  const DataMatrices dm = to_data_matrices(simulate(sys, Vec::Ones(2), u, w));
  Mat x0(2, 1);
  x0 << 1, -1;
  const DataMatrices dm2 =
      to_data_matrices(simulate(sys, x0.col(0), u, w));
  // Two experiments side by side so that X_- has full row rank.
  DataMatrices both{Mat(1, 12), Mat(2, 12), Mat(2, 12)};
  both.Uminus << dm.Uminus, dm2.Uminus;
  both.Xminus << dm.Xminus, dm2.Xminus;
  both.Xplus << dm.Xplus, dm2.Xplus;
  ASSERT_TRUE(is_bounded(both));
  const InformativityMatrix N = build_N(both, NoiseModel::noise_free(2, 12));
  EXPECT_EQ(check_informativity_reduced(N).verdict, Verdict::NotInformative);
  EXPECT_EQ(check_informativity_full(N).verdict, Verdict::NotInformative);
}

TEST(Informativity, RejectsDegenerateShapes) {
  InformativityMatrix N;
  N.n = 2;
  N.m = 0;
  N.N = -Mat::Identity(4, 4);
  EXPECT_THROW(check_informativity_reduced(N), std::invalid_argument);
  N.n = 0;
  N.m = 1;
  N.N = -Mat::Identity(1, 1);
  EXPECT_THROW(check_informativity_full(N), std::invalid_argument);

  std::mt19937_64 rng(2);
  DataMatrices no_input{Mat::Zero(1, 6), random_matrix(rng, 2, 6),
                        random_matrix(rng, 2, 6)};
  EXPECT_THROW(
      check_informativity_full(build_N(no_input, NoiseModel::norm_bound(2, 6, 1))),
      std::invalid_argument);
}

TEST(Informativity, FullAndReducedAgree) {
  std::mt19937_64 rng(404);
  int informative = 0;
  int not_informative = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 2;
    const Eigen::Index m = 1 + (trial / 2) % 2;
    const Eigen::Index T = n + m + 2 + trial % 3;
    // Noise levels straddle the informativity threshold.
    const double eps = std::pow(10.0, -1.5 + 2.0 * (trial % 5) / 4.0);
    const InformativityMatrix N = random_noisy_N(rng, n, m, T, eps);
    const Verdict full = check_informativity_full(N).verdict;
    const Verdict reduced = check_informativity_reduced(N).verdict;
    ASSERT_NE(full, Verdict::NumericalFailure) << "trial " << trial;
    ASSERT_NE(reduced, Verdict::NumericalFailure) << "trial " << trial;
    EXPECT_EQ(full, reduced) << "trial " << trial;
    (full == Verdict::Informative ? informative : not_informative)++;
  }
  EXPECT_GT(informative, 5);
  EXPECT_GT(not_informative, 5);
}

TEST(GainSet, RejectsThetaOnlyCertificates) {
  const InformativityMatrix N = example_N();
  std::mt19937_64 rng(404);
  std::normal_distribution<double> g(0.0, 1.0);
  bool found = false;
  for (int k = 0; k < 400000 && !found; ++k) {
    const Mat G = random_matrix(rng, 2, 2);
    const Mat P = G * G.transpose() * std::exp(3.0 * g(rng));
    const double alpha = std::exp(3.0 * g(rng));
    const CertificateMatrices cm = cert_matrices(N, P, alpha);
    if (min_eig(cm.Theta) > 0.0 && min_eig(cm.Gamma) <= 0.0) {
      found = true;
      EXPECT_FALSE(certificate_valid(cm));
      EXPECT_THROW(gain_in_set(N, P, alpha, Mat::Zero(1, 2)),
                   std::invalid_argument);
    }
  }
  EXPECT_TRUE(found);
}

TEST(GainSet, CenterLargeAndBoundaryGains) {
  const InformativityMatrix N = example_N();
  const GainCertificate c = check_informativity_reduced(N).certificate;
  const CertificateMatrices cm = cert_matrices(N, c.P, c.alpha);
  const Mat center = parameterize_gains(N, c.P, c.alpha, Mat::Zero(1, 2));
  EXPECT_LE((center - c.K).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(gain_in_set(N, c.P, c.alpha, center));
  EXPECT_FALSE(gain_in_set(N, c.P, c.alpha, 1e6 * Mat::Ones(1, 2)));

  // ||S|| = 1 lies on the boundary: the QMI value is singular.
  Mat S(1, 2);
  S << 0.6, 0.8;
  const Mat left = psd_sqrt(cm.schur());
  const Mat boundary = cm.center() + left * S * pd_inv_sqrt(Mat(-cm.M22()));
  const double scale = spectral_norm(cm.M);
  EXPECT_FALSE(gain_in_set(N, c.P, c.alpha, boundary, 1e-9 * scale));
  EXPECT_THROW(parameterize_gains(N, c.P, c.alpha, S), std::invalid_argument);
}

TEST(GainSet, MonteCarloParameterization) {
  const InformativityMatrix N = example_N();
  const GainCertificate c = check_informativity_reduced(N).certificate;
  const SigmaParam p = sigma_param(N);
  std::mt19937_64 rng(77);
  std::vector<SystemModel> members;
  for (int k = 0; k < 200; ++k) {
    members.push_back(sample_sigma(p, random_contraction(rng, 2, 3)));
  }
  for (int k = 0; k < 500; ++k) {
    const Mat S = random_contraction(rng, 1, 2, 0.99);
    const Mat K = parameterize_gains(N, c.P, c.alpha, S);
    ASSERT_TRUE(gain_in_set(N, c.P, c.alpha, K)) << "sample " << k;
    if (k % 25 == 0) {
      for (const auto& s : members) EXPECT_TRUE(is_schur(s.A + s.B * K));
    }
  }
}

TEST(GainSet, CoordinatesRoundTrip) {
  std::mt19937_64 rng(90);
  int certified = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const InformativityMatrix N = random_noisy_N(rng, 2 + trial % 2, 1 + trial % 2,
                                                 8, 0.05);
    const InformativityResult r = check_informativity_reduced(N);
    if (r.verdict != Verdict::Informative) continue;
    ++certified;
    const GainCertificate& c = r.certificate;
    for (int k = 0; k < 50; ++k) {
      const Mat S = random_contraction(rng, N.m, N.n, 0.95);
      const Mat K = parameterize_gains(N, c.P, c.alpha, S);
      const GainCoordinates back = gain_coordinates(N, c.P, c.alpha, K);
      EXPECT_LE((back.S - S).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE(back.residual, 1e-9);
      // Equivalence: membership iff the recovered S is a strict contraction.
      const Mat K2 = K + 0.5 * random_matrix(rng, N.m, N.n);
      EXPECT_EQ(gain_in_set(N, c.P, c.alpha, K2),
                spectral_norm(gain_coordinates(N, c.P, c.alpha, K2).S) < 1.0);
    }
  }
  EXPECT_GE(certified, 5);
}

}  // namespace
}  // namespace ddfrag
