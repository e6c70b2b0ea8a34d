#include "ddfrag/fragility.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ddfrag/stabilization.hpp"

namespace ddfrag {

using sdp::AffineExpr;

const char* to_string(FragilityKind k) {
  switch (k) {
    case FragilityKind::ModelGivenK:
      return "ModelGivenK";
    case FragilityKind::ModelOptimal:
      return "ModelOptimal";
    case FragilityKind::DataGivenK:
      return "DataGivenK";
    case FragilityKind::DataOptimal:
      return "DataOptimal";
  }
  return "Unknown";
}

const char* to_string(FragilityStatus s) {
  switch (s) {
    case FragilityStatus::Certified:
      return "certified";
    case FragilityStatus::NotCertifiable:
      return "not_certifiable";
    case FragilityStatus::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

const char* to_string(DataFragility c) {
  switch (c) {
    case DataFragility::ExtremelyFragile:
      return "ExtremelyFragile";
    case DataFragility::Immune:
      return "Immune";
    case DataFragility::Intermediate:
      return "Intermediate";
  }
  return "Unknown";
}

namespace {

AffineExpr Z(Eigen::Index r, Eigen::Index c) { return AffineExpr::zero(r, c); }

// Whether an LMI in the single scalar gamma > 0 holds with margin eps. The
// smallest eigenvalue is concave in gamma, so a golden-section search over
// log(gamma) finds its maximum.
bool strictly_feasible_in_gamma(const AffineExpr& lmi, double eps) {
  auto margin = [&](double log_g) {
    return min_eig(symmetrize(lmi.evaluate(Vec::Constant(1, std::exp(log_g)))));
  };
  double lo = std::log(1e-9);
  double hi = std::log(1e12);
  const double edge = std::max(margin(lo), margin(hi));
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - phi * (hi - lo);
  double b = lo + phi * (hi - lo);
  double fa = margin(a);
  double fb = margin(b);
  while (hi - lo > 1e-10) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = margin(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = margin(a);
    }
  }
  return std::max({fa, fb, edge}) > eps;
}

Mat gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
  return M;
}

Mat unit_direction(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Mat D = gaussian(rng, r, c);
  return D / spectral_norm(D);
}

void require_gain_shape(const SystemModel& sys, const Mat& K) {
  sys.validate();
  if (K.rows() != sys.m() || K.cols() != sys.n()) {
    throw std::invalid_argument("gain must be m x n");
  }
}

void require_data_shape(const InformativityMatrix& N, const Mat& K) {
  if (N.n < 1 || N.m < 1) {
    throw std::invalid_argument("state and input dimensions must be >= 1");
  }
  if (K.rows() != N.m || K.cols() != N.n) {
    throw std::invalid_argument("gain must be m x n");
  }
  if (!has_bounded_sigma(N)) {
    throw std::invalid_argument(
        "data fragility requires [X_-; U_-] to have full row rank");
  }
}

// Pseudoinverse extraction K = L Q^+ with the L Q^+ Q = L residual check.
Mat extract_gain(const Mat& L, const Mat& Q, std::vector<std::string>& warnings) {
  const Mat Qp = pinv(Q);
  const Mat K = L * Qp;
  const double res = (K * Q - L).norm();
  if (res > 1e-6 * std::max(1e-300, L.norm())) {
    warnings.push_back("L Q^+ Q differs from L by " + std::to_string(res));
  }
  return K;
}

void finish_model(FragilityReport& r, const SystemModel& sys,
                  const VerifyOptions& vopts) {
  r.seed = vopts.seed;
  if (r.status != FragilityStatus::Certified) return;
  const VerifyReport v = verify_perturbation(sys, r.K_star, r.lambda, vopts);
  r.verified = v.passed;
  if (!v.passed) {
    r.status = FragilityStatus::NumericalFailure;
    r.warnings.push_back("perturbation check failed at " +
                         std::to_string(vopts.shrink) + " lambda");
  }
}

void finish_data(FragilityReport& r, const InformativityMatrix& N,
                 const VerifyOptions& vopts) {
  r.seed = vopts.seed;
  if (r.status != FragilityStatus::Certified) return;
  if (max_eig(r.Q_star) > 1.0 + 1e-6) {
    r.warnings.push_back("Q* exceeds I: largest eigenvalue " +
                         std::to_string(max_eig(r.Q_star)));
  }
  const VerifyReport v = verify_perturbation(N, r.K_star, r.lambda, vopts);
  r.verified = v.passed;
  if (!v.passed) {
    r.status = FragilityStatus::NumericalFailure;
    r.warnings.push_back("perturbation check failed at " +
                         std::to_string(vopts.shrink) + " lambda");
  }
}

FragilityStatus status_from(sdp::Status s) {
  return s == sdp::Status::Optimal ? FragilityStatus::Certified
         : s == sdp::Status::Infeasible ? FragilityStatus::NotCertifiable
                                        : FragilityStatus::NumericalFailure;
}

}  // namespace

// ---- model based ----------------------------------------------------------

double trace_bound(const SystemModel& sys, const Mat& K) {
  const double bb = (sys.B * sys.B.transpose()).trace();
  if (bb == 0.0) return std::numeric_limits<double>::infinity();
  const Mat AK = sys.A + sys.B * K;
  return (static_cast<double>(sys.n()) - AK.trace()) * spectral_norm(sys.B) / bb;
}

namespace {

struct Crossing {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

// First radius along the ray r D (r <= limit) at which A_K + r B D stops
// being Schur, bracketed to the given width.
Crossing first_crossing(const Mat& AK, const Mat& B, const Mat& D, double limit,
                        int steps, double width) {
  Crossing c;
  const Mat BD = B * D;
  double prev = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double r = limit * k / steps;
    if (!is_schur(AK + r * BD)) {
      double lo = prev;
      double hi = r;
      while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        (is_schur(AK + mid * BD) ? lo : hi) = mid;
      }
      c.lo = lo;
      c.hi = hi;
      return c;
    }
    prev = r;
  }
  c.lo = limit;
  return c;
}

}  // namespace

MuEstimate mu_oracle_model(const SystemModel& sys, const Mat& K,
                           const MuOptions& opts) {
  require_gain_shape(sys, K);
  const Mat AK = sys.A + sys.B * K;
  if (!is_schur(AK)) {
    throw std::invalid_argument("mu_oracle_model: A + BK is not Schur");
  }
  MuEstimate est;
  est.seed = opts.seed;
  const double bound = trace_bound(sys, K);
  if (!std::isfinite(bound)) {
    est.rho_lo = est.rho_hi;
    return est;
  }
  const Eigen::Index m = sys.m();
  const Eigen::Index n = sys.n();
  const double width = opts.rel_width * bound;
  // The trace bound is attained along B^T, so scanning slightly past it
  // always finds a crossing on that ray.
  const double limit = bound * (1.0 + 1e-9);

  Mat best_dir = sys.B.transpose() / spectral_norm(sys.B);
  Crossing best = first_crossing(AK, sys.B, best_dir, limit, opts.scan_steps, width);
  est.samples = 1;

  auto consider = [&](const Mat& D) {
    ++est.samples;
    // Directions still stable at the current best radius cannot improve it
    // (up to non-monotone rays, which the oracle does not chase).
    if (is_schur(AK + best.hi * sys.B * D)) return false;
    const double lim = best.hi;
    const int steps = std::max(8, static_cast<int>(opts.scan_steps * lim / limit));
    const Crossing c = first_crossing(AK, sys.B, D, lim, steps, width);
    if (c.hi < best.hi) {
      best = c;
      best_dir = D;
      return true;
    }
    return false;
  };

  std::mt19937_64 rng(opts.seed);
  const int count = opts.directions_per_entry * static_cast<int>(m * n);
  for (int k = 0; k < count; ++k) consider(unit_direction(rng, m, n));

  // Local refinement around the best direction.
  for (double step = 0.5; step > 1e-4; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int k = 0; k < 8; ++k) {
        Mat D = best_dir + step * unit_direction(rng, m, n);
        D /= spectral_norm(D);
        if (consider(D)) improved = true;
      }
    }
  }

  est.rho_lo = best.lo;
  est.rho_hi = best.hi;
  est.witness = best.hi * best_dir;
  return est;
}

bool kappa_model_check(const SystemModel& sys, const Mat& P, const Mat& K,
                       double rho, double eps_strict) {
  require_gain_shape(sys, K);
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  if (P.rows() != n || P.cols() != n) {
    throw std::invalid_argument("kappa_model_check: P must be n x n");
  }
  const Mat Ps = symmetrize(P);
  const Mat AK = sys.A + sys.B * K;
  if (min_eig(Ps) <= 0.0 ||
      min_eig(symmetrize(Ps - AK * Ps * AK.transpose())) <= 0.0) {
    throw std::invalid_argument(
        "kappa_model_check: P - A_K P A_K^T > 0 with P > 0 is required");
  }
  // The S-lemma test is stated for the dual inequality in P^{-1}.
  Mat Pi = symmetrize(Ps.inverse());
  Pi /= max_eig(Pi);

  sdp::Problem prob;
  const AffineExpr gamma = prob.add_scalar_var("gamma");
  const Mat top = symmetrize(Pi - AK.transpose() * Pi * AK);
  const Mat cross = -AK.transpose() * Pi * sys.B;
  const Mat bottom = symmetrize(sys.B.transpose() * Pi * sys.B);
  const AffineExpr lmi = AffineExpr::blocks(
      {{AffineExpr::constant(top) - scalar_times(gamma, rho * rho * Mat::Identity(n, n)),
        AffineExpr::constant(cross)},
       {AffineExpr::constant(cross.transpose()),
        scalar_times(gamma, Mat::Identity(m, m)) - AffineExpr::constant(bottom)}});
  return strictly_feasible_in_gamma(lmi, eps_strict);
}

namespace {

FragilityReport model_sdp(const SystemModel& sys, const Mat* K) {
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  FragilityReport r;
  r.kind = K ? FragilityKind::ModelGivenK : FragilityKind::ModelOptimal;

  sdp::Problem prob;
  const AffineExpr Q = prob.add_sym_var("Q", n);
  const AffineExpr beta = prob.add_scalar_var("beta", 0.0);
  const AffineExpr BL = K ? AffineExpr(sys.B * *K * Q)
                          : AffineExpr(sys.B * AffineExpr(prob.add_rect_var("L", m, n)));
  const AffineExpr AQ = sys.A * Q + BL;
  const Mat BB = sys.B * sys.B.transpose();
  const AffineExpr lmi = AffineExpr::blocks(
      {{Q, AQ.transpose(), Q},
       {AQ, Q - AffineExpr::constant(BB), Z(n, n)},
       {Q, Z(n, n), scalar_times(beta, Mat::Identity(n, n))}});
  prob.add_psd_constraint(lmi, "fragility");
  prob.minimize(beta);

  const sdp::Solution sol = sdp::solve(prob);
  r.solver_status = sol.status;
  r.status = status_from(sol.status);
  if (r.status != FragilityStatus::Certified) return r;
  r.beta_star = sol.scalar("beta");
  if (r.beta_star <= 0.0) {
    r.status = FragilityStatus::NumericalFailure;
    r.warnings.push_back("non-positive optimal beta");
    return r;
  }
  r.lambda = std::sqrt(1.0 / r.beta_star);
  r.Q_star = symmetrize(sol.value("Q"));
  if (K) {
    r.K_star = *K;
    r.L_star = *K * r.Q_star;
  } else {
    r.L_star = sol.value("L");
    r.K_star = extract_gain(r.L_star, r.Q_star, r.warnings);
  }
  return r;
}

}  // namespace

FragilityReport lambda_model_given_k(const SystemModel& sys, const Mat& K,
                                     const VerifyOptions& vopts) {
  require_gain_shape(sys, K);
  if (sys.B.norm() == 0.0) {
    throw std::invalid_argument("B = 0: every perturbation is harmless");
  }
  if (!is_schur(sys.A + sys.B * K)) {
    FragilityReport r;
    r.kind = FragilityKind::ModelGivenK;
    r.status = FragilityStatus::NotCertifiable;
    r.K_star = K;
    r.seed = vopts.seed;
    r.warnings.push_back("A + BK is not Schur");
    return r;
  }
  FragilityReport r = model_sdp(sys, &K);
  if (r.K_star.size() == 0) r.K_star = K;
  finish_model(r, sys, vopts);
  return r;
}

FragilityReport lambda_model_opt(const SystemModel& sys,
                                 const VerifyOptions& vopts) {
  sys.validate();
  if (sys.B.norm() == 0.0) {
    throw std::invalid_argument("B = 0: every perturbation is harmless");
  }
  FragilityReport r = model_sdp(sys, nullptr);
  finish_model(r, sys, vopts);
  return r;
}

VerifyReport verify_perturbation(const SystemModel& sys, const Mat& K,
                                 double lambda, const VerifyOptions& opts) {
  require_gain_shape(sys, K);
  VerifyReport out;
  const double radius = opts.shrink * lambda;
  std::mt19937_64 rng(opts.seed);
  auto test = [&](const Mat& Delta) {
    ++out.tested;
    if (is_schur(sys.A + sys.B * (K + Delta))) return;
    ++out.failures;
    out.passed = false;
    if (!out.counterexample_delta) {
      out.counterexample_system = sys;
      out.counterexample_delta = Delta;
    }
  };
  if (sys.B.norm() > 0.0) {
    const Mat D = sys.B.transpose() / spectral_norm(sys.B);
    test(radius * D);
    test(-radius * D);
  }
  while (out.tested < opts.samples) {
    test(radius * unit_direction(rng, sys.m(), sys.n()));
  }
  return out;
}

// ---- data based -----------------------------------------------------------

DataFragility classify_data_fragility(const DataMatrices& dm,
                                      const InformativityMatrix& N,
                                      double tol) {
  if (!is_bounded(dm)) return DataFragility::ExtremelyFragile;
  if (is_singleton(N, tol)) {
    const SystemModel s = recover_true(N);
    const double scale = std::max(1.0, s.stacked().cwiseAbs().maxCoeff());
    if (s.B.cwiseAbs().maxCoeff() <= tol * scale) return DataFragility::Immune;
  }
  return DataFragility::Intermediate;
}

namespace {

// Unit spectral-norm E along which the spectral radius of M + B E grows
// fastest to first order.
Mat radius_gradient(const Mat& M, const Mat& B) {
  Eigen::EigenSolver<Mat> right(M);
  const Eigen::Index n = M.rows();
  Eigen::Index i = 0;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (std::abs(right.eigenvalues()(k)) > std::abs(right.eigenvalues()(i))) i = k;
  }
  const std::complex<double> lam = right.eigenvalues()(i);
  const Eigen::VectorXcd x = right.eigenvectors().col(i);
  Eigen::EigenSolver<Mat> left(M.transpose());
  Eigen::Index j = 0;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (std::abs(left.eigenvalues()(k) - std::conj(lam)) <
        std::abs(left.eigenvalues()(j) - std::conj(lam))) {
      j = k;
    }
  }
  const Eigen::VectorXcd y = left.eigenvectors().col(j);
  const std::complex<double> yx = y.dot(x);  // y^H x
  if (std::abs(yx) < 1e-14 || std::abs(lam) == 0.0) return Mat();
  const Eigen::VectorXcd by = B.cast<std::complex<double>>().transpose() * y.conjugate();
  const Eigen::MatrixXcd g = by * x.transpose() / yx;
  const Mat grad = (std::conj(lam) * g).real() / std::abs(lam);
  if (grad.norm() == 0.0) return Mat();
  Eigen::JacobiSVD<Mat> svd(grad, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

std::optional<FragilityWitness> extreme_fragility_witness(
    const DataMatrices& dm, const InformativityMatrix& N, const Mat& K,
    double rho, std::uint64_t seed) {
  const Eigen::Index n = dm.n();
  const Eigen::Index m = dm.m();
  if (K.rows() != m || K.cols() != n) {
    throw std::invalid_argument("gain must be m x n");
  }
  Mat D(n + m, dm.T());
  D << dm.Xminus, dm.Uminus;
  const Mat V = null_space(D.transpose());
  if (V.cols() == 0) return std::nullopt;

  const Mat fit = dm.Xplus * pinv(D);
  const SystemModel base{fit.leftCols(n), fit.rightCols(m)};
  if (!is_consistent(N, base, 1e-7)) return std::nullopt;

  std::mt19937_64 rng(seed);
  std::vector<Vec> ws;
  for (Eigen::Index i = 0; i < n; ++i) ws.push_back(Vec::Unit(n, i));
  for (int k = 0; k < 8; ++k) ws.push_back(gaussian(rng, n, 1).col(0).normalized());

  std::optional<FragilityWitness> fallback;
  auto at = [&](const Mat& dir, double c) {
    return SystemModel{base.A + c * dir.leftCols(n), base.B + c * dir.rightCols(m)};
  };
  auto perturbation = [&](const SystemModel& s) {
    Mat G = radius_gradient(s.A + s.B * K, s.B);
    if (G.size() == 0) G = unit_direction(rng, m, n);
    return Mat(rho * G);
  };
  auto witness = [&](const SystemModel& s, const Mat& Delta) {
    FragilityWitness w;
    w.sys = s;
    w.Delta = Delta;
    w.nominal_stable = is_schur(s.A + s.B * K);
    w.perturbed_radius = spectral_radius(s.A + s.B * (K + Delta));
    return w;
  };

  for (Eigen::Index v = 0; v < V.cols(); ++v) {
    for (const Vec& w : ws) {
      const Mat dir = w * V.col(v).transpose();
      for (double sign : {1.0, -1.0}) {
        auto radius = [&](double c) {
          const SystemModel s = at(dir, sign * c);
          return spectral_radius(s.A + s.B * K);
        };
        // Walk out until the nominal loop loses stability.
        double lo = 0.0;
        double hi = 1e-3;
        if (radius(0.0) >= 1.0) {
          const SystemModel s = at(dir, 0.0);
          const Mat Delta = perturbation(s);
          if (!is_schur(s.A + s.B * (K + Delta)) && !fallback) {
            fallback = witness(s, Delta);
          }
          continue;
        }
        while (hi < 1e9 && radius(hi) < 1.0) {
          lo = hi;
          hi *= 2.0;
        }
        if (hi >= 1e9) continue;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (radius(mid) < 1.0 ? lo : hi) = mid;
        }
        // Back off from the boundary by a fraction of the first-order effect
        // of Delta, so that the nominal loop is clearly stable.
        const SystemModel edge = at(dir, sign * lo);
        const Mat Dedge = perturbation(edge);
        const double effect =
            spectral_radius(edge.A + edge.B * (K + Dedge)) - radius(lo);
        for (double frac : {0.25, 0.05, 0.0}) {
          double c = lo;
          if (frac > 0.0 && effect > 0.0) {
            const double target = 1.0 - frac * effect;
            double a = 0.0;
            double b = lo;
            if (radius(a) >= target) continue;
            for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
              const double mid = 0.5 * (a + b);
              (radius(mid) < target ? a : b) = mid;
            }
            c = a;
          }
          const SystemModel s = at(dir, sign * c);
          const Mat Delta = perturbation(s);
          if (!is_schur(s.A + s.B * (K + Delta))) {
            FragilityWitness wit = witness(s, Delta);
            if (wit.nominal_stable) return wit;
            if (!fallback) fallback = wit;
          }
        }
        const SystemModel s = at(dir, sign * hi);
        const Mat Delta = perturbation(s);
        if (!is_schur(s.A + s.B * (K + Delta)) && !fallback) {
          fallback = witness(s, Delta);
        }
      }
    }
  }
  return fallback;
}

namespace {

// The 5-block (n, n, m, n, n) fragility LMI in (Q, L, beta) before the data
// term is subtracted.
AffineExpr fragility_blocks(const AffineExpr& Q, const AffineExpr& L,
                            const AffineExpr& beta, Eigen::Index n,
                            Eigen::Index m) {
  const AffineExpr Lt = L.transpose();
  return AffineExpr::blocks(
      {{Q, Z(n, n), Z(n, m), Z(n, n), Z(n, n)},
       {Z(n, n), -Q, -Lt, -Q, Z(n, n)},
       {Z(m, n), -L, -scalar_times(beta, Mat::Identity(m, m)), Z(m, n), L},
       {Z(n, n), -Q, Z(n, m), AffineExpr::identity(n), Q},
       {Z(n, n), Z(n, n), Lt, Q, Q}});
}

}  // namespace

bool kappa_data_check(const InformativityMatrix& N, const Mat& P, double alpha,
                      const Mat& K, double rho, double eps_strict) {
  require_data_shape(N, K);
  if (!gain_in_set(N, P, alpha, K)) {
    throw std::invalid_argument("kappa_data_check: K is not in K(P, alpha)");
  }
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  const double top = max_eig(symmetrize(P));
  const Mat Pn = symmetrize(P) / top;
  const double an = alpha / top;

  sdp::Problem prob;
  const AffineExpr gamma = prob.add_scalar_var("gamma");
  const AffineExpr Pc = AffineExpr::constant(Pn);
  const AffineExpr KP = AffineExpr::constant(K * Pn);
  const AffineExpr KPt = KP.transpose();
  const AffineExpr F = AffineExpr::blocks(
      {{Pc, Z(n, n), Z(n, m), Z(n, n), Z(n, n)},
       {Z(n, n), -Pc, -KPt, -Pc, Z(n, n)},
       {Z(m, n), -KP, -scalar_times(gamma, rho * rho * Mat::Identity(m, m)),
        Z(m, n), KP},
       {Z(n, n), -Pc, Z(n, m), scalar_times(gamma, Mat::Identity(n, n)), Pc},
       {Z(n, n), Z(n, n), KPt, Pc, Pc}});
  const AffineExpr lmi =
      centered_data_lmi(center_N(N), F, AffineExpr::constant(Mat::Constant(1, 1, an)));
  return strictly_feasible_in_gamma(lmi, eps_strict);
}

bool gain_certifiable(const InformativityMatrix& N, const Mat& K,
                      double eps_strict) {
  require_data_shape(N, K);
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  sdp::Problem prob;
  const AffineExpr P = prob.add_sym_var("P", n);
  const AffineExpr alpha = prob.add_scalar_var("alpha", 0.0);
  const AffineExpr L = K * P;
  const AffineExpr F =
      AffineExpr::blocks({{P, Z(n, n), Z(n, m), Z(n, n)},
                          {Z(n, n), -P, -L.transpose(), Z(n, n)},
                          {Z(m, n), -L, Z(m, m), L},
                          {Z(n, n), Z(n, n), L.transpose(), P}});
  const auto c = prob.add_psd_constraint(centered_data_lmi(center_N(N), F, alpha),
                                         "informativity");
  prob.add_psd_constraint(AffineExpr::identity(n) - P, "P <= I");
  return sdp::strict_feasible(prob, {c}, eps_strict).feasible;
}

namespace {

FragilityReport data_sdp(const InformativityMatrix& N, const Mat* K) {
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  FragilityReport r;
  r.kind = K ? FragilityKind::DataGivenK : FragilityKind::DataOptimal;

  sdp::Problem prob;
  const AffineExpr Q = prob.add_sym_var("Q", n);
  const AffineExpr zeta = prob.add_scalar_var("zeta", 0.0);
  const AffineExpr beta = prob.add_scalar_var("beta", 0.0);
  const AffineExpr L = K ? AffineExpr(*K * Q) : AffineExpr(prob.add_rect_var("L", m, n));
  prob.add_psd_constraint(
      centered_data_lmi(center_N(N), fragility_blocks(Q, L, beta, n, m), zeta),
      "fragility");
  prob.maximize(beta);

  const sdp::Solution sol = sdp::solve(prob);
  r.solver_status = sol.status;
  r.status = status_from(sol.status);
  if (r.status != FragilityStatus::Certified) return r;
  r.beta_star = sol.scalar("beta");
  r.zeta_star = sol.scalar("zeta");
  r.Q_star = symmetrize(sol.value("Q"));
  if (r.beta_star <= 1e-12) {
    r.status = FragilityStatus::NotCertifiable;
    return r;
  }
  r.lambda = std::sqrt(r.beta_star);
  if (K) {
    r.K_star = *K;
    r.L_star = *K * r.Q_star;
  } else {
    r.L_star = sol.value("L");
    r.K_star = extract_gain(r.L_star, r.Q_star, r.warnings);
  }
  return r;
}

FragilityReport singleton_fallback(const InformativityMatrix& N, const Mat* K,
                                   const VerifyOptions& vopts) {
  const SystemModel sys = recover_true(N);
  FragilityReport r =
      K ? lambda_model_given_k(sys, *K, vopts) : lambda_model_opt(sys, vopts);
  r.kind = K ? FragilityKind::DataGivenK : FragilityKind::DataOptimal;
  r.singleton_fallback = true;
  r.warnings.push_back("data determine a single system; model radius reported");
  return r;
}

FragilityReport not_certifiable(FragilityKind kind, const Mat* K,
                                const VerifyOptions& vopts, std::string why) {
  FragilityReport r;
  r.kind = kind;
  r.status = FragilityStatus::NotCertifiable;
  if (K) r.K_star = *K;
  r.seed = vopts.seed;
  r.warnings.push_back(std::move(why));
  return r;
}

}  // namespace

FragilityReport lambda_data_given_k(const InformativityMatrix& N, const Mat& K,
                                    const VerifyOptions& vopts) {
  require_data_shape(N, K);
  if (is_singleton(N)) return singleton_fallback(N, &K, vopts);
  if (!gain_certifiable(N, K)) {
    return not_certifiable(FragilityKind::DataGivenK, &K, vopts,
                           "no quadratic certificate contains K");
  }
  FragilityReport r = data_sdp(N, &K);
  if (r.K_star.size() == 0) r.K_star = K;
  finish_data(r, N, vopts);
  return r;
}

FragilityReport lambda_data_opt(const InformativityMatrix& N,
                                const VerifyOptions& vopts) {
  require_data_shape(N, Mat::Zero(N.m, N.n));
  if (is_singleton(N)) return singleton_fallback(N, nullptr, vopts);
  if (check_informativity_full(N).verdict != Verdict::Informative) {
    return not_certifiable(FragilityKind::DataOptimal, nullptr, vopts,
                           "data are not informative for quadratic stabilization");
  }
  FragilityReport r = data_sdp(N, nullptr);
  finish_data(r, N, vopts);
  return r;
}

VerifyReport verify_perturbation(const InformativityMatrix& N, const Mat& K,
                                 double lambda, const VerifyOptions& opts) {
  require_data_shape(N, K);
  const SigmaParam p = sigma_param(N);
  const Eigen::Index n = N.n;
  const Eigen::Index m = N.m;
  VerifyReport out;
  const double radius = opts.shrink * lambda;
  std::mt19937_64 rng(opts.seed);
  for (int k = 0; k < opts.samples; ++k) {
    Mat S = random_contraction(rng, n, n + m);
    if (k % 10 == 0) S /= std::max(1e-300, spectral_norm(S));
    const SystemModel s = sample_sigma(p, S);
    const Mat Delta = radius * unit_direction(rng, m, n);
    ++out.tested;
    if (is_schur(s.A + s.B * (K + Delta))) continue;
    ++out.failures;
    out.passed = false;
    if (!out.counterexample_delta) {
      out.counterexample_system = s;
      out.counterexample_delta = Delta;
    }
  }
  return out;
}

}  // namespace ddfrag
