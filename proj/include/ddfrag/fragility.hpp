#pragma once

// Fragility of state-feedback gains against additive perturbations
// K -> K + Delta, for a known model and for every system consistent with data.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddfrag/data_model.hpp"
#include "ddfrag/sdp.hpp"

namespace ddfrag {

enum class FragilityKind { ModelGivenK, ModelOptimal, DataGivenK, DataOptimal };

const char* to_string(FragilityKind k);

enum class FragilityStatus {
  Certified,
  /// No quadratic certificate exists for the requested gain (or system).
  NotCertifiable,
  NumericalFailure,
};

const char* to_string(FragilityStatus s);

struct FragilityReport {
  FragilityKind kind = FragilityKind::ModelGivenK;
  FragilityStatus status = FragilityStatus::NumericalFailure;
  double lambda = 0.0;
  double beta_star = 0.0;
  Mat K_star;  // the analysed gain for the GivenK kinds
  Mat Q_star;
  Mat L_star;
  double zeta_star = 0.0;  // data kinds only
  sdp::Status solver_status = sdp::Status::NumericalFailure;
  bool verified = false;
  std::uint64_t seed = 0;
  /// The data pinned down a single system and the model path was used.
  bool singleton_fallback = false;
  std::vector<std::string> warnings;
};

struct VerifyOptions {
  int samples = 1000;
  /// Perturbations are drawn on the sphere ||Delta|| = shrink * lambda.
  double shrink = 0.99;
  std::uint64_t seed = 1;
};

struct VerifyReport {
  bool passed = true;
  int tested = 0;
  int failures = 0;
  /// First failing pair, if any.
  std::optional<SystemModel> counterexample_system;
  std::optional<Mat> counterexample_delta;
};

// ---- model based ----------------------------------------------------------

/// (n - tr(A + BK)) ||B|| / tr(B B^T); +inf when B = 0.
double trace_bound(const SystemModel& sys, const Mat& K);

struct MuOptions {
  /// Random directions per unit of m*n.
  int directions_per_entry = 64;
  /// Bisection stops at this fraction of the initial bracket.
  double rel_width = 1e-3;
  /// Coarse scan steps along each ray before bisection.
  int scan_steps = 200;
  std::uint64_t seed = 1;
};

struct MuEstimate {
  double rho_lo = 0.0;
  double rho_hi = std::numeric_limits<double>::infinity();
  Mat witness;  // empty when rho_hi is infinite
  int samples = 0;
  std::uint64_t seed = 0;
};

/// Sampling oracle for the largest ball of gain perturbations keeping
/// A + B(K + Delta) Schur. Throws std::invalid_argument unless A + BK is
/// Schur.
MuEstimate mu_oracle_model(const SystemModel& sys, const Mat& K,
                           const MuOptions& opts = {});

/// Whether rho is below the radius certified by the Lyapunov matrix P
/// (P - A_K P A_K^T > 0). Throws std::invalid_argument when (P, K) is not a
/// valid Lyapunov pair.
bool kappa_model_check(const SystemModel& sys, const Mat& P, const Mat& K,
                       double rho, double eps_strict = 1e-7);

FragilityReport lambda_model_given_k(const SystemModel& sys, const Mat& K,
                                     const VerifyOptions& vopts = {});
FragilityReport lambda_model_opt(const SystemModel& sys,
                                 const VerifyOptions& vopts = {});

VerifyReport verify_perturbation(const SystemModel& sys, const Mat& K,
                                 double lambda, const VerifyOptions& opts = {});

// ---- data based -----------------------------------------------------------

enum class DataFragility { ExtremelyFragile, Immune, Intermediate };

const char* to_string(DataFragility c);

DataFragility classify_data_fragility(const DataMatrices& dm,
                                      const InformativityMatrix& N,
                                      double tol = 1e-8);

struct FragilityWitness {
  SystemModel sys;  // consistent with the data
  Mat Delta;        // ||Delta|| = rho
  /// A + BK itself is Schur, so the perturbation alone is to blame.
  bool nominal_stable = false;
  double perturbed_radius = 0.0;
};

/// Searches the unbounded directions of Sigma_D for a consistent system that
/// A + B(K + Delta) fails to stabilize with ||Delta|| = rho. Requires rank
/// deficient data and a least-squares fit that is itself consistent.
std::optional<FragilityWitness> extreme_fragility_witness(
    const DataMatrices& dm, const InformativityMatrix& N, const Mat& K,
    double rho, std::uint64_t seed = 1);

/// Whether rho is below the radius certified by (P, alpha) for K. Throws
/// std::invalid_argument unless K lies in K(P, alpha).
bool kappa_data_check(const InformativityMatrix& N, const Mat& P, double alpha,
                      const Mat& K, double rho, double eps_strict = 1e-7);

/// Whether some (P, alpha) places K in K(P, alpha).
bool gain_certifiable(const InformativityMatrix& N, const Mat& K,
                      double eps_strict = 1e-7);

FragilityReport lambda_data_given_k(const InformativityMatrix& N, const Mat& K,
                                    const VerifyOptions& vopts = {});
FragilityReport lambda_data_opt(const InformativityMatrix& N,
                                const VerifyOptions& vopts = {});

/// Samples consistent systems (every tenth on the boundary of Sigma_D)
/// paired with perturbations on the sphere of radius shrink * lambda.
VerifyReport verify_perturbation(const InformativityMatrix& N, const Mat& K,
                                 double lambda, const VerifyOptions& opts = {});

}  // namespace ddfrag
