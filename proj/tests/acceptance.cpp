// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ddfrag/experiment.hpp"
#include "ddfrag/fragility.hpp"
#include "ddfrag/io.hpp"
#include "ddfrag/stabilization.hpp"
#include "test_support.hpp"

namespace {

using namespace ddfrag;
using testing_support::example_data;
using testing_support::example_system;
using testing_support::random_exact_dataset;
using testing_support::random_matrix;
using testing_support::stacked_experiments;

namespace fs = std::filesystem;

const std::string kCli = DDFRAG_CLI_PATH;
const fs::path kFix = DDFRAG_FIXTURES;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (!ok) detail << "; ";
      ok = false;
      detail << "failed: " << what;
    }
  }
};

Mat row(double a, double b) { return (Mat(1, 2) << a, b).finished(); }

bool near(double v, double target, double tol) { return std::abs(v - target) <= tol; }

InformativityMatrix example_N() {
  return build_N(to_data_matrices(example_data()), NoiseModel::norm_bound(2, 4, 1.0));
}

// P solving P - A P A^T = I, via the Kronecker form.
Mat lyapunov(const Mat& A) {
  const Eigen::Index n = A.rows();
  Mat kron = Mat::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) -= A(i, j) * A;
  }
  const Mat I = Mat::Identity(n, n);
  const Vec p = kron.lu().solve(Eigen::Map<const Vec>(I.data(), n * n));
  return symmetrize(Eigen::Map<const Mat>(p.data(), n, n));
}

void check_pipeline(Outcome& o) {
  const fs::path tmp = fs::temp_directory_path() / "ddfrag_acceptance_check.json";
  const std::string cmd = kCli + " check --dataset " + (kFix / "example3_dataset.json").string() +
                          " --noise " + (kFix / "example3_noise.json").string() + " --out " +
                          tmp.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.require(code == 0, "exit code " + std::to_string(code));
  if (code != 0) return;
  const io::Json j = io::read_json(tmp.string());
  fs::remove(tmp);
  o.require(j["informative"] == true, "informative");
  o.detail << "informative=" << j["informative"] << " margin=" << j["margin"];
}

void data_given_k(Outcome& o) {
  const FragilityReport r = lambda_data_given_k(example_N(), row(-1.35, -1.7));
  o.require(r.status == FragilityStatus::Certified, "certified");
  o.require(near(r.lambda, 0.055, 0.005), "lambda");
  o.detail << "lambda_D(K)=" << r.lambda;
}

void data_opt(Outcome& o) {
  const FragilityReport r = lambda_data_opt(example_N());
  o.require(r.status == FragilityStatus::Certified, "certified");
  o.require(near(r.lambda, 0.087, 0.005), "lambda");
  o.require(r.K_star.size() == 2 && near(r.K_star(0, 0), -1.426, 0.02) &&
                near(r.K_star(0, 1), -1.782, 0.02),
            "K*");
  o.detail << "lambda_D=" << r.lambda << " K*=[" << r.K_star(0, 0) << ", " << r.K_star(0, 1)
           << "]";
}

void model_example(Outcome& o) {
  const SystemModel sys = example_system();
  const FragilityReport g = lambda_model_given_k(sys, row(-1, -1));
  const FragilityReport s = lambda_model_opt(sys);
  const MuEstimate mu = mu_oracle_model(sys, row(-1, -1));
  o.require(near(g.lambda, 0.333, 0.005), "lambda(K)");
  o.require(near(s.lambda, 0.667, 0.005), "lambda");
  o.require(near(s.K_star(0, 0), -0.667, 0.01) && near(s.K_star(0, 1), -1.333, 0.01), "K*");
  o.require(mu.rho_lo <= 0.447 && 0.447 <= mu.rho_hi, "mu contains 0.447");
  o.require(mu.rho_hi - mu.rho_lo <= 0.01, "mu width");
  o.detail << "lambda(K)=" << g.lambda << " lambda=" << s.lambda << " K*=[" << s.K_star(0, 0)
           << ", " << s.K_star(0, 1) << "] mu=[" << mu.rho_lo << ", " << mu.rho_hi << "]";
}

void aircraft(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const SystemModel sys = io::system_from_json(io::read_json((kFix / "aircraft_system.json").string()));
  const ExperimentSpec spec =
      io::experiment_from_json(io::read_json((kFix / "example4_spec.json").string()), sys, 1);
  const TrajectoryData d = run_experiment(spec);
  const NoiseModel nm =
      io::noise_from_json(io::read_json((kFix / "example4_noise.json").string()), d.n, d.T);
  o.require(nm.admits(noise_matrix(d)), "noise bound");
  const InformativityMatrix N = build_N(to_data_matrices(d), nm);

  const InformativityResult inf = check_informativity_full(N);
  o.require(inf.verdict == Verdict::Informative, "informative");
  if (inf.verdict != Verdict::Informative) return;
  const Mat Ko = inf.certificate.K;
  const FragilityReport given = lambda_data_given_k(N, Ko);
  const FragilityReport opt = lambda_data_opt(N);
  o.require(opt.status == FragilityStatus::Certified, "certified");
  o.require(opt.lambda > 0.0, "lambda_D > 0");
  o.require(given.lambda < opt.lambda, "lambda_D(Ko) < lambda_D");
  VerifyOptions v;
  v.samples = 1000;
  v.shrink = 0.99;
  const VerifyReport ver = verify_perturbation(N, opt.K_star, opt.lambda, v);
  o.require(ver.passed && ver.tested == 1000, "verification");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(secs <= 60.0, "runtime");
  o.detail << "lambda_D(Ko)=" << given.lambda << " lambda_D=" << opt.lambda
           << " verified=" << ver.tested - ver.failures << "/" << ver.tested
           << " time=" << secs << "s";
}

void ordering(Outcome& o) {
  std::mt19937_64 rng(606);
  int passed = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const Eigen::Index m = std::min<Eigen::Index>(n, 1 + (trial / 4) % 2);
    Mat A = random_matrix(rng, n, n);
    A *= (0.8 + 0.1 * (trial % 6)) / std::max(1e-3, spectral_radius(A));
    const SystemModel sys{A, random_matrix(rng, n, m)};
    const std::string tag = "trial " + std::to_string(trial);

    const FragilityReport opt = lambda_model_opt(sys);
    if (opt.status != FragilityStatus::Certified) {
      o.require(false, tag + " optimum");
      continue;
    }
    const Mat K = opt.K_star + 0.5 * opt.lambda * random_contraction(rng, m, n);
    const FragilityReport given = lambda_model_given_k(sys, K);
    if (given.status != FragilityStatus::Certified) {
      o.require(false, tag + " lambda(K)");
      continue;
    }
    // kappa for the Lyapunov matrix of A + BK, by bisection.
    const Mat P = lyapunov(sys.A + sys.B * K);
    double lo = 0.0;
    double hi = 2.0 * given.lambda + 1.0;
    for (int k = 0; k < 30; ++k) {
      const double mid = 0.5 * (lo + hi);
      (kappa_model_check(sys, P, K, mid) ? lo : hi) = mid;
    }
    const MuEstimate mu = mu_oracle_model(sys, K);
    const MuEstimate mu_star = mu_oracle_model(sys, opt.K_star);
    const bool ok = lo <= given.lambda + 1e-3 && given.lambda <= opt.lambda + 1e-6 &&
                    given.lambda <= mu.rho_hi + 0.01 &&
                    opt.lambda <= mu_star.rho_hi + 0.01 &&
                    mu.rho_hi <= trace_bound(sys, K) * (1 + 1e-6) &&
                    mu_star.rho_hi <= trace_bound(sys, opt.K_star) * (1 + 1e-6);
    o.require(ok, tag);
    passed += ok;
  }
  o.detail << passed << "/25 systems";
}

void recovery(Outcome& o) {
  std::mt19937_64 rng(707);
  int passed = 0;
  double worst_defect = 0.0;
  double worst_err = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const Eigen::Index m = 1 + (trial / 4) % 2;
    const auto [sys, dm] = random_exact_dataset(rng, n, m, 2 * (n + m) + 2);
    const InformativityMatrix N = build_N(dm, NoiseModel::noise_free(n, dm.T()));
    const double defect = singleton_defect(N) / spectral_norm(N.N);
    const SystemModel r = recover_true(N);
    const double err = spectral_norm(r.stacked() - sys.stacked()) /
                       std::max(1.0, spectral_norm(sys.stacked()));
    worst_defect = std::max(worst_defect, defect);
    worst_err = std::max(worst_err, err);
    const bool ok = is_bounded(dm) && defect <= 1e-10 && err <= 1e-8;
    o.require(ok, "trial " + std::to_string(trial));
    passed += ok;
  }
  o.detail << passed << "/25 datasets, worst defect/||N||=" << worst_defect
           << " worst relative error=" << worst_err;
}

void round_trip(Outcome& o) {
  const InformativityMatrix N = example_N();
  const InformativityResult inf = check_informativity_reduced(N);
  o.require(inf.verdict == Verdict::Informative, "informative");
  if (inf.verdict != Verdict::Informative) return;
  const Mat& P = inf.certificate.P;
  const double alpha = inf.certificate.alpha;
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> radius(0.0, 0.999);
  std::vector<Mat> gains;
  int in_set = 0;
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const Mat S = random_contraction(rng, 1, 2, radius(rng));
    const Mat K = parameterize_gains(N, P, alpha, S);
    in_set += gain_in_set(N, P, alpha, K);
    worst = std::max(worst, (gain_coordinates(N, P, alpha, K).S - S).cwiseAbs().maxCoeff());
    if (k < 20) gains.push_back(K);
  }
  o.require(in_set == 500, "gain_in_set");
  o.require(worst <= 1e-6, "inversion");

  const SigmaParam sp = sigma_param(N);
  int stable = 0;
  for (int k = 0; k < 500; ++k) {
    Mat S = random_contraction(rng, 2, 3);
    if (k % 10 == 0) S /= spectral_norm(S);
    const SystemModel member = sample_sigma(sp, S);
    for (const Mat& K : gains) stable += is_schur(member.A + member.B * K);
  }
  o.require(stable == 500 * 20, "Schur members");
  o.detail << "in set " << in_set << "/500, worst S error " << worst << ", stabilized "
           << stable << "/10000";
}

void extreme_fragility(Outcome& o) {
  TrajectoryData d = example_data();
  d.T = 2;
  d.u.resize(2);
  d.x.resize(3);
  d.w->resize(2);
  const DataMatrices dm = to_data_matrices(d);
  const InformativityMatrix N = build_N(dm, NoiseModel::norm_bound(2, 2, 1.0));
  const DataFragility c = classify_data_fragility(dm, N);
  o.require(c == DataFragility::ExtremelyFragile, "classification");
  const Mat K = row(-1.35, -1.7);
  const auto w = extreme_fragility_witness(dm, N, K, 1e-2);
  o.require(w.has_value(), "witness");
  if (!w) return;
  o.require(is_consistent(N, w->sys, 1e-7), "witness consistent");
  o.require(near(spectral_norm(w->Delta), 1e-2, 1e-12), "||Delta||");
  o.require(!is_schur(w->sys.A + w->sys.B * (K + w->Delta)), "destabilized");
  o.detail << "classification=" << to_string(c)
           << " perturbed spectral radius=" << w->perturbed_radius;
}

void immunity(Outcome& o) {
  const SystemModel sys{0.5 * Mat::Identity(2, 2), Mat::Zero(2, 1)};
  std::mt19937_64 rng(909);
  const DataMatrices dm = stacked_experiments(rng, sys, Mat::Identity(2, 2), 3);
  const InformativityMatrix N = build_N(dm, NoiseModel::noise_free(2, dm.T()));
  const DataFragility c = classify_data_fragility(dm, N);
  o.require(c == DataFragility::Immune, "classification");
  o.detail << "classification=" << to_string(c);
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"Example 3 check reports informative", check_pipeline},
      {"Example 3 lambda_D(K) for K = -[1.35, 1.7]", data_given_k},
      {"Example 3 lambda_D and K*", data_opt},
      {"Example 2 model radii and mu interval", model_example},
      {"Example 4 aircraft pipeline", aircraft},
      {"Ordering on 25 random systems", ordering},
      {"Recovery on 25 noise-free datasets", recovery},
      {"Gain parameterization round trip", round_trip},
      {"Extreme fragility on truncated data", extreme_fragility},
      {"Immunity of input-free singleton data", immunity},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.ok;
    std::printf("%s %2d. %s: %s\n", o.ok ? "PASS" : "FAIL", index, name,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
