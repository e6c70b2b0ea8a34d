// ddfrag: command-line front end.
//
// Exit codes: 0 success, 2 infeasible / not certifiable / unverified,
// 1 usage, input or numerical error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ddfrag/experiment.hpp"
#include "ddfrag/fragility.hpp"
#include "ddfrag/io.hpp"
#include "ddfrag/stabilization.hpp"

namespace {

using namespace ddfrag;
using io::Json;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNegative = 2;

struct Config {
  std::string dataset;
  std::string noise;
  std::string system;
  std::string gain;
  std::string spec;
  std::string report;
  std::string out;
  std::string mode;
  std::string grid;
  std::uint64_t seed = 1;
  double tol = 1e-7;
  double lambda = -1.0;
  int samples = 1000;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required ") + flag);
}

void emit(const Config& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    io::write_text(c.out, text);
  }
}

struct Data {
  TrajectoryData traj;
  DataMatrices dm;
  InformativityMatrix N;
};

Data load_data(const Config& c) {
  require(c.dataset, "--dataset");
  require(c.noise, "--noise");
  Data d;
  d.traj = io::read_dataset(c.dataset);
  d.traj.validate();
  d.dm = to_data_matrices(d.traj);
  d.N = build_N(d.dm, io::noise_from_json(io::read_json(c.noise), d.traj.n, d.traj.T));
  return d;
}

SystemModel load_system(const Config& c) {
  require(c.system, "--system");
  return io::system_from_json(io::read_json(c.system));
}

Mat load_gain(const Config& c) {
  require(c.gain, "--gain");
  return io::gain_from_json(io::read_json(c.gain));
}

VerifyOptions verify_options(const Config& c) {
  VerifyOptions v;
  v.samples = c.samples;
  v.seed = c.seed;
  return v;
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const Config& c) {
  require(c.spec, "--spec");
  require(c.out, "--out");
  const SystemModel sys = load_system(c);
  const ExperimentSpec spec = io::experiment_from_json(io::read_json(c.spec), sys, c.seed);
  const TrajectoryData d = run_experiment(spec);
  if (!c.noise.empty()) {
    const NoiseModel nm = io::noise_from_json(io::read_json(c.noise), d.n, d.T);
    if (!nm.admits(noise_matrix(d))) {
      std::cerr << "simulate: realized noise violates the declared bound; "
                   "nothing written\n";
      return kNegative;
    }
  }
  emit(c, io::dump(io::dataset_to_json(d)));
  return kOk;
}

// ---- check / design -------------------------------------------------------

int cmd_check(const Config& c) {
  const Data d = load_data(c);
  Json j;
  const bool bounded = has_bounded_sigma(d.N);
  const DataFragility cls = classify_data_fragility(d.dm, d.N);
  std::optional<InformativityResult> r;
  if (bounded) r = check_informativity_full(d.N, c.tol);
  j["informative"] = r && r->verdict == Verdict::Informative;
  j["verdict"] = r ? to_string(r->verdict) : "UnboundedConsistentSet";
  j["margin"] = r ? r->margin : 0.0;
  j["classification"] = to_string(cls);
  j["bounded"] = bounded;
  j["singleton"] = bounded && is_singleton(d.N);
  j["singleton_defect"] = bounded ? singleton_defect(d.N) : -1.0;
  j["certificate"] = r && r->verdict == Verdict::Informative
                         ? io::certificate_to_json(r->certificate)
                         : Json(nullptr);
  j["seed"] = c.seed;
  emit(c, io::dump(j));
  if (r && r->verdict == Verdict::NumericalFailure) return kError;
  return r && r->verdict == Verdict::Informative ? kOk : kNegative;
}

int cmd_design(const Config& c) {
  const Data d = load_data(c);
  if (!has_bounded_sigma(d.N)) {
    std::cerr << "design: the consistent set is unbounded; no certificate\n";
    return kNegative;
  }
  const InformativityResult r = check_informativity_reduced(d.N, c.tol);
  if (r.verdict == Verdict::NumericalFailure) {
    std::cerr << "design: solver failure\n";
    return kError;
  }
  if (r.verdict != Verdict::Informative) {
    std::cerr << "design: data are not informative for quadratic stabilization\n";
    return kNegative;
  }
  emit(c, io::dump(io::certificate_to_json(r.certificate)));
  return kOk;
}

// ---- fragility / verify ---------------------------------------------------

int report_exit(const FragilityReport& r) {
  switch (r.status) {
    case FragilityStatus::Certified:
      return r.verified ? kOk : kNegative;
    case FragilityStatus::NotCertifiable:
      return kNegative;
    case FragilityStatus::NumericalFailure:
      return kError;
  }
  return kError;
}

int cmd_fragility(const Config& c) {
  const VerifyOptions v = verify_options(c);
  if (c.mode == "mu") {
    MuOptions o;
    o.seed = c.seed;
    const MuEstimate mu = mu_oracle_model(load_system(c), load_gain(c), o);
    Json j;
    j["kind"] = "MuOracle";
    j["rho_lo"] = mu.rho_lo;
    j["rho_hi"] = std::isfinite(mu.rho_hi) ? Json(mu.rho_hi) : Json(nullptr);
    j["witness"] = io::matrix_to_json(mu.witness);
    j["samples"] = mu.samples;
    j["seed"] = mu.seed;
    emit(c, io::dump(j));
    return kOk;
  }
  FragilityReport r;
  if (c.mode == "model-k") {
    r = lambda_model_given_k(load_system(c), load_gain(c), v);
  } else if (c.mode == "model-opt") {
    r = lambda_model_opt(load_system(c), v);
  } else if (c.mode == "data-k") {
    const Mat K = load_gain(c);
    r = lambda_data_given_k(load_data(c).N, K, v);
  } else if (c.mode == "data-opt") {
    r = lambda_data_opt(load_data(c).N, v);
  } else {
    throw UsageError("--mode must be model-k, model-opt, data-k, data-opt or mu");
  }
  emit(c, io::dump(io::report_to_json(r)));
  return report_exit(r);
}

int cmd_verify(const Config& c) {
  Mat K;
  double lambda = c.lambda;
  if (!c.report.empty()) {
    const Json rep = io::read_json(c.report);
    if (!rep.contains("K_star") || !rep.contains("lambda") || !rep["lambda"].is_number()) {
      throw io::FormatError(c.report + ": not a fragility report");
    }
    K = io::matrix_from_json(rep["K_star"], "report.K_star");
    if (lambda < 0.0) lambda = rep["lambda"].get<double>();
  } else {
    K = load_gain(c);
  }
  if (lambda < 0.0) throw UsageError("verify needs --lambda or --report");
  const VerifyOptions v = verify_options(c);
  const VerifyReport rep = c.dataset.empty()
                               ? verify_perturbation(load_system(c), K, lambda, v)
                               : verify_perturbation(load_data(c).N, K, lambda, v);
  emit(c, io::dump(io::verify_to_json(rep, lambda, c.seed)));
  return rep.passed ? kOk : kNegative;
}

// ---- contour --------------------------------------------------------------

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 0;
  double at(int k) const { return lo + (hi - lo) * k / (steps - 1); }
};

std::vector<Axis> parse_grid(const std::string& spec) {
  std::vector<Axis> axes;
  std::stringstream all(spec);
  std::string part;
  while (std::getline(all, part, ',')) {
    Axis a;
    char c1 = 0;
    char c2 = 0;
    std::istringstream s(part);
    if (!(s >> a.lo >> c1 >> a.hi >> c2 >> a.steps) || c1 != ':' || c2 != ':' ||
        !(s >> std::ws).eof()) {
      throw UsageError("--grid must look like k1min:k1max:steps,k2min:k2max:steps");
    }
    if (a.steps < 2) throw UsageError("--grid needs at least 2 steps per axis");
    axes.push_back(a);
  }
  if (axes.size() != 2) throw UsageError("--grid needs exactly two axes");
  return axes;
}

int cmd_contour(const Config& c) {
  require(c.grid, "--grid");
  const std::vector<Axis> axes = parse_grid(c.grid);
  const bool data = c.mode == "data" || c.mode == "data-k";
  if (!data && c.mode != "model" && c.mode != "model-k") {
    throw UsageError("contour --mode must be model or data");
  }
  std::optional<SystemModel> sys;
  std::optional<Data> d;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  if (data) {
    d = load_data(c);
    m = d->N.m;
    n = d->N.n;
  } else {
    sys = load_system(c);
    m = sys->m();
    n = sys->n();
  }
  if (m * n != 2) throw UsageError("contour needs a gain with exactly two entries");

  const int rows = axes[0].steps;
  const int cols = axes[1].steps;
  std::vector<double> lam(static_cast<std::size_t>(rows * cols), -1.0);
  const VerifyOptions v = verify_options(c);
  auto cell = [&](int idx) {
    Mat K(m, n);
    K.data()[0] = axes[0].at(idx / cols);
    K.data()[1] = axes[1].at(idx % cols);
    FragilityReport r;
    if (data) {
      r = lambda_data_given_k(d->N, K, v);
    } else {
      if (!is_schur(sys->A + sys->B * K)) return;
      r = lambda_model_given_k(*sys, K, v);
    }
    if (r.status == FragilityStatus::Certified) lam[static_cast<std::size_t>(idx)] = r.lambda;
  };

  std::atomic<int> next{0};
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int idx = next++; idx < rows * cols; idx = next++) cell(idx);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::string text = "k1,k2,lambda\n";
  char buf[96];
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", axes[0].at(i), axes[1].at(k),
                    lam[static_cast<std::size_t>(i * cols + k)]);
      text += buf;
    }
  }
  emit(c, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven stabilization and gain fragility analysis"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--dataset", c.dataset, "Dataset JSON or CSV");
    sub->add_option("--noise", c.noise, "Noise model JSON");
    sub->add_option("--system", c.system, "System JSON {A, B}");
    sub->add_option("--gain", c.gain, "Gain JSON {K}");
    sub->add_option("--out", c.out, "Output path (stdout when absent)");
    sub->add_option("--seed", c.seed, "Seed for every random draw");
    sub->add_option("--tol", c.tol, "Strict feasibility margin");
    sub->add_option("--mode", c.mode, "Analysis mode");
    sub->add_option("--grid", c.grid, "k1min:k1max:steps,k2min:k2max:steps");
    sub->add_option("--samples", c.samples, "Verification samples")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate an experiment");
  common(simulate);
  simulate->add_option("--spec", c.spec, "Experiment JSON {x0, T, input, noise}");
  CLI::App* check = app.add_subcommand("check", "Informativity and classification");
  common(check);
  CLI::App* design = app.add_subcommand("design", "Certificate (P, alpha, K)");
  common(design);
  CLI::App* fragility = app.add_subcommand("fragility", "Fragility radius");
  common(fragility);
  CLI::App* verify = app.add_subcommand("verify", "Monte Carlo perturbation check");
  common(verify);
  verify->add_option("--report", c.report, "Fragility report supplying K* and lambda");
  verify->add_option("--lambda", c.lambda, "Radius to test");
  CLI::App* contour = app.add_subcommand("contour", "Radius over a gain grid (CSV)");
  common(contour);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*simulate) return cmd_simulate(c);
    if (*check) return cmd_check(c);
    if (*design) return cmd_design(c);
    if (*fragility) return cmd_fragility(c);
    if (*verify) return cmd_verify(c);
    if (*contour) return cmd_contour(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
