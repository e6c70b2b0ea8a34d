#include "ddfrag/experiment.hpp"

#include <random>
#include <stdexcept>

namespace ddfrag {

namespace {

template <class Dist>
std::vector<Vec> draw(std::mt19937_64& rng, Dist dist, Eigen::Index dim,
                      Eigen::Index T) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = dist(rng);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Vec> explicit_values(const std::vector<Vec>& values,
                                 Eigen::Index dim, Eigen::Index T,
                                 const char* what) {
  if (static_cast<Eigen::Index>(values.size()) != T) {
    throw std::invalid_argument(std::string(what) + ": expected T entries");
  }
  for (const Vec& v : values) {
    if (v.size() != dim) {
      throw std::invalid_argument(std::string(what) + ": wrong entry length");
    }
  }
  return values;
}

}  // namespace

TrajectoryData run_experiment(const ExperimentSpec& spec) {
  spec.sys.validate();
  const Eigen::Index n = spec.sys.n();
  const Eigen::Index m = spec.sys.m();
  if (spec.T < 1) throw std::invalid_argument("run_experiment: T must be >= 1");
  if (spec.x0.size() != n) {
    throw std::invalid_argument("run_experiment: x0 must have length n");
  }
  std::mt19937_64 rng(spec.seed);

  std::vector<Vec> u;
  switch (spec.input.kind) {
    case InputSpec::Kind::Explicit:
      u = explicit_values(spec.input.values, m, spec.T, "input");
      break;
    case InputSpec::Kind::Gaussian:
      if (spec.input.stddev < 0.0) {
        throw std::invalid_argument("input stddev must be >= 0");
      }
      if (spec.input.stddev == 0.0) {
        u.assign(static_cast<std::size_t>(spec.T), Vec::Zero(m));
        break;
      }
      u = draw(rng, std::normal_distribution<double>(0.0, spec.input.stddev), m,
               spec.T);
      break;
  }

  std::vector<Vec> w;
  const double level = spec.noise.level;
  if (level < 0.0) {
    throw std::invalid_argument("noise level must be >= 0");
  }
  const bool random_noise = spec.noise.kind == NoiseSpec::Kind::Uniform ||
                            spec.noise.kind == NoiseSpec::Kind::Gaussian;
  switch (random_noise && level == 0.0 ? NoiseSpec::Kind::Zero : spec.noise.kind) {
    case NoiseSpec::Kind::Zero:
      w.assign(static_cast<std::size_t>(spec.T), Vec::Zero(n));
      break;
    case NoiseSpec::Kind::Explicit:
      w = explicit_values(spec.noise.values, n, spec.T, "noise");
      break;
    case NoiseSpec::Kind::Uniform:
      w = draw(rng, std::uniform_real_distribution<double>(-level, level), n,
               spec.T);
      break;
    case NoiseSpec::Kind::Gaussian:
      w = draw(rng, std::normal_distribution<double>(0.0, level), n, spec.T);
      break;
  }
  return simulate(spec.sys, spec.x0, u, w);
}

Mat noise_matrix(const TrajectoryData& d) {
  if (!d.w) throw std::invalid_argument("noise_matrix: no recorded noise");
  Mat W(d.n, d.T);
  for (Eigen::Index t = 0; t < d.T; ++t) W.col(t) = (*d.w)[static_cast<std::size_t>(t)];
  return W;
}

}  // namespace ddfrag
