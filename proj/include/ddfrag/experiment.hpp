#pragma once

// Open-loop experiments: input and noise sequences, explicit or drawn from a
// seeded generator, fed through the simulator.

#include <cstdint>
#include <vector>

#include "ddfrag/data_model.hpp"

namespace ddfrag {

struct InputSpec {
  enum class Kind { Explicit, Gaussian };
  Kind kind = Kind::Gaussian;
  std::vector<Vec> values;  // Explicit
  double stddev = 1.0;      // Gaussian, zero mean
};

struct NoiseSpec {
  enum class Kind { Zero, Explicit, Uniform, Gaussian };
  Kind kind = Kind::Zero;
  std::vector<Vec> values;  // Explicit
  /// Uniform entries lie in [-level, level]; Gaussian entries have stddev
  /// level.
  double level = 0.0;
};

struct ExperimentSpec {
  SystemModel sys;
  Vec x0;
  Eigen::Index T = 0;
  InputSpec input;
  NoiseSpec noise;
  std::uint64_t seed = 1;
};

/// Inputs are drawn before noise from one generator seeded with spec.seed.
TrajectoryData run_experiment(const ExperimentSpec& spec);

/// Columns w(0) ... w(T-1) of the recorded noise; throws when absent.
Mat noise_matrix(const TrajectoryData& d);

}  // namespace ddfrag
