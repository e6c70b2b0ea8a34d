#pragma once

// JSON and CSV file formats. Every writer emits pretty-printed JSON with a
// fixed key order, so identical inputs give byte-identical files.

#include <istream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ddfrag/experiment.hpp"
#include "ddfrag/fragility.hpp"
#include "ddfrag/stabilization.hpp"

namespace ddfrag::io {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json read_json(const std::string& path);
/// Two-space indentation and a trailing newline.
std::string dump(const Json& j);
void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const Json& j);

/// Row-major nested arrays; a 1 x n matrix is [[...]].
Json matrix_to_json(const Mat& M);
Mat matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vec& v);
Vec vector_from_json(const Json& j, const std::string& what);

// {"n","m","T","u":[[m];T],"x":[[n];T+1],"w"?:[[n];T]}
Json dataset_to_json(const TrajectoryData& d);
TrajectoryData dataset_from_json(const Json& j);

/// Header t,u1..um,x1..xn; the final row leaves the input cells empty.
TrajectoryData dataset_from_csv(std::istream& in);
TrajectoryData read_dataset(const std::string& path);  // .csv or JSON

// {"kind":"norm_bound","eps"} or {"kind":"general","Phi11","Phi12","Phi22"}
NoiseModel noise_from_json(const Json& j, Eigen::Index n, Eigen::Index T);

Json system_to_json(const SystemModel& s);
SystemModel system_from_json(const Json& j);
Json gain_to_json(const Mat& K);
Mat gain_from_json(const Json& j);

/// Simulation spec: {"x0", "T", "input": {...}, "noise": {...}}. Input kinds
/// are explicit (values) and gaussian (stddev); noise kinds are zero,
/// explicit (values), uniform and gaussian (level).
ExperimentSpec experiment_from_json(const Json& j, const SystemModel& sys,
                                    std::uint64_t seed);

Json certificate_to_json(const GainCertificate& c);
Json report_to_json(const FragilityReport& r);
Json verify_to_json(const VerifyReport& v, double lambda, std::uint64_t seed);

}  // namespace ddfrag::io
