#include "ddfrag/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ddfrag::io {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw FormatError(msg); }

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object()) fail(what + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(what + ": missing \"" + key + "\"");
  return *it;
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(what + ": expected a number");
  return j.get<double>();
}

std::string text(const Json& j, const std::string& what) {
  if (!j.is_string()) fail(what + ": expected a string");
  return j.get<std::string>();
}

Eigen::Index count(const Json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    fail(what + ": expected a non-negative integer");
  }
  return static_cast<Eigen::Index>(j.get<long long>());
}

std::vector<Vec> rows_of(const Json& j, Eigen::Index len, const std::string& what) {
  if (!j.is_array()) fail(what + ": expected an array of rows");
  std::vector<Vec> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    Vec v = vector_from_json(j[k], what + "[" + std::to_string(k) + "]");
    if (v.size() != len) {
      fail(what + "[" + std::to_string(k) + "]: expected length " +
           std::to_string(len));
    }
    out.push_back(std::move(v));
  }
  return out;
}

Json rows_to_json(const std::vector<Vec>& rows) {
  Json out = Json::array();
  for (const Vec& v : rows) out.push_back(vector_to_json(v));
  return out;
}

Json real(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t\r");
    const auto e = c.find_last_not_of(" \t\r");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    fail("csv line " + std::to_string(line) + ": bad number \"" + cell + "\"");
  }
}

}  // namespace

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(path + ": " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

void write_json(const std::string& path, const Json& j) { write_text(path, dump(j)); }

Json matrix_to_json(const Mat& M) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(real(M(i, k)));
    out.push_back(std::move(row));
  }
  return out;
}

Mat matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(what + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(what + ": rows must be non-empty arrays");
  Mat M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) fail(what + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number(j[i][k], what);
    }
  }
  return M;
}

Json vector_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real(v(i)));
  return out;
}

Vec vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(what + ": expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  }
  return v;
}

Json dataset_to_json(const TrajectoryData& d) {
  Json j;
  j["n"] = d.n;
  j["m"] = d.m;
  j["T"] = d.T;
  j["u"] = rows_to_json(d.u);
  j["x"] = rows_to_json(d.x);
  if (d.w) j["w"] = rows_to_json(*d.w);
  return j;
}

TrajectoryData dataset_from_json(const Json& j) {
  TrajectoryData d;
  d.n = count(field(j, "n", "dataset"), "dataset.n");
  d.m = count(field(j, "m", "dataset"), "dataset.m");
  d.T = count(field(j, "T", "dataset"), "dataset.T");
  if (d.n < 1 || d.m < 1) fail("dataset: n and m must be >= 1");
  if (d.T < 1) fail("dataset: T must be >= 1");
  d.u = rows_of(field(j, "u", "dataset"), d.m, "dataset.u");
  d.x = rows_of(field(j, "x", "dataset"), d.n, "dataset.x");
  if (static_cast<Eigen::Index>(d.u.size()) != d.T) fail("dataset.u: expected T rows");
  if (static_cast<Eigen::Index>(d.x.size()) != d.T + 1) {
    fail("dataset.x: expected T + 1 rows");
  }
  if (auto it = j.find("w"); it != j.end() && !it->is_null()) {
    d.w = rows_of(*it, d.n, "dataset.w");
    if (static_cast<Eigen::Index>(d.w->size()) != d.T) fail("dataset.w: expected T rows");
  }
  return d;
}

TrajectoryData dataset_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("csv: empty input");
  const std::vector<std::string> head = split(line);
  if (head.empty() || head[0] != "t") fail("csv: header must start with t");
  TrajectoryData d;
  std::size_t k = 1;
  while (k < head.size() && head[k] == "u" + std::to_string(d.m + 1)) {
    ++d.m;
    ++k;
  }
  while (k < head.size() && head[k] == "x" + std::to_string(d.n + 1)) {
    ++d.n;
    ++k;
  }
  if (k != head.size() || d.m < 1 || d.n < 1) {
    fail("csv: header must be t,u1..um,x1..xn");
  }
  std::size_t lineno = 1;
  bool last = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (last) fail("csv line " + std::to_string(lineno) + ": rows after the final state");
    const std::vector<std::string> cells = split(line);
    if (cells.size() != head.size()) {
      fail("csv line " + std::to_string(lineno) + ": expected " +
           std::to_string(head.size()) + " cells");
    }
    if (parse_cell(cells[0], lineno) != static_cast<double>(d.x.size())) {
      fail("csv line " + std::to_string(lineno) + ": t out of sequence");
    }
    bool empty_u = true;
    bool full_u = true;
    for (Eigen::Index i = 0; i < d.m; ++i) {
      (cells[1 + i].empty() ? full_u : empty_u) = false;
    }
    if (!full_u && !empty_u) {
      fail("csv line " + std::to_string(lineno) + ": partial input row");
    }
    Vec x(d.n);
    for (Eigen::Index i = 0; i < d.n; ++i) {
      x(i) = parse_cell(cells[1 + d.m + i], lineno);
    }
    d.x.push_back(x);
    if (full_u) {
      Vec u(d.m);
      for (Eigen::Index i = 0; i < d.m; ++i) u(i) = parse_cell(cells[1 + i], lineno);
      d.u.push_back(u);
    } else {
      last = true;
    }
  }
  // A final row with inputs is allowed; its input is dropped.
  if (!last && !d.u.empty()) d.u.pop_back();
  d.T = static_cast<Eigen::Index>(d.x.size()) - 1;
  if (d.T < 1) fail("csv: at least two samples are required");
  return d;
}

TrajectoryData read_dataset(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    std::ifstream in(path);
    if (!in) fail(path + ": cannot open");
    return dataset_from_csv(in);
  }
  return dataset_from_json(read_json(path));
}

NoiseModel noise_from_json(const Json& j, Eigen::Index n, Eigen::Index T) {
  const std::string k = text(field(j, "kind", "noise"), "noise.kind");
  try {
    if (k == "norm_bound") {
      const double eps = number(field(j, "eps", "noise"), "noise.eps");
      if (eps < 0.0) fail("noise.eps: must be >= 0");
      return NoiseModel::norm_bound(n, T, eps);
    }
    if (k == "general") {
      NoiseModel nm = NoiseModel::general(
          matrix_from_json(field(j, "Phi11", "noise"), "noise.Phi11"),
          matrix_from_json(field(j, "Phi12", "noise"), "noise.Phi12"),
          matrix_from_json(field(j, "Phi22", "noise"), "noise.Phi22"));
      if (nm.n != n || nm.T != T) fail("noise: block sizes do not match the dataset");
      return nm;
    }
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  fail("noise.kind: unknown kind \"" + k + "\"");
}

Json system_to_json(const SystemModel& s) {
  Json j;
  j["A"] = matrix_to_json(s.A);
  j["B"] = matrix_to_json(s.B);
  return j;
}

SystemModel system_from_json(const Json& j) {
  SystemModel s{matrix_from_json(field(j, "A", "system"), "system.A"),
                matrix_from_json(field(j, "B", "system"), "system.B")};
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return s;
}

Json gain_to_json(const Mat& K) {
  Json j;
  j["K"] = matrix_to_json(K);
  return j;
}

Mat gain_from_json(const Json& j) { return matrix_from_json(field(j, "K", "gain"), "gain.K"); }

ExperimentSpec experiment_from_json(const Json& j, const SystemModel& sys,
                                    std::uint64_t seed) {
  ExperimentSpec spec;
  spec.sys = sys;
  spec.seed = seed;
  spec.x0 = vector_from_json(field(j, "x0", "experiment"), "experiment.x0");
  spec.T = count(field(j, "T", "experiment"), "experiment.T");

  const Json& in = field(j, "input", "experiment");
  const std::string ik = text(field(in, "kind", "experiment.input"),
                               "experiment.input.kind");
  if (ik == "explicit") {
    spec.input.kind = InputSpec::Kind::Explicit;
    spec.input.values = rows_of(field(in, "values", "experiment.input"), sys.m(),
                                "experiment.input.values");
  } else if (ik == "gaussian") {
    spec.input.kind = InputSpec::Kind::Gaussian;
    spec.input.stddev = number(field(in, "stddev", "experiment.input"),
                               "experiment.input.stddev");
  } else {
    fail("experiment.input.kind: unknown kind \"" + ik + "\"");
  }

  const Json& nz = field(j, "noise", "experiment");
  const std::string nk = text(field(nz, "kind", "experiment.noise"),
                               "experiment.noise.kind");
  if (nk == "zero") {
    spec.noise.kind = NoiseSpec::Kind::Zero;
  } else if (nk == "explicit") {
    spec.noise.kind = NoiseSpec::Kind::Explicit;
    spec.noise.values = rows_of(field(nz, "values", "experiment.noise"), sys.n(),
                                "experiment.noise.values");
  } else if (nk == "uniform" || nk == "gaussian") {
    spec.noise.kind = nk == "uniform" ? NoiseSpec::Kind::Uniform : NoiseSpec::Kind::Gaussian;
    spec.noise.level = number(field(nz, "level", "experiment.noise"),
                              "experiment.noise.level");
  } else {
    fail("experiment.noise.kind: unknown kind \"" + nk + "\"");
  }
  return spec;
}

Json certificate_to_json(const GainCertificate& c) {
  Json j;
  j["P"] = matrix_to_json(c.P);
  j["alpha"] = real(c.alpha);
  j["K"] = matrix_to_json(c.K);
  j["margin"] = real(c.margin);
  j["source"] = to_string(c.source);
  return j;
}

Json report_to_json(const FragilityReport& r) {
  Json j;
  j["kind"] = to_string(r.kind);
  j["lambda"] = real(r.lambda);
  j["beta_star"] = real(r.beta_star);
  j["K_star"] = matrix_to_json(r.K_star);
  j["Q_star"] = matrix_to_json(r.Q_star);
  j["zeta_star"] = real(r.zeta_star);
  j["verified"] = r.verified;
  j["seed"] = r.seed;
  j["status"] = to_string(r.status);
  j["solver_status"] = sdp::to_string(r.solver_status);
  j["L_star"] = matrix_to_json(r.L_star);
  j["singleton_fallback"] = r.singleton_fallback;
  j["warnings"] = r.warnings;
  return j;
}

Json verify_to_json(const VerifyReport& v, double lambda, std::uint64_t seed) {
  Json j;
  j["passed"] = v.passed;
  j["lambda"] = real(lambda);
  j["tested"] = v.tested;
  j["failures"] = v.failures;
  j["seed"] = seed;
  if (v.counterexample_system) {
    j["counterexample"] = system_to_json(*v.counterexample_system);
    j["counterexample"]["Delta"] = matrix_to_json(*v.counterexample_delta);
  }
  return j;
}

}  // namespace ddfrag::io
