#include "ddfrag/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ddfrag {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

Mat stack_columns(const std::vector<Vec>& v, Eigen::Index rows,
                  std::size_t first, std::size_t count) {
  Mat M(rows, static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) {
    M.col(static_cast<Eigen::Index>(k)) = v[first + k];
  }
  return M;
}

}  // namespace

NoiseModel NoiseModel::norm_bound(Eigen::Index n, Eigen::Index T, double eps) {
  require(eps > 0.0 && std::isfinite(eps), "norm_bound: eps must be > 0");
  require(n >= 1 && T >= 1, "norm_bound: n and T must be >= 1");
  NoiseModel nm;
  nm.n = n;
  nm.T = T;
  nm.Phi11 = eps * eps * Mat::Identity(n, n);
  nm.Phi12 = Mat::Zero(n, T);
  nm.Phi22 = -Mat::Identity(T, T);
  return nm;
}

NoiseModel NoiseModel::noise_free(Eigen::Index n, Eigen::Index T) {
  require(n >= 1 && T >= 1, "noise_free: n and T must be >= 1");
  NoiseModel nm;
  nm.n = n;
  nm.T = T;
  nm.Phi11 = Mat::Zero(n, n);
  nm.Phi12 = Mat::Zero(n, T);
  nm.Phi22 = -Mat::Identity(T, T);
  return nm;
}

NoiseModel NoiseModel::general(const Mat& Phi11, const Mat& Phi12,
                               const Mat& Phi22) {
  NoiseModel nm;
  nm.n = Phi11.rows();
  nm.T = Phi22.rows();
  nm.Phi11 = Phi11;
  nm.Phi12 = Phi12;
  nm.Phi22 = Phi22;
  nm.validate();
  return nm;
}

void NoiseModel::validate() const {
  require(n >= 1 && T >= 1, "NoiseModel: n and T must be >= 1");
  require(Phi11.rows() == n && Phi11.cols() == n, "NoiseModel: Phi11 size");
  require(Phi12.rows() == n && Phi12.cols() == T, "NoiseModel: Phi12 size");
  require(Phi22.rows() == T && Phi22.cols() == T, "NoiseModel: Phi22 size");
  const double s11 = std::max(1.0, Phi11.cwiseAbs().maxCoeff());
  const double s22 = std::max(1.0, Phi22.cwiseAbs().maxCoeff());
  require((Phi11 - Phi11.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * s11,
          "NoiseModel: Phi11 not symmetric");
  require((Phi22 - Phi22.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * s22,
          "NoiseModel: Phi22 not symmetric");
  require(max_eig(Phi22) < 0.0, "NoiseModel: Phi22 must be negative definite");
  Mat full(n + T, n + T);
  full << Phi11, Phi12, Phi12.transpose(), Phi22;
  require(in_pi_class(full, {n, T}), "NoiseModel: Phi is not in the Pi class");
}

bool NoiseModel::admits(const Mat& W, double tol) const {
  require(W.rows() == n && W.cols() == T, "NoiseModel::admits: W size");
  // [I; W^T]^T Phi [I; W^T] >= 0
  const Mat v = Phi11 + Phi12 * W.transpose() + W * Phi12.transpose() +
                W * Phi22 * W.transpose();
  const double scale =
      std::max({1.0, Phi11.cwiseAbs().maxCoeff(), Phi22.cwiseAbs().maxCoeff()});
  return min_eig(symmetrize(v)) >= -tol * scale;
}

Mat SystemModel::stacked() const {
  Mat AB(A.rows(), A.cols() + B.cols());
  AB << A, B;
  return AB;
}

void SystemModel::validate() const {
  require(A.rows() >= 1 && A.rows() == A.cols(), "SystemModel: A not square");
  require(B.rows() == A.rows() && B.cols() >= 1, "SystemModel: B size");
}

void TrajectoryData::validate() const {
  require(n >= 1 && m >= 1 && T >= 1, "TrajectoryData: n, m, T must be >= 1");
  require(static_cast<Eigen::Index>(u.size()) == T,
          "TrajectoryData: need T inputs");
  require(static_cast<Eigen::Index>(x.size()) == T + 1,
          "TrajectoryData: need T+1 states");
  for (const auto& v : u) require(v.size() == m, "TrajectoryData: input size");
  for (const auto& v : x) require(v.size() == n, "TrajectoryData: state size");
  if (w) {
    require(static_cast<Eigen::Index>(w->size()) == T,
            "TrajectoryData: need T noise samples");
    for (const auto& v : *w) require(v.size() == n, "TrajectoryData: noise size");
  }
}

TrajectoryData simulate(const SystemModel& sys, const Vec& x0,
                        const std::vector<Vec>& u, const std::vector<Vec>& w) {
  sys.validate();
  require(!u.empty(), "simulate: need at least one input");
  require(u.size() == w.size(), "simulate: u and w lengths differ");
  require(x0.size() == sys.n(), "simulate: x0 size");
  TrajectoryData d;
  d.n = sys.n();
  d.m = sys.m();
  d.T = static_cast<Eigen::Index>(u.size());
  d.u = u;
  d.w = w;
  d.x.reserve(u.size() + 1);
  d.x.push_back(x0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    require(u[t].size() == d.m && w[t].size() == d.n, "simulate: sample size");
    d.x.push_back(sys.A * d.x.back() + sys.B * u[t] + w[t]);
  }
  return d;
}

DataMatrices to_data_matrices(const TrajectoryData& d) {
  d.validate();
  const auto T = static_cast<std::size_t>(d.T);
  DataMatrices dm;
  dm.Uminus = stack_columns(d.u, d.m, 0, T);
  dm.Xminus = stack_columns(d.x, d.n, 0, T);
  dm.Xplus = stack_columns(d.x, d.n, 1, T);
  return dm;
}

Mat residual(const DataMatrices& dm, const SystemModel& sys) {
  return dm.Xplus - sys.A * dm.Xminus - sys.B * dm.Uminus;
}

InformativityMatrix build_N(const DataMatrices& dm, const NoiseModel& nm) {
  const Eigen::Index n = dm.n();
  const Eigen::Index m = dm.m();
  require(nm.n == n, "build_N: state dimension mismatch");
  require(nm.T == dm.T(), "build_N: sample count mismatch");
  // N = G Phi11 G^T + G Phi12 H^T + H Phi12^T G^T + H Phi22 H^T with
  // G = [I; 0; 0] and H = [X+; -X-; -U-].
  Mat H(2 * n + m, dm.T());
  H << dm.Xplus, -dm.Xminus, -dm.Uminus;
  InformativityMatrix out;
  out.n = n;
  out.m = m;
  out.N = H * nm.Phi22 * H.transpose();
  out.N.topLeftCorner(n, n) += nm.Phi11;
  if (!nm.Phi12.isZero(0.0)) {
    const Mat cross = nm.Phi12 * H.transpose();  // n x (2n+m)
    out.N.topRows(n) += cross;
    out.N.leftCols(n) += cross.transpose();
  }
  out.N = symmetrize(out.N);
  return out;
}

Mat InformativityMatrix::block(int i, int j) const {
  auto offset = [this](int k) -> Eigen::Index {
    return k == 1 ? 0 : k == 2 ? n : 2 * n;
  };
  auto size = [this](int k) -> Eigen::Index { return k == 3 ? m : n; };
  require(i >= 1 && i <= 3 && j >= 1 && j <= 3, "block: index out of range");
  return N.block(offset(i), offset(j), size(i), size(j));
}

bool is_consistent(const InformativityMatrix& N, const SystemModel& sys,
                   double tol) {
  require(sys.n() == N.n && sys.m() == N.m, "is_consistent: dimensions");
  return qmi_member(N.N, {N.n, N.n + N.m}, sys.stacked().transpose(), false,
                    tol);
}

bool is_bounded(const DataMatrices& dm) {
  Mat stacked(dm.n() + dm.m(), dm.T());
  stacked << dm.Xminus, dm.Uminus;
  return numeric_rank(stacked.transpose()) == dm.n() + dm.m();
}

bool has_bounded_sigma(const InformativityMatrix& N) {
  const double scale = spectral_norm(N.N);
  if (scale == 0.0) return false;
  return max_eig(symmetrize(N.lower())) < -kDefaultPinvTol * scale;
}

namespace {

void require_bounded(const InformativityMatrix& N, const char* who) {
  if (!has_bounded_sigma(N)) {
    throw std::invalid_argument(std::string(who) +
                                ": the data-consistent set is unbounded");
  }
}

}  // namespace

Mat singleton_defect_matrix(const InformativityMatrix& N) {
  require_bounded(N, "singleton_defect");
  const Mat C = N.cross();
  const Mat D = N.block(1, 1) - C.transpose() * N.lower().ldlt().solve(C);
  return symmetrize(D);
}

double singleton_defect(const InformativityMatrix& N) {
  return spectral_norm(singleton_defect_matrix(N));
}

bool is_singleton(const InformativityMatrix& N, double rel_tol) {
  const double spread =
      singleton_defect(N) / min_eig(symmetrize(-N.lower()));
  const double center = spectral_norm(recover_true(N).stacked());
  return spread <= rel_tol * std::max(1.0, center * center);
}

SystemModel recover_true(const InformativityMatrix& N) {
  require_bounded(N, "recover_true");
  const Mat AB = -N.lower().ldlt().solve(N.cross()).transpose();
  return {AB.leftCols(N.n), AB.rightCols(N.m)};
}

SigmaParam sigma_param(const InformativityMatrix& N) {
  const SystemModel center = recover_true(N);
  SigmaParam p;
  p.Ahat = center.A;
  p.Bhat = center.B;
  const Mat D = singleton_defect_matrix(N);
  // Round-off can push a zero defect slightly negative.
  p.Lsig = psd_sqrt(D, 1e-8 * std::max(1.0, spectral_norm(N.N)));
  p.Rsig = pd_inv_sqrt(symmetrize(-N.lower()));
  return p;
}

SystemModel sample_sigma(const SigmaParam& p, const Mat& S, double tol) {
  const Eigen::Index n = p.Ahat.rows();
  const Eigen::Index m = p.Bhat.cols();
  require(S.rows() == n && S.cols() == n + m, "sample_sigma: S size");
  require(spectral_norm(S) <= 1.0 + tol, "sample_sigma: ||S|| exceeds 1");
  const Mat AB = p.Lsig * S * p.Rsig;
  return {p.Ahat + AB.leftCols(n), p.Bhat + AB.rightCols(m)};
}

CenteredN center_N(const InformativityMatrix& N) {
  const Eigen::Index n = N.n;
  const Eigen::Index k = N.n + N.m;
  const SystemModel center = recover_true(N);
  CenteredN out;
  out.Tinv = Mat::Identity(n + k, n + k);
  out.Tinv.bottomLeftCorner(k, n) = center.stacked().transpose();
  out.Tinv.bottomRightCorner(k, k) = pd_inv_sqrt(symmetrize(-N.lower()));
  out.Nhat = blkdiag(singleton_defect_matrix(N), -Mat::Identity(k, k));
  return out;
}

Mat random_contraction(std::mt19937_64& rng, Eigen::Index rows,
                       Eigen::Index cols, double factor) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat S(rows, cols);
  for (Eigen::Index i = 0; i < S.size(); ++i) S.data()[i] = g(rng);
  return S * (factor / std::max(1.0, spectral_norm(S)));
}

}  // namespace ddfrag
