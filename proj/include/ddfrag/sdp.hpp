#pragma once

// Solver-agnostic LMI/SDP modelling layer.
//
// A Problem owns a list of real decision scalars. Matrix variables (symmetric,
// rectangular, scalar) are views onto contiguous ranges of those scalars, and
// every constraint is an affine matrix expression F(y) = F0 + sum_i y_i F_i
// that must be positive semidefinite. Objectives are affine scalar
// expressions. The bundled primal-dual interior-point solver works on exactly
// this representation.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddfrag/linalg.hpp"

namespace ddfrag::sdp {

class AffineExpr;

enum class VarKind { Symmetric, Rectangular, Scalar };

/// Handle to a declared matrix variable.
class Variable {
 public:
  Variable() = default;
  Variable(std::string name, VarKind kind, Eigen::Index rows,
           Eigen::Index cols, int offset)
      : name_(std::move(name)),
        kind_(kind),
        rows_(rows),
        cols_(cols),
        offset_(offset) {}

  const std::string& name() const { return name_; }
  VarKind kind() const { return kind_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  int offset() const { return offset_; }
  int num_scalars() const;

  /// The variable as an affine expression of the problem's scalars.
  AffineExpr expr() const;

  /// Rebuild the matrix value from a full scalar vector.
  Mat value(const Vec& y) const;

 private:
  std::string name_;
  VarKind kind_ = VarKind::Scalar;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  int offset_ = 0;
};

/// Matrix-valued affine function of the problem scalars.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(Eigen::Index rows, Eigen::Index cols);
  AffineExpr(const Variable& v);  // NOLINT(google-explicit-constructor)

  static AffineExpr constant(const Mat& value);
  static AffineExpr zero(Eigen::Index rows, Eigen::Index cols);
  static AffineExpr identity(Eigen::Index n);

  /// Assemble a block matrix row by row. Block heights must agree within a
  /// row and block widths within a column.
  static AffineExpr blocks(const std::vector<std::vector<AffineExpr>>& rows);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const Mat& constant_part() const { return constant_; }
  const std::map<int, Mat>& terms() const { return terms_; }

  AffineExpr transpose() const;
  Mat evaluate(const Vec& y) const;
  bool is_symmetric(double tol = 1e-12) const;

  /// Coefficient of a 1x1 expression, i.e. sum_i c_i y_i + c0.
  double scalar_coefficient(int index) const;

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double s);

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) {
    return a += b;
  }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) {
    return a -= b;
  }
  friend AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
  friend AffineExpr operator*(const Mat& M, const AffineExpr& a);
  friend AffineExpr operator*(const AffineExpr& a, const Mat& M);
  friend AffineExpr scalar_times(const AffineExpr& scalar, const Mat& M);

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Mat constant_;
  std::map<int, Mat> terms_;
};

/// Kronecker-style product of a 1x1 expression with a constant matrix
/// (e.g. beta * I).
AffineExpr scalar_times(const AffineExpr& scalar, const Mat& M);

struct SolverOptions {
  /// Relative tolerance on primal/dual residuals and duality gap.
  double feas_tol = 1e-8;
  int max_iterations = 120;
  /// Fraction of the distance to the cone boundary taken per step.
  double step_fraction = 0.95;
  /// Print one line per iteration to stderr.
  bool verbose = false;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(Status s);

struct Solution {
  Status status = Status::NumericalFailure;
  double objective = 0.0;
  /// Every declared variable, evaluated at the returned point.
  std::map<std::string, Mat> values;
  /// Smallest eigenvalue of each user constraint at the returned point.
  std::vector<double> slack;
  Vec scalars;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;

  const Mat& value(const std::string& name) const;
  double scalar(const std::string& name) const;
};

/// Builder for an LMI-constrained linear program over real scalars.
class Problem {
 public:
  Variable add_sym_var(const std::string& name, Eigen::Index size);
  Variable add_rect_var(const std::string& name, Eigen::Index rows,
                        Eigen::Index cols);
  /// Scalar with an optional lower bound (enforced exactly as y >= bound).
  Variable add_scalar_var(const std::string& name,
                          std::optional<double> lower_bound = std::nullopt);

  /// expr >= 0 in the semidefinite sense. Returns the constraint index.
  std::size_t add_psd_constraint(const AffineExpr& expr,
                                 const std::string& label = {});

  void maximize(const AffineExpr& objective);
  void minimize(const AffineExpr& objective);

  const Variable& variable(const std::string& name) const;
  const std::vector<Variable>& variables() const { return variables_; }
  int num_scalars() const { return num_scalars_; }

  struct Constraint {
    AffineExpr expr;
    std::string label;
  };
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<std::pair<int, double>>& lower_bounds() const {
    return lower_bounds_;
  }

  /// Objective as a maximisation: b^T y + b0 (b is negated for minimize).
  Vec objective_vector() const;
  double objective_offset() const;
  bool is_maximization() const { return maximize_; }
  const AffineExpr& objective() const { return objective_; }

  SolverOptions& options() { return options_; }
  const SolverOptions& options() const { return options_; }

  /// Human-readable listing of variables, constraints and the objective.
  std::string dump() const;

 private:
  Variable register_var(const std::string& name, VarKind kind,
                        Eigen::Index rows, Eigen::Index cols);
  void set_objective(const AffineExpr& objective, bool maximize);

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<std::pair<int, double>> lower_bounds_;
  int num_scalars_ = 0;
  AffineExpr objective_ = AffineExpr::zero(1, 1);
  bool maximize_ = true;
  SolverOptions options_;
};

/// Solve with the bundled primal-dual interior-point method. Deterministic for
/// identical problems and options.
Solution solve(const Problem& problem);

struct StrictResult {
  bool feasible = false;
  double margin = 0.0;
  Solution solution;
};

/// Strict-feasibility protocol: maximise t subject to expr_k >= t I for every
/// selected constraint k (all constraints when `which` is empty), t <= 1, and
/// the remaining constraints unchanged. The original objective is discarded.
/// Feasible iff the solve is Optimal and t* > eps_strict.
StrictResult strict_feasible(const Problem& problem,
                             const std::vector<std::size_t>& which = {},
                             double eps_strict = 1e-7);

}  // namespace ddfrag::sdp
