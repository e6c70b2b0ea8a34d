#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddfrag/sdp.hpp"

namespace ddfrag::sdp {

int Variable::num_scalars() const {
  switch (kind_) {
    case VarKind::Symmetric:
      return static_cast<int>(rows_ * (rows_ + 1) / 2);
    case VarKind::Rectangular:
      return static_cast<int>(rows_ * cols_);
    case VarKind::Scalar:
      return 1;
  }
  return 0;
}

AffineExpr Variable::expr() const { return AffineExpr(*this); }

Mat Variable::value(const Vec& y) const { return expr().evaluate(y); }

AffineExpr::AffineExpr(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols), constant_(Mat::Zero(rows, cols)) {}

AffineExpr::AffineExpr(const Variable& v)
    : AffineExpr(v.rows(), v.cols()) {
  int k = v.offset();
  switch (v.kind()) {
    case VarKind::Symmetric:
      // Upper-triangular entries, column by column.
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          Mat E = Mat::Zero(rows_, cols_);
          E(i, j) = 1.0;
          E(j, i) = 1.0;
          terms_.emplace(k++, std::move(E));
        }
      }
      break;
    case VarKind::Rectangular:
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          Mat E = Mat::Zero(rows_, cols_);
          E(i, j) = 1.0;
          terms_.emplace(k++, std::move(E));
        }
      }
      break;
    case VarKind::Scalar:
      terms_.emplace(k, Mat::Ones(1, 1));
      break;
  }
}

AffineExpr AffineExpr::constant(const Mat& value) {
  AffineExpr e(value.rows(), value.cols());
  e.constant_ = value;
  return e;
}

AffineExpr AffineExpr::zero(Eigen::Index rows, Eigen::Index cols) {
  return AffineExpr(rows, cols);
}

AffineExpr AffineExpr::identity(Eigen::Index n) {
  return constant(Mat::Identity(n, n));
}

AffineExpr AffineExpr::blocks(
    const std::vector<std::vector<AffineExpr>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw std::invalid_argument("AffineExpr::blocks: empty block layout");
  }
  const std::size_t ncols = rows.front().size();
  std::vector<Eigen::Index> heights;
  std::vector<Eigen::Index> widths;
  for (const auto& r : rows) {
    if (r.size() != ncols) {
      throw std::invalid_argument("AffineExpr::blocks: ragged block layout");
    }
    heights.push_back(r.front().rows());
  }
  for (const auto& b : rows.front()) widths.push_back(b.cols());

  Eigen::Index total_rows = 0;
  Eigen::Index total_cols = 0;
  for (auto h : heights) total_rows += h;
  for (auto w : widths) total_cols += w;
  AffineExpr out(total_rows, total_cols);

  Eigen::Index r0 = 0;
  for (std::size_t bi = 0; bi < rows.size(); ++bi) {
    Eigen::Index c0 = 0;
    for (std::size_t bj = 0; bj < ncols; ++bj) {
      const AffineExpr& b = rows[bi][bj];
      if (b.rows() != heights[bi] || b.cols() != widths[bj]) {
        throw std::invalid_argument(
            "AffineExpr::blocks: inconsistent block dimensions");
      }
      out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
      for (const auto& [k, coef] : b.terms_) {
        auto it = out.terms_.find(k);
        if (it == out.terms_.end()) {
          it = out.terms_.emplace(k, Mat::Zero(total_rows, total_cols)).first;
        }
        it->second.block(r0, c0, b.rows(), b.cols()) += coef;
      }
      c0 += widths[bj];
    }
    r0 += heights[bi];
  }
  return out;
}

AffineExpr AffineExpr::transpose() const {
  AffineExpr out(cols_, rows_);
  out.constant_ = constant_.transpose();
  for (const auto& [k, coef] : terms_) out.terms_.emplace(k, coef.transpose());
  return out;
}

Mat AffineExpr::evaluate(const Vec& y) const {
  Mat out = constant_;
  for (const auto& [k, coef] : terms_) {
    if (k >= y.size()) {
      throw std::out_of_range("AffineExpr::evaluate: scalar vector too short");
    }
    out += y(k) * coef;
  }
  return out;
}

bool AffineExpr::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  auto asym = [tol](const Mat& M) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    return (M - M.transpose()).cwiseAbs().maxCoeff() > tol * scale;
  };
  if (asym(constant_)) return false;
  for (const auto& [k, coef] : terms_) {
    if (asym(coef)) return false;
  }
  return true;
}

double AffineExpr::scalar_coefficient(int index) const {
  if (rows_ != 1 || cols_ != 1) {
    throw std::invalid_argument("scalar_coefficient: expression is not 1x1");
  }
  const auto it = terms_.find(index);
  return it == terms_.end() ? 0.0 : it->second(0, 0);
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw std::invalid_argument("AffineExpr: dimension mismatch in sum");
  }
  constant_ += other.constant_;
  for (const auto& [k, coef] : other.terms_) {
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      terms_.emplace(k, coef);
    } else {
      it->second += coef;
    }
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  return *this += -1.0 * other;
}

AffineExpr& AffineExpr::operator*=(double s) {
  constant_ *= s;
  for (auto& [k, coef] : terms_) coef *= s;
  return *this;
}

AffineExpr operator*(const Mat& M, const AffineExpr& a) {
  if (M.cols() != a.rows_) {
    throw std::invalid_argument("AffineExpr: dimension mismatch in product");
  }
  AffineExpr out(M.rows(), a.cols_);
  out.constant_ = M * a.constant_;
  for (const auto& [k, coef] : a.terms_) out.terms_.emplace(k, M * coef);
  return out;
}

AffineExpr operator*(const AffineExpr& a, const Mat& M) {
  if (a.cols_ != M.rows()) {
    throw std::invalid_argument("AffineExpr: dimension mismatch in product");
  }
  AffineExpr out(a.rows_, M.cols());
  out.constant_ = a.constant_ * M;
  for (const auto& [k, coef] : a.terms_) out.terms_.emplace(k, coef * M);
  return out;
}

AffineExpr scalar_times(const AffineExpr& scalar, const Mat& M) {
  if (scalar.rows() != 1 || scalar.cols() != 1) {
    throw std::invalid_argument("scalar_times: expression is not 1x1");
  }
  AffineExpr out = AffineExpr::constant(scalar.constant_(0, 0) * M);
  for (const auto& [k, coef] : scalar.terms_) {
    out.terms_.emplace(k, coef(0, 0) * M);
  }
  return out;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "Optimal";
    case Status::Infeasible:
      return "Infeasible";
    case Status::Unbounded:
      return "Unbounded";
    case Status::NumericalFailure:
      return "NumericalFailure";
  }
  return "Unknown";
}

const Mat& Solution::value(const std::string& name) const {
  const auto it = values.find(name);
  if (it == values.end()) {
    throw std::out_of_range("Solution::value: unknown variable " + name);
  }
  return it->second;
}

double Solution::scalar(const std::string& name) const {
  return value(name)(0, 0);
}

Variable Problem::register_var(const std::string& name, VarKind kind,
                               Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("Problem: variable sizes must be >= 1");
  }
  for (const auto& v : variables_) {
    if (v.name() == name) {
      throw std::invalid_argument("Problem: duplicate variable name " + name);
    }
  }
  Variable v(name, kind, rows, cols, num_scalars_);
  num_scalars_ += v.num_scalars();
  variables_.push_back(v);
  return v;
}

Variable Problem::add_sym_var(const std::string& name, Eigen::Index size) {
  return register_var(name, VarKind::Symmetric, size, size);
}

Variable Problem::add_rect_var(const std::string& name, Eigen::Index rows,
                               Eigen::Index cols) {
  return register_var(name, VarKind::Rectangular, rows, cols);
}

Variable Problem::add_scalar_var(const std::string& name,
                                 std::optional<double> lower_bound) {
  Variable v = register_var(name, VarKind::Scalar, 1, 1);
  if (lower_bound) lower_bounds_.emplace_back(v.offset(), *lower_bound);
  return v;
}

std::size_t Problem::add_psd_constraint(const AffineExpr& expr,
                                        const std::string& label) {
  if (!expr.is_symmetric(1e-12)) {
    throw std::invalid_argument("Problem: constraint expression " + label +
                                " is not symmetric");
  }
  for (const auto& [k, coef] : expr.terms()) {
    if (k >= num_scalars_) {
      throw std::invalid_argument(
          "Problem: constraint references an undeclared variable");
    }
  }
  constraints_.push_back({expr, label});
  return constraints_.size() - 1;
}

void Problem::set_objective(const AffineExpr& objective, bool maximize) {
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw std::invalid_argument("Problem: objective must be a 1x1 expression");
  }
  objective_ = objective;
  maximize_ = maximize;
}

void Problem::maximize(const AffineExpr& objective) {
  set_objective(objective, true);
}

void Problem::minimize(const AffineExpr& objective) {
  set_objective(objective, false);
}

Vec Problem::objective_vector() const {
  Vec b = Vec::Zero(num_scalars_);
  for (const auto& [k, coef] : objective_.terms()) {
    if (k < num_scalars_) b(k) = coef(0, 0);
  }
  return maximize_ ? b : Vec(-b);
}

double Problem::objective_offset() const {
  const double c = objective_.constant_part()(0, 0);
  return maximize_ ? c : -c;
}

const Variable& Problem::variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name() == name) return v;
  }
  throw std::out_of_range("Problem: unknown variable " + name);
}

std::string Problem::dump() const {
  std::ostringstream os;
  os << "# sdp problem: " << num_scalars_ << " scalars\n";
  for (const auto& v : variables_) {
    const char* kind = v.kind() == VarKind::Symmetric     ? "sym"
                       : v.kind() == VarKind::Rectangular ? "rect"
                                                          : "scalar";
    os << "var " << v.name() << ' ' << kind << ' ' << v.rows() << 'x'
       << v.cols() << " scalars[" << v.offset() << ','
       << v.offset() + v.num_scalars() << ")\n";
  }
  for (const auto& [k, lb] : lower_bounds_) {
    os << "bound y" << k << " >= " << lb << '\n';
  }
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    os << "psd " << i << " '" << c.label << "' size " << c.expr.rows()
       << " terms " << c.expr.terms().size() << '\n';
    os << "  F0 =\n" << c.expr.constant_part() << '\n';
    for (const auto& [k, coef] : c.expr.terms()) {
      os << "  F[y" << k << "] =\n" << coef << '\n';
    }
  }
  os << (maximize_ ? "maximize" : "minimize");
  for (const auto& [k, coef] : objective_.terms()) {
    os << ' ' << (coef(0, 0) >= 0 ? '+' : '-') << std::abs(coef(0, 0))
       << "*y" << k;
  }
  os << " + " << objective_.constant_part()(0, 0) << '\n';
  return os.str();
}

}  // namespace ddfrag::sdp
