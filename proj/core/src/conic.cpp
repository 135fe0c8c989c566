#include "dmpc/conic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmpc {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

LinExpr LinExpr::term(int index, double coeff, double constant) {
  LinExpr e;
  if (coeff != 0.0) e.coeffs_[index] = coeff;
  e.constant_ = constant;
  return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  for (const auto& [k, v] : o.coeffs_) {
    auto [it, inserted] = coeffs_.try_emplace(k, v);
    if (!inserted) it->second += v;
  }
  constant_ += o.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [k, v] : o.coeffs_) {
    auto [it, inserted] = coeffs_.try_emplace(k, -v);
    if (!inserted) it->second -= v;
  }
  constant_ -= o.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& [k, v] : coeffs_) v *= s;
  constant_ *= s;
  return *this;
}

double LinExpr::eval(const Eigen::VectorXd& x) const {
  double acc = constant_;
  for (const auto& [k, v] : coeffs_) acc += v * x[k];
  return acc;
}

bool LinExpr::same_as(const LinExpr& o, double tol) const {
  if (std::abs(constant_ - o.constant_) > tol) return false;
  if (coeffs_.size() != o.coeffs_.size()) return false;
  auto it = o.coeffs_.begin();
  for (const auto& [k, v] : coeffs_) {
    if (it->first != k || std::abs(it->second - v) > tol) return false;
    ++it;
  }
  return true;
}

AffVec operator+(const AffVec& a, const AffVec& b) {
  if (a.size() != b.size()) throw DimensionError("AffVec size mismatch in +");
  AffVec r = a;
  for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

AffVec operator-(const AffVec& a, const AffVec& b) {
  if (a.size() != b.size()) throw DimensionError("AffVec size mismatch in -");
  AffVec r = a;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

AffVec operator-(const AffVec& a, const Eigen::VectorXd& b) {
  if (static_cast<Eigen::Index>(a.size()) != b.size())
    throw DimensionError("AffVec size mismatch in - const");
  AffVec r = a;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= LinExpr(b[i]);
  return r;
}

AffVec operator*(const Eigen::MatrixXd& M, const AffVec& v) {
  if (M.cols() != static_cast<Eigen::Index>(v.size()))
    throw DimensionError("matrix/AffVec size mismatch in *");
  AffVec r(M.rows());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (M(i, j) != 0.0) r[i] += M(i, j) * v[j];
    }
  }
  return r;
}

AffVec scaled(const AffVec& v, double s) {
  AffVec r = v;
  for (auto& e : r) e *= s;
  return r;
}

AffVec constants(const Eigen::VectorXd& v) {
  AffVec r(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) r[i] = LinExpr(v[i]);
  return r;
}

Eigen::VectorXd eval(const AffVec& v, const Eigen::VectorXd& x) {
  Eigen::VectorXd r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = v[i].eval(x);
  return r;
}

Eigen::MatrixXd eval(const AffMat& m, const Eigen::VectorXd& x) {
  Eigen::MatrixXd r(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r(i, j) = m(i, j).eval(x);
  return r;
}

int cone_rows(const ConeSpec& c) {
  return c.kind == ConeKind::Psd ? svec_dim(c.dim) : c.dim;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  Eigen::VectorXd v(svec_dim(n));
  int k = 0;
  for (int c = 0; c < n; ++c)
    for (int r = 0; r <= c; ++r)
      v[k++] = (r == c) ? M(r, c) : kSqrt2 * M(r, c);
  return v;
}

Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int n) {
  Eigen::MatrixXd M(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r) {
      const double val = (r == c) ? v[k] : v[k] / kSqrt2;
      M(r, c) = val;
      M(c, r) = val;
      ++k;
    }
  }
  return M;
}

VarRef ConicProgram::add_variable(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw DimensionError("variable '" + name + "' must have positive shape");
  if (by_name_.count(name))
    throw SchemaError("duplicate variable name '" + name + "'");
  VarRef v{static_cast<int>(vars_.size()), rows, cols, next_offset_};
  next_offset_ += rows * cols;
  by_name_[name] = v.id;
  vars_.push_back(v);
  names_.push_back(name);
  return v;
}

LinExpr ConicProgram::entry(const VarRef& v, int r, int c) const {
  if (r < 0 || r >= v.rows || c < 0 || c >= v.cols)
    throw DimensionError("variable entry out of range");
  return LinExpr::term(v.offset + c * v.rows + r, 1.0);
}

AffVec ConicProgram::vec(const VarRef& v) const {
  AffVec r(v.size());
  for (int k = 0; k < v.size(); ++k) r[k] = LinExpr::term(v.offset + k, 1.0);
  return r;
}

AffVec ConicProgram::col(const VarRef& v, int c) const {
  AffVec r(v.rows);
  for (int k = 0; k < v.rows; ++k)
    r[k] = LinExpr::term(v.offset + c * v.rows + k, 1.0);
  return r;
}

AffMat ConicProgram::mat(const VarRef& v) const {
  AffMat m(v.rows, v.cols);
  for (int r = 0; r < v.rows; ++r)
    for (int c = 0; c < v.cols; ++c)
      m(r, c) = LinExpr::term(v.offset + c * v.rows + r, 1.0);
  return m;
}

void ConicProgram::add_zero(AffVec e, const std::string& tag) {
  if (e.empty()) return;
  constraints_.push_back({ConeKind::Zero, static_cast<int>(e.size()),
                          std::move(e), tag});
}

void ConicProgram::add_nonneg(AffVec e, const std::string& tag) {
  if (e.empty()) return;
  constraints_.push_back({ConeKind::Nonnegative, static_cast<int>(e.size()),
                          std::move(e), tag});
}

void ConicProgram::add_soc(AffVec e, const std::string& tag) {
  if (e.size() < 1) throw DimensionError("SOC needs at least one row");
  if (e.size() == 1) {  // degenerate: t >= 0
    add_nonneg(std::move(e), tag);
    return;
  }
  constraints_.push_back({ConeKind::SecondOrder, static_cast<int>(e.size()),
                          std::move(e), tag});
}

void ConicProgram::add_psd(const AffMat& m, const std::string& tag) {
  if (m.rows != m.cols) throw DimensionError("PSD block must be square");
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < r; ++c)
      if (!m(r, c).same_as(m(c, r), 1e-14))
        throw SchemaError("PSD block is not structurally symmetric");
  if (m.rows == 1) {  // 1x1 PSD is a sign constraint
    add_nonneg({m(0, 0)}, tag);
    return;
  }
  AffVec rows(svec_dim(m.rows));
  int k = 0;
  for (int c = 0; c < m.cols; ++c)
    for (int r = 0; r <= c; ++r)
      rows[k++] = (r == c) ? m(r, c) : kSqrt2 * m(r, c);
  constraints_.push_back({ConeKind::Psd, m.rows, std::move(rows), tag});
}

void ConicProgram::add_quad_cost(AffVec e, const std::string& tag) {
  if (e.empty()) return;
  quad_terms_.emplace_back(std::move(e), tag);
}

void ConicProgram::add_lin_cost(const LinExpr& e) { lin_cost_ += e; }

const VarRef& ConicProgram::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw SchemaError("unknown variable '" + name + "'");
  return vars_[it->second];
}

void ConicProgram::validate() const {
  auto check_expr = [&](const LinExpr& e) {
    for (const auto& [k, v] : e.coeffs()) {
      if (k < 0 || k >= next_offset_)
        throw SchemaError("expression references undeclared scalar");
      if (!std::isfinite(v)) throw SchemaError("non-finite coefficient");
    }
    if (!std::isfinite(e.constant()))
      throw SchemaError("non-finite constant");
  };
  for (const auto& c : constraints_)
    for (const auto& e : c.rows) check_expr(e);
  for (const auto& [rows, tag] : quad_terms_)
    for (const auto& e : rows) check_expr(e);
  check_expr(lin_cost_);
}

CompiledProgram ConicProgram::compile() const {
  validate();
  CompiledProgram cp;
  cp.n = next_offset_;

  // Rows grouped by cone class: Zero, Nonnegative, then SOC/PSD blocks in
  // declaration order.
  std::vector<const Constraint*> ordered;
  for (auto kind : {ConeKind::Zero, ConeKind::Nonnegative}) {
    for (const auto& c : constraints_)
      if (c.kind == kind) ordered.push_back(&c);
  }
  for (const auto& c : constraints_)
    if (c.kind == ConeKind::SecondOrder || c.kind == ConeKind::Psd)
      ordered.push_back(&c);

  int zero_rows = 0, nonneg_rows = 0, total = 0;
  for (const auto* c : ordered) {
    const int r = static_cast<int>(c->rows.size());
    if (c->kind == ConeKind::Zero) zero_rows += r;
    if (c->kind == ConeKind::Nonnegative) nonneg_rows += r;
    total += r;
  }
  if (zero_rows > 0) cp.cones.push_back({ConeKind::Zero, zero_rows});
  if (nonneg_rows > 0) cp.cones.push_back({ConeKind::Nonnegative, nonneg_rows});
  for (const auto& c : constraints_)
    if (c.kind == ConeKind::SecondOrder || c.kind == ConeKind::Psd)
      cp.cones.push_back({c.kind, c.dim});

  cp.b = Eigen::VectorXd::Zero(total);
  std::vector<Eigen::Triplet<double>> trips;
  int row = 0;
  for (const auto* c : ordered) {
    if (!c->tag.empty())
      cp.row_tags[c->tag] = {row, static_cast<int>(c->rows.size())};
    for (const auto& e : c->rows) {
      cp.b[row] = e.constant();
      for (const auto& [k, v] : e.coeffs()) trips.emplace_back(row, k, -v);
      ++row;
    }
  }
  cp.A.resize(total, cp.n);
  cp.A.setFromTriplets(trips.begin(), trips.end());

  int wrows = 0;
  for (const auto& [rows, tag] : quad_terms_) wrows += static_cast<int>(rows.size());
  cp.w = Eigen::VectorXd::Zero(wrows);
  std::vector<Eigen::Triplet<double>> wtrips;
  int wr = 0;
  for (const auto& [rows, tag] : quad_terms_) {
    if (!tag.empty())
      cp.quad_tags[tag] = {wr, static_cast<int>(rows.size())};
    for (const auto& e : rows) {
      cp.w[wr] = e.constant();
      for (const auto& [k, v] : e.coeffs()) wtrips.emplace_back(wr, k, v);
      ++wr;
    }
  }
  cp.W.resize(wrows, cp.n);
  cp.W.setFromTriplets(wtrips.begin(), wtrips.end());

  cp.q0 = Eigen::VectorXd::Zero(cp.n);
  for (const auto& [k, v] : lin_cost_.coeffs()) cp.q0[k] = v;
  cp.r0 = lin_cost_.constant();
  return cp;
}

Eigen::SparseMatrix<double> CompiledProgram::hessian() const {
  Eigen::SparseMatrix<double> H = 2.0 * (W.transpose() * W);
  return H;
}

Eigen::VectorXd CompiledProgram::gradient_const() const {
  return q0 + 2.0 * (W.transpose() * w);
}

double CompiledProgram::objective_at(const Eigen::VectorXd& x) const {
  const double quad = (W * x + w).squaredNorm();
  return quad + q0.dot(x) + r0;
}

double CompiledProgram::cone_violation(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd s = b - A * x;
  double worst = 0.0;
  int row = 0;
  for (const auto& c : cones) {
    const int rows = cone_rows(c);
    const auto blk = s.segment(row, rows);
    switch (c.kind) {
      case ConeKind::Zero:
        worst = std::max(worst, blk.cwiseAbs().maxCoeff());
        break;
      case ConeKind::Nonnegative:
        worst = std::max(worst, std::max(0.0, -blk.minCoeff()));
        break;
      case ConeKind::SecondOrder: {
        const double t = blk[0];
        const double nz = blk.tail(rows - 1).norm();
        worst = std::max(worst, std::max(0.0, nz - t));
        break;
      }
      case ConeKind::Psd: {
        const Eigen::MatrixXd M = unsvec(blk, c.dim);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                          Eigen::EigenvaluesOnly);
        worst = std::max(worst, std::max(0.0, -es.eigenvalues().minCoeff()));
        break;
      }
    }
    row += rows;
  }
  return worst;
}

AffMat aff_from(const Eigen::MatrixXd& M) {
  AffMat out(static_cast<int>(M.rows()), static_cast<int>(M.cols()));
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out(r, c) = LinExpr(M(r, c));
  return out;
}

AffMat mat_mul(const Eigen::MatrixXd& L, const AffMat& M) {
  if (L.cols() != M.rows) throw DimensionError("mat_mul: size mismatch");
  AffMat out(static_cast<int>(L.rows()), M.cols);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c)
      for (int k = 0; k < M.rows; ++k)
        if (L(r, k) != 0.0) out(r, c) += L(r, k) * M(k, c);
  return out;
}

AffMat mat_mul(const AffMat& M, const Eigen::MatrixXd& R) {
  if (M.cols != R.rows()) throw DimensionError("mat_mul: size mismatch");
  AffMat out(M.rows, static_cast<int>(R.cols()));
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c)
      for (int k = 0; k < M.cols; ++k)
        if (R(k, c) != 0.0) out(r, c) += M(r, k) * R(k, c);
  return out;
}

AffMat transpose(const AffMat& M) {
  AffMat out(M.cols, M.rows);
  for (int r = 0; r < M.rows; ++r)
    for (int c = 0; c < M.cols; ++c) out(c, r) = M(r, c);
  return out;
}

AffMat operator+(const AffMat& a, const AffMat& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw DimensionError("AffMat size mismatch in +");
  AffMat out = a;
  for (size_t k = 0; k < out.e.size(); ++k) out.e[k] += b.e[k];
  return out;
}

AffMat operator-(const AffMat& a, const AffMat& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw DimensionError("AffMat size mismatch in -");
  AffMat out = a;
  for (size_t k = 0; k < out.e.size(); ++k) out.e[k] -= b.e[k];
  return out;
}

AffMat scaled(const AffMat& m, double s) {
  AffMat out = m;
  for (auto& e : out.e) e *= s;
  return out;
}

void set_block(AffMat& dst, int r0, int c0, const AffMat& src) {
  if (r0 + src.rows > dst.rows || c0 + src.cols > dst.cols)
    throw DimensionError("set_block: block out of range");
  for (int r = 0; r < src.rows; ++r)
    for (int c = 0; c < src.cols; ++c) dst(r0 + r, c0 + c) = src(r, c);
}

AffMat ConicProgram::add_symmetric(const std::string& name, int n) {
  const VarRef v = add_variable(name, svec_dim(n));
  AffMat out(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r) {
      out(r, c) = LinExpr::term(v.offset + k, 1.0);
      out(c, r) = out(r, c);
      ++k;
    }
  }
  return out;
}

Eigen::MatrixXd ConicProgram::symmetric_value(const std::string& name,
                                              const Eigen::VectorXd& x) const {
  const VarRef& v = find(name);
  // invert svec_dim(n) = v.rows
  int n = 0;
  while (svec_dim(n) < v.rows) ++n;
  if (svec_dim(n) != v.rows)
    throw DimensionError("variable '" + name + "' is not a symmetric triangle");
  Eigen::MatrixXd M(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r) {
      M(r, c) = x[v.offset + k];
      M(c, r) = M(r, c);
      ++k;
    }
  }
  return M;
}

CompiledProgram epigraph_form(const CompiledProgram& cp) {
  const int wrows = static_cast<int>(cp.W.rows());
  if (wrows == 0) return cp;

  CompiledProgram out;
  out.n = cp.n + 1;  // epigraph scalar t appended
  const int t_col = cp.n;
  const int old_rows = cp.total_rows();
  const int soc_dim = 2 + wrows;

  out.b = Eigen::VectorXd::Zero(old_rows + soc_dim);
  out.b.head(old_rows) = cp.b;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(cp.A.nonZeros() + 2 * cp.W.nonZeros() + 2);
  for (int k = 0; k < cp.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(cp.A, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());

  // s = b - A x in SOC with s = (t + 1/2, t - 1/2, sqrt(2)(W x + w)):
  // 2 * t * 1/2 >= ||W x + w||^2.
  constexpr double rt2 = 1.4142135623730951;
  trips.emplace_back(old_rows, t_col, -1.0);
  out.b[old_rows] = 0.5;
  trips.emplace_back(old_rows + 1, t_col, -1.0);
  out.b[old_rows + 1] = -0.5;
  for (int k = 0; k < cp.W.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(cp.W, k); it; ++it)
      trips.emplace_back(old_rows + 2 + it.row(), it.col(), -rt2 * it.value());
  for (int r = 0; r < wrows; ++r) out.b[old_rows + 2 + r] = rt2 * cp.w[r];

  out.A.resize(old_rows + soc_dim, out.n);
  out.A.setFromTriplets(trips.begin(), trips.end());
  out.cones = cp.cones;
  out.cones.push_back({ConeKind::SecondOrder, soc_dim});

  out.W.resize(0, out.n);
  out.w.resize(0);
  out.q0 = Eigen::VectorXd::Zero(out.n);
  out.q0.head(cp.n) = cp.q0;
  out.q0[t_col] = 1.0;
  out.r0 = cp.r0;
  out.row_tags = cp.row_tags;
  for (const auto& [tag, range] : cp.quad_tags)
    out.quad_tags[tag] = {old_rows + 2 + range.first, range.second};
  return out;
}

Eigen::MatrixXd ConicProgram::value(const VarRef& v, const Eigen::VectorXd& x) {
  Eigen::MatrixXd M(v.rows, v.cols);
  for (int c = 0; c < v.cols; ++c)
    for (int r = 0; r < v.rows; ++r) M(r, c) = x[v.offset + c * v.rows + r];
  return M;
}

}  // namespace dmpc
