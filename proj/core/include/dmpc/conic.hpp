#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <string>
#include <vector>

#include "dmpc/types.hpp"

namespace dmpc {

enum class ConeKind { Zero, Nonnegative, SecondOrder, Psd };

/// Handle to a declared variable block; scalars live at
/// [offset, offset + rows*cols) in the flattened (column-major) vector.
struct VarRef {
  int id = -1;
  int rows = 0;
  int cols = 1;
  int offset = 0;
  int size() const { return rows * cols; }
};

/// Sparse affine scalar expression sum_k coeff_k * x_k + constant.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double c) : constant_(c) {}  // NOLINT(runtime/explicit)
  static LinExpr term(int index, double coeff, double constant = 0.0);

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  friend LinExpr operator-(LinExpr a) { return a *= -1.0; }

  double constant() const { return constant_; }
  const std::map<int, double>& coeffs() const { return coeffs_; }
  double eval(const Eigen::VectorXd& x) const;
  bool same_as(const LinExpr& o, double tol = 0.0) const;

 private:
  std::map<int, double> coeffs_;
  double constant_ = 0.0;
};

using AffVec = std::vector<LinExpr>;

/// Dense matrix of affine expressions (row-major storage).
struct AffMat {
  int rows = 0;
  int cols = 0;
  std::vector<LinExpr> e;

  AffMat() = default;
  AffMat(int r, int c) : rows(r), cols(c), e(r * c) {}
  LinExpr& operator()(int r, int c) { return e[r * cols + c]; }
  const LinExpr& operator()(int r, int c) const { return e[r * cols + c]; }
};

// Small expression helpers used by all program builders.
AffVec operator+(const AffVec& a, const AffVec& b);
AffVec operator-(const AffVec& a, const AffVec& b);
AffVec operator-(const AffVec& a, const Eigen::VectorXd& b);
AffVec operator*(const Eigen::MatrixXd& M, const AffVec& v);
AffVec scaled(const AffVec& v, double s);
AffVec constants(const Eigen::VectorXd& v);
Eigen::MatrixXd eval(const AffMat& m, const Eigen::VectorXd& x);
Eigen::VectorXd eval(const AffVec& v, const Eigen::VectorXd& x);

AffMat aff_from(const Eigen::MatrixXd& M);
AffMat mat_mul(const Eigen::MatrixXd& L, const AffMat& M);
AffMat mat_mul(const AffMat& M, const Eigen::MatrixXd& R);
AffMat transpose(const AffMat& M);
AffMat operator+(const AffMat& a, const AffMat& b);
AffMat operator-(const AffMat& a, const AffMat& b);
AffMat scaled(const AffMat& m, double s);
void set_block(AffMat& dst, int r0, int c0, const AffMat& src);

struct ConeSpec {
  ConeKind kind;
  int dim;  // rows for Zero/Nonnegative/SecondOrder, matrix order for Psd
};

inline int svec_dim(int n) { return n * (n + 1) / 2; }
int cone_rows(const ConeSpec& c);

/// Scaled upper-triangle column-stacked vectorization (off-diagonals
/// multiplied by sqrt(2)); preserves inner products.
Eigen::VectorXd svec(const Eigen::MatrixXd& M);
Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int n);

/// Standard-form conic program
///     min ||W x + w||^2 + q0'x + r0   s.t.   b - A x in K
/// with K the ordered product of `cones`. Tag maps locate the rows a
/// builder registered (constraint rows index into A/b, objective rows
/// into W/w).
struct CompiledProgram {
  int n = 0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<ConeSpec> cones;
  Eigen::SparseMatrix<double> W;
  Eigen::VectorXd w;
  Eigen::VectorXd q0;
  double r0 = 0.0;
  std::map<std::string, std::pair<int, int>> row_tags;   // tag -> (start, len)
  std::map<std::string, std::pair<int, int>> quad_tags;  // tag -> (start, len)

  int total_rows() const { return static_cast<int>(A.rows()); }
  Eigen::SparseMatrix<double> hessian() const;  // 2 W'W
  Eigen::VectorXd gradient_const() const;       // q0 + 2 W'w
  double objective_at(const Eigen::VectorXd& x) const;
  /// Max violation of b - A x in K (distance per cone block, inf norm).
  double cone_violation(const Eigen::VectorXd& x) const;
};

/// Pure-conic reformulation of a compiled program: the squared-norm
/// objective is replaced by one epigraph scalar (appended as the last
/// variable) bounded through a single second-order-cone block appended
/// after all constraint rows. quad_tags then index into that block.
CompiledProgram epigraph_form(const CompiledProgram& cp);

/// Incremental builder for conic programs. Variables are dense named
/// blocks; constraints are affine expressions placed in cones; the
/// objective is a sum of squared affine vectors plus a linear term.
class ConicProgram {
 public:
  VarRef add_variable(const std::string& name, int rows, int cols = 1);

  LinExpr entry(const VarRef& v, int r, int c = 0) const;
  AffVec vec(const VarRef& v) const;            // flattened block
  AffVec col(const VarRef& v, int c) const;     // one column
  AffMat mat(const VarRef& v) const;

  void add_zero(AffVec e, const std::string& tag = {});
  void add_nonneg(AffVec e, const std::string& tag = {});
  /// e[0] >= || e[1:] ||_2
  void add_soc(AffVec e, const std::string& tag = {});
  /// Symmetric affine matrix expression constrained PSD. Symmetry of the
  /// passed matrix is verified structurally.
  void add_psd(const AffMat& m, const std::string& tag = {});
  void add_quad_cost(AffVec e, const std::string& tag = {});
  void add_lin_cost(const LinExpr& e);

  int num_scalars() const { return next_offset_; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  const VarRef& variable(int id) const { return vars_.at(id); }
  const std::string& variable_name(int id) const { return names_.at(id); }
  const VarRef& find(const std::string& name) const;

  void validate() const;
  CompiledProgram compile() const;

  /// Conic Benchmark Format text dump of the compiled program (quadratic
  /// objective emitted in epigraph form, which CBF requires).
  std::string dump_cbf() const;

  static Eigen::MatrixXd value(const VarRef& v, const Eigen::VectorXd& x);

  /// Symmetric n x n matrix expression backed by n(n+1)/2 fresh scalars
  /// (upper triangle, column-stacked, unscaled).
  AffMat add_symmetric(const std::string& name, int n);
  /// Recover the symmetric matrix behind add_symmetric from a solution.
  Eigen::MatrixXd symmetric_value(const std::string& name,
                                  const Eigen::VectorXd& x) const;

 private:
  struct Constraint {
    ConeKind kind;
    int dim;  // matrix order for Psd, rows otherwise
    AffVec rows;
    std::string tag;
  };
  std::vector<VarRef> vars_;
  std::vector<std::string> names_;
  std::map<std::string, int> by_name_;
  std::vector<Constraint> constraints_;
  std::vector<std::pair<AffVec, std::string>> quad_terms_;
  LinExpr lin_cost_;
  int next_offset_ = 0;
};

}  // namespace dmpc
