#ifdef DMPC_HAVE_CLARABEL

#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <vector>

#include "backend.hpp"

extern "C" {

struct DmpcClarabelSettings {
  double feas_tol;
  double gap_tol;
  uint32_t max_iter;
  double time_limit;
  int32_t verbose;
  int32_t chordal;
};

int32_t dmpc_clarabel_solve(
    size_t n, size_t m, const size_t* p_colptr, const size_t* p_rowval,
    const double* p_nzval, const double* q, const size_t* a_colptr,
    const size_t* a_rowval, const double* a_nzval, const double* b,
    size_t n_cones, const int32_t* cone_kinds, const size_t* cone_dims,
    const DmpcClarabelSettings* settings, double* x_out, double* z_out,
    double* s_out, double* obj_out, uint32_t* iters_out,
    double* solve_time_out);

}  // extern "C"

namespace dmpc::detail {

namespace {

void to_csc(const Eigen::SparseMatrix<double>& M, bool upper_only,
            std::vector<size_t>& colptr, std::vector<size_t>& rowval,
            std::vector<double>& nzval) {
  colptr.assign(M.cols() + 1, 0);
  rowval.clear();
  nzval.clear();
  for (int j = 0; j < M.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it) {
      if (upper_only && it.row() > j) continue;
      if (it.value() == 0.0) continue;
      rowval.push_back(static_cast<size_t>(it.row()));
      nzval.push_back(it.value());
    }
    colptr[j + 1] = rowval.size();
  }
}

class ClarabelBackend final : public Backend {
 public:
  ClarabelBackend(const CompiledProgram& cp, const SolveOptions& opts)
      : cp_(cp), opts_(opts) {
    to_csc(cp_.hessian(), /*upper_only=*/true, p_colptr_, p_rowval_, p_nzval_);
    to_csc(cp_.A, /*upper_only=*/false, a_colptr_, a_rowval_, a_nzval_);
    for (const auto& c : cp_.cones) {
      int kind = 0;
      switch (c.kind) {
        case ConeKind::Zero: kind = 0; break;
        case ConeKind::Nonnegative: kind = 1; break;
        case ConeKind::SecondOrder: kind = 2; break;
        case ConeKind::Psd: kind = 3; break;
      }
      cone_kinds_.push_back(kind);
      cone_dims_.push_back(static_cast<size_t>(c.dim));
    }
  }

  const CompiledProgram& program() const override { return cp_; }

  void set_b(int row_start, const Eigen::VectorXd& values) override {
    cp_.b.segment(row_start, values.size()) = values;
  }

  void set_q0(const Eigen::VectorXd& q0) override {
    cp_.q0 = q0;
    q_dirty_ = true;
  }

  void set_w(int row_start, const Eigen::VectorXd& values) override {
    cp_.w.segment(row_start, values.size()) = values;
    q_dirty_ = true;
  }

  SolveResult run() override {
    if (q_dirty_) {
      q_ = cp_.gradient_const();
      q_dirty_ = false;
    }
    DmpcClarabelSettings st{opts_.feas_tol, opts_.gap_tol,
                            static_cast<uint32_t>(
                                opts_.max_iters > 0 ? opts_.max_iters : 0),
                            opts_.time_limit_s, opts_.verbose ? 1 : 0,
                            opts_.chordal ? 1 : 0};
    const size_t n = static_cast<size_t>(cp_.n);
    const size_t m = static_cast<size_t>(cp_.total_rows());
    Eigen::VectorXd x(cp_.n), z(cp_.total_rows()), s(cp_.total_rows());
    double obj = 0.0;
    uint32_t iters = 0;
    double solve_time = 0.0;
    const int32_t code = dmpc_clarabel_solve(
        n, m, p_colptr_.data(), p_rowval_.data(), p_nzval_.data(), q_.data(),
        a_colptr_.data(), a_rowval_.data(), a_nzval_.data(), cp_.b.data(),
        cone_kinds_.size(), cone_kinds_.data(), cone_dims_.data(), &st,
        x.data(), z.data(), s.data(), &obj, &iters, &solve_time);

    SolveResult res;
    res.stats.backend = "clarabel";
    res.stats.iterations = static_cast<int>(iters);
    res.stats.solve_time_s = solve_time;
    switch (code) {
      case 0:
        res.status = SolveStatus::Optimal;
        break;
      case 1:
        res.status = SolveStatus::Infeasible;
        break;
      case 2:
        res.status = SolveStatus::Unbounded;
        break;
      case 3:
      case 4:
      case 5:
        res.status = SolveStatus::TimeLimit;
        res.incumbent = true;
        break;
      default:
        res.status = SolveStatus::NumericalError;
        break;
    }
    if (res.status == SolveStatus::Optimal || res.incumbent) {
      res.x = x;
      res.objective = cp_.objective_at(x);
    }
    return res;
  }

 private:
  CompiledProgram cp_;
  SolveOptions opts_;
  std::vector<size_t> p_colptr_, p_rowval_;
  std::vector<double> p_nzval_;
  std::vector<size_t> a_colptr_, a_rowval_;
  std::vector<double> a_nzval_;
  std::vector<int32_t> cone_kinds_;
  std::vector<size_t> cone_dims_;
  Eigen::VectorXd q_;
  bool q_dirty_ = true;
};

}  // namespace

std::unique_ptr<Backend> make_clarabel_backend(const CompiledProgram& cp,
                                               const SolveOptions& opts) {
  static std::once_flag blas_once;
  std::call_once(blas_once, [] {
    setenv("OPENBLAS_NUM_THREADS", "1", /*overwrite=*/0);
  });
  return std::make_unique<ClarabelBackend>(cp, opts);
}

}  // namespace dmpc::detail

#endif  // DMPC_HAVE_CLARABEL
