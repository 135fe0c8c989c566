#include "dmpc/solve.hpp"

#include <cstdlib>

#include "backend.hpp"

namespace dmpc {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::TimeLimit: return "TimeLimit";
    case SolveStatus::NumericalError: return "NumericalError";
  }
  return "?";
}

Eigen::MatrixXd SolveResult::value(const VarRef& v) const {
  if (!has_values()) throw NoIncumbentError("solve carries no primal values");
  return ConicProgram::value(v, x);
}

bool backend_available(const std::string& name) {
  if (name == "native") return true;
#ifdef DMPC_HAVE_CLARABEL
  if (name == "clarabel") return true;
#endif
  return false;
}

std::string default_backend() {
  if (const char* env = std::getenv("DMPC_SOLVER"); env && *env) {
    if (!backend_available(env))
      throw SolverFailure(std::string("DMPC_SOLVER requests unavailable backend '") +
                          env + "'");
    return env;
  }
#ifdef DMPC_HAVE_CLARABEL
  return "clarabel";
#else
  return "native";
#endif
}

namespace {

std::unique_ptr<detail::Backend> make_backend(const CompiledProgram& cp,
                                              const SolveOptions& opts) {
  const std::string name = opts.backend.empty() ? default_backend() : opts.backend;
  if (!backend_available(name))
    throw SolverFailure("unknown solver backend '" + name + "'");
#ifdef DMPC_HAVE_CLARABEL
  if (name == "clarabel") return detail::make_clarabel_backend(cp, opts);
#endif
  return detail::make_native_backend(cp, opts);
}

}  // namespace

SolveResult solve(const CompiledProgram& cp, const SolveOptions& opts) {
  return make_backend(cp, opts)->run();
}

SolveResult solve(const ConicProgram& p, const SolveOptions& opts) {
  return solve(p.compile(), opts);
}

PsdCheck check_psd(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols())
    throw AsymmetryError("check_psd: matrix not square");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw AsymmetryError("check_psd: matrix not symmetric within 1e-10");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return {lmin >= -tol, lmin};
}

struct SolverSession::Impl {
  std::unique_ptr<detail::Backend> backend;
};

SolverSession::SolverSession(CompiledProgram cp, SolveOptions opts)
    : impl_(std::make_unique<Impl>()) {
  impl_->backend = make_backend(cp, opts);
}

SolverSession::~SolverSession() = default;
SolverSession::SolverSession(SolverSession&&) noexcept = default;
SolverSession& SolverSession::operator=(SolverSession&&) noexcept = default;

const CompiledProgram& SolverSession::program() const {
  return impl_->backend->program();
}

void SolverSession::set_b(int row_start, const Eigen::VectorXd& values) {
  impl_->backend->set_b(row_start, values);
}

void SolverSession::set_q0(const Eigen::VectorXd& q0) {
  impl_->backend->set_q0(q0);
}

void SolverSession::set_w(int row_start, const Eigen::VectorXd& values) {
  impl_->backend->set_w(row_start, values);
}

void SolverSession::reset_warm_start() { impl_->backend->reset_warm(); }

SolveResult SolverSession::solve() { return impl_->backend->run(); }

}  // namespace dmpc
