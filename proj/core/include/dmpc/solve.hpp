#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "dmpc/conic.hpp"

namespace dmpc {

enum class SolveStatus { Optimal, Infeasible, Unbounded, TimeLimit, NumericalError };

std::string to_string(SolveStatus s);

struct SolverStats {
  int iterations = 0;
  double solve_time_s = 0.0;
  std::string backend;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x;  // primal, present iff has_values()
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool incumbent = false;  // values present despite non-Optimal status
  SolverStats stats;

  bool has_values() const {
    return status == SolveStatus::Optimal || incumbent;
  }
  Eigen::MatrixXd value(const VarRef& v) const;
};

struct SolveOptions {
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  int max_iters = 0;        // 0: backend default
  double time_limit_s = 0;  // 0: none
  bool verbose = false;
  bool chordal = true;  // clarabel: chordal decomposition of PSD cones
  std::string backend;  // "", "clarabel" or "native"; "" follows DMPC_SOLVER
  std::optional<Eigen::VectorXd> warm_x;  // native backend only
  std::optional<Eigen::VectorXd> warm_y;
  std::optional<Eigen::VectorXd> warm_s;
};

/// Name of the backend solve() would pick for empty SolveOptions::backend:
/// the DMPC_SOLVER environment variable if set, else "clarabel" when built
/// in, else "native".
std::string default_backend();
bool backend_available(const std::string& name);

SolveResult solve(const ConicProgram& p, const SolveOptions& opts = {});
SolveResult solve(const CompiledProgram& cp, const SolveOptions& opts = {});

/// PSD test by minimum eigenvalue; M must be symmetric within 1e-10.
struct PsdCheck {
  bool psd;
  double min_eigenvalue;
};
PsdCheck check_psd(const Eigen::MatrixXd& M, double tol = 1e-9);

/// Reusable solve handle for a fixed-structure program. The sparsity and
/// values of A and W stay fixed; b, q0 and the quadratic constant w may be
/// updated between solves. The native backend reuses its factorization
/// and warm-starts from the previous solution.
class SolverSession {
 public:
  SolverSession(CompiledProgram cp, SolveOptions opts);
  ~SolverSession();
  SolverSession(SolverSession&&) noexcept;
  SolverSession& operator=(SolverSession&&) noexcept;

  const CompiledProgram& program() const;
  void set_b(int row_start, const Eigen::VectorXd& values);
  void set_q0(const Eigen::VectorXd& q0);
  void set_w(int row_start, const Eigen::VectorXd& values);
  void reset_warm_start();
  SolveResult solve();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dmpc
