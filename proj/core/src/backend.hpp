#pragma once

#include <memory>

#include "dmpc/solve.hpp"

namespace dmpc::detail {

// One solver instance bound to a fixed-structure program; b, q0 and the
// quadratic constant w may be mutated between runs.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const CompiledProgram& program() const = 0;
  virtual void set_b(int row_start, const Eigen::VectorXd& values) = 0;
  virtual void set_q0(const Eigen::VectorXd& q0) = 0;
  virtual void set_w(int row_start, const Eigen::VectorXd& values) = 0;
  virtual void reset_warm() {}
  virtual SolveResult run() = 0;
};

std::unique_ptr<Backend> make_native_backend(const CompiledProgram& cp,
                                             const SolveOptions& opts);
#ifdef DMPC_HAVE_CLARABEL
std::unique_ptr<Backend> make_clarabel_backend(const CompiledProgram& cp,
                                               const SolveOptions& opts);
#endif

}  // namespace dmpc::detail
