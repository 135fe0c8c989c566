#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "dmpc/model.hpp"
#include "dmpc/solve.hpp"

namespace dmpc {

struct SubsystemIngredients {
  Eigen::MatrixXd P;           // terminal cost, n_i x n_i PD
  Eigen::MatrixXd K;           // terminal gain, m_i x n_Ni
  Eigen::MatrixXd P_sqrt;      // symmetric square root
  Eigen::MatrixXd P_inv_sqrt;  // symmetric inverse square root
  Eigen::MatrixXd P_inv;
  double eps = 1e-6;
};

/// The raw synthesis solution plus a-posteriori residuals, kept for audit.
struct SynthesisCertificate {
  std::vector<Eigen::MatrixXd> E, Y, Gamma, Theta;
  std::vector<double> lmi_min_eig;       // per-subsystem synthesis block
  std::vector<double> coupling_max_eig;  // per-node Theta-sum block (<= 0)
  double global_lmi_min_eig = 0.0;       // assembled E-domain certificate
  double objective = 0.0;                // sum of trace(E_i)
};

struct TerminalIngredients {
  std::vector<SubsystemIngredients> sub;
  SynthesisCertificate certificate;

  int size() const { return static_cast<int>(sub.size()); }
  void save(const std::filesystem::path& path) const;
  static TerminalIngredients load(const std::filesystem::path& path);
  /// Throws IngredientMismatchError when shapes do not match the model.
  void check_compatible(const NetworkModel& model) const;
};

/// Offline distributed-invariance SDP: maximizes sum trace(E_i) subject to
/// the per-subsystem decrease blocks and the block-diagonal relaxation
/// coupling; returns P_i = E_i^{-1} and K_i = Y_i E_{N_i}^{-1}.
TerminalIngredients synthesize(const NetworkModel& model,
                               std::vector<double> eps = {},
                               const SolveOptions& opts = {});

/// Globally assembled A + B K under the distributed terminal controller.
Eigen::MatrixXd global_closed_loop(const NetworkModel& model,
                                   const TerminalIngredients& ing);

struct DecreaseReport {
  int samples = 0;
  int violations = 0;
  double max_violation = -std::numeric_limits<double>::infinity();
  double tol = 1e-6;
};

/// Monte-Carlo check of the Lyapunov decrease
///   V(x+) - V(x) <= -||x||_Q^2 - ||u||_R^2 + tol
/// under u_i = K_i x_{N_i}, with the block-assembled global P, Q, R.
DecreaseReport verify_ingredients(const NetworkModel& model,
                                  const TerminalIngredients& ing,
                                  int n_samples, uint64_t seed = 0,
                                  double tol = 1e-6);

}  // namespace dmpc
