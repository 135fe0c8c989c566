#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dmpc/model.hpp"

namespace dmpc {

/// Permitted nonzero blocks (i, j) of the global dynamics matrix; must
/// contain every diagonal block.
struct SparsityPattern {
  std::vector<std::pair<int, int>> blocks;  // sorted, unique

  static SparsityPattern from_model(const NetworkModel& model);
  bool allows(int i, int j) const;
  void validate(int num_blocks) const;
};

/// e^{A h} by scaling-and-squaring of a truncated series.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A, double h);

/// Frobenius-optimal projection onto the pattern: zero every entry whose
/// block lies outside it. `row_offsets`/`col_offsets` give the block
/// boundaries (size num_blocks + 1).
Eigen::MatrixXd project_pattern(const Eigen::MatrixXd& M,
                                const SparsityPattern& pattern,
                                const std::vector<int>& row_offsets,
                                const std::vector<int>& col_offsets);

struct DiscretizeReport {
  bool instability_warning = false;
  double spectral_radius_projected = 0.0;
  double spectral_radius_exact = 0.0;
};

/// Exact matrix-exponential discretization of the global dynamics followed
/// by the structure-preserving projection onto the coupling pattern (inputs
/// stay block-local).
NetworkModel discretize_network(const NetworkModel& continuous_model, double h,
                                DiscretizeReport* report = nullptr);

double spectral_radius(const Eigen::MatrixXd& A);

}  // namespace dmpc
