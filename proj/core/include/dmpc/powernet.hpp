#pragma once

#include <vector>

#include "dmpc/model.hpp"

namespace dmpc {

/// Per-area parameters of the 7-area power network benchmark.
struct PgaParams {
  double H;      // inertia
  double D;      // damping
  double R_t;    // droop
  double T_t;    // turbine time constant
  double T_g;    // governor time constant
  double p_max;  // input bound
};

const std::vector<PgaParams>& pga_table();

/// Symmetric tie-line coupling strength between areas (1-based ids);
/// zero when the areas are not connected.
double pga_coupling(int i, int j);

/// Neighbor sets (0-based, self included) of the benchmark topology.
std::vector<std::vector<int>> pga_neighbors();

/// Per-area neighborhood weights: own block 0.99*S_base, neighbor blocks
/// 0.01*S_base with S_base = diag(1000, 1000, 10, 10).
std::vector<Eigen::MatrixXd> build_q_weights();

/// The continuous-time 7-PGA benchmark network (sampling_time 1 s, T = 5).
NetworkModel build_power_network();

}  // namespace dmpc
