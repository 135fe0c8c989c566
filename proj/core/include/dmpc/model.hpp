#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "dmpc/types.hpp"

namespace dmpc {

/// One subsystem of the coupled network. A maps the stacked neighborhood
/// state x_{N_i} (blocks ordered by ascending subsystem id) to the local
/// successor state; all other matrices are local to the subsystem except
/// G/Q which also act on the neighborhood vector.
struct SubsystemModel {
  int id = 0;  // 0-based
  int n = 0;   // state dimension
  int m = 0;   // input dimension
  Eigen::MatrixXd A;   // n x n_Ni
  Eigen::MatrixXd B;   // n x m
  Eigen::MatrixXd G;   // q x n_Ni, state polytope G x_{N_i} <= g
  Eigen::VectorXd g;   // q
  Eigen::MatrixXd Hc;  // r x m, input polytope Hc u <= hc
  Eigen::VectorXd hc;  // r
  Eigen::MatrixXd Q;   // n_Ni x n_Ni, PD
  Eigen::MatrixXd R;   // m x m, PD
  Eigen::MatrixXd S;   // n x n, PD reference-offset weight

  int num_state_rows() const { return static_cast<int>(G.rows()); }
  int num_input_rows() const { return static_cast<int>(Hc.rows()); }
};

/// Piecewise-constant reference: x_r held constant from each segment's
/// start time until the next segment begins.
struct ReferenceSignal {
  struct Segment {
    int start_time = 0;
    Eigen::VectorXd x_r;  // stacked over all subsystems
  };
  std::vector<Segment> segments;

  const Eigen::VectorXd& at(int t) const;
  static ReferenceSignal constant(const Eigen::VectorXd& x_r);
};

/// Immutable coupled-subsystem network. Neighbor sets include the
/// subsystem itself and are symmetric; selector matrices W_ij are derived
/// from the ascending-id block order of x_{N_i}.
class NetworkModel {
 public:
  NetworkModel() = default;
  NetworkModel(std::vector<SubsystemModel> subsystems,
               std::vector<std::vector<int>> neighbors, int horizon,
               bool continuous = false, double sampling_time = 0.0);

  static NetworkModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(subsystems_.size()); }
  int horizon() const { return horizon_; }
  bool is_continuous() const { return continuous_; }
  double sampling_time() const { return sampling_time_; }

  const SubsystemModel& subsystem(int i) const { return subsystems_.at(i); }
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }

  /// Dimension of the stacked neighborhood vector x_{N_i}.
  int nbhd_dim(int i) const { return nbhd_dims_.at(i); }
  /// Row offset of subsystem j's block inside x_{N_i}; j must be in N_i.
  int nbhd_offset(int i, int j) const;
  bool is_neighbor(int i, int j) const;

  /// Selector W_ij in {0,1}^{n_j x n_Ni} with x_j = W_ij x_{N_i}.
  Eigen::MatrixXd selector(int i, int j) const;
  /// Lift matrix T_i in {0,1}^{n_Ni x n_tot} with x_{N_i} = T_i x.
  Eigen::MatrixXd lift_matrix(int i) const;

  int total_state_dim() const { return state_offsets_.back(); }
  int total_input_dim() const { return input_offsets_.back(); }
  int state_offset(int i) const { return state_offsets_.at(i); }
  int input_offset(int i) const { return input_offsets_.at(i); }

  /// Concatenate the per-subsystem vectors of N_i into x_{N_i}. The family
  /// holds one vector per subsystem id; entries outside N_i are ignored.
  Eigen::VectorXd lift(const std::vector<Eigen::VectorXd>& family, int i) const;
  /// Extract x_{N_i} from a globally stacked state vector.
  Eigen::VectorXd lift_global(const Eigen::VectorXd& x, int i) const;

  /// ||x_Ni - xe_Ni||^2_Qi + ||u - ue||^2_Ri
  double stage_cost(int i, const Eigen::VectorXd& x_ni,
                    const Eigen::VectorXd& u_i, const Eigen::VectorXd& xe_ni,
                    const Eigen::VectorXd& ue_i) const;

  /// Globally assembled dynamics x(t+1) = A x(t) + B u(t).
  Eigen::MatrixXd global_A() const;
  Eigen::MatrixXd global_B() const;

  /// Model with identical structure but new per-subsystem A/B blocks (used
  /// by discretization); marks the result discrete.
  NetworkModel with_discrete_dynamics(
      const std::vector<Eigen::MatrixXd>& A_blocks,
      const std::vector<Eigen::MatrixXd>& B_blocks, double sampling_time) const;

  bool operator==(const NetworkModel& other) const;

 private:
  void validate_and_index();

  std::vector<SubsystemModel> subsystems_;
  std::vector<std::vector<int>> neighbors_;  // ascending, includes self
  int horizon_ = 0;
  bool continuous_ = false;
  double sampling_time_ = 0.0;

  std::vector<int> nbhd_dims_;
  std::vector<int> state_offsets_;  // size M+1
  std::vector<int> input_offsets_;  // size M+1
};

ReferenceSignal load_reference(const std::filesystem::path& path);
void save_reference(const ReferenceSignal& ref,
                    const std::filesystem::path& path);

}  // namespace dmpc
