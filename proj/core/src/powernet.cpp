#include "dmpc/powernet.hpp"

#include <array>

namespace dmpc {

namespace {

constexpr int kAreas = 7;
constexpr int kStates = 4;

// Tie lines of the benchmark topology (1-based pairs).
constexpr std::array<std::array<int, 2>, 7> kEdges = {
    {{1, 2}, {2, 3}, {2, 5}, {3, 4}, {4, 5}, {5, 6}, {5, 7}}};
constexpr std::array<double, 7> kCouplings = {4, 2, 1, 2, 2, 3, 3};

Eigen::Matrix4d s_base() {
  Eigen::Vector4d d;
  d << 1000, 1000, 10, 10;
  return d.asDiagonal();
}

}  // namespace

const std::vector<PgaParams>& pga_table() {
  static const std::vector<PgaParams> table = {
      {12, 0.05, 0.7, 0.65, 0.1, 0.5},  {10, 0.0625, 0.9, 0.4, 0.1, 0.65},
      {8, 0.8, 0.9, 0.3, 0.1, 0.65},    {8, 0.8, 0.7, 0.6, 0.1, 0.55},
      {8, 0.8, 0.9, 0.3, 0.1, 0.65},    {10, 0.0625, 0.9, 0.4, 0.1, 0.65},
      {12, 0.05, 0.7, 0.65, 0.1, 0.5}};
  return table;
}

double pga_coupling(int i, int j) {
  for (size_t e = 0; e < kEdges.size(); ++e) {
    if ((kEdges[e][0] == i && kEdges[e][1] == j) ||
        (kEdges[e][0] == j && kEdges[e][1] == i))
      return kCouplings[e];
  }
  return 0.0;
}

std::vector<std::vector<int>> pga_neighbors() {
  std::vector<std::vector<int>> nb(kAreas);
  for (int i = 0; i < kAreas; ++i) nb[i].push_back(i);
  for (const auto& e : kEdges) {
    nb[e[0] - 1].push_back(e[1] - 1);
    nb[e[1] - 1].push_back(e[0] - 1);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

std::vector<Eigen::MatrixXd> build_q_weights() {
  const auto neighbors = pga_neighbors();
  const Eigen::Matrix4d S = s_base();
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < kAreas; ++i) {
    const int nn = kStates * static_cast<int>(neighbors[i].size());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(nn, nn);
    int off = 0;
    for (int j : neighbors[i]) {
      Q.block(off, off, kStates, kStates) = (j == i ? 0.99 : 0.01) * S;
      off += kStates;
    }
    out.push_back(std::move(Q));
  }
  return out;
}

NetworkModel build_power_network() {
  const auto& table = pga_table();
  const auto neighbors = pga_neighbors();
  const auto q_weights = build_q_weights();

  std::vector<SubsystemModel> subs(kAreas);
  for (int i = 0; i < kAreas; ++i) {
    const auto& p = table[i];
    auto& s = subs[i];
    s.n = kStates;
    s.m = 1;
    const int nn = kStates * static_cast<int>(neighbors[i].size());

    double coupling_sum = 0.0;
    for (int j : neighbors[i])
      if (j != i) coupling_sum += pga_coupling(i + 1, j + 1);

    Eigen::Matrix4d Aii = Eigen::Matrix4d::Zero();
    Aii(0, 1) = 1.0;
    Aii(1, 0) = -coupling_sum / (2.0 * p.H);
    Aii(1, 1) = -p.D / (2.0 * p.H);
    Aii(1, 2) = 1.0 / (2.0 * p.H);
    Aii(2, 2) = -1.0 / p.T_t;
    Aii(2, 3) = 1.0 / p.T_t;
    Aii(3, 1) = -1.0 / (p.R_t * p.T_g);
    Aii(3, 3) = -1.0 / p.T_g;

    s.A = Eigen::MatrixXd::Zero(kStates, nn);
    int off = 0;
    for (int j : neighbors[i]) {
      if (j == i) {
        s.A.block(0, off, kStates, kStates) = Aii;
      } else {
        // coupling enters the frequency dynamics from the neighbor's angle
        s.A(1, off) = pga_coupling(i + 1, j + 1) / (2.0 * p.H);
      }
      off += kStates;
    }

    s.B = Eigen::MatrixXd::Zero(kStates, 1);
    s.B(3, 0) = 1.0 / p.T_g;

    // |angle_i| <= 0.1 acts on the local block inside x_{N_i}
    const int self_off = [&] {
      int o = 0;
      for (int j : neighbors[i]) {
        if (j == i) return o;
        o += kStates;
      }
      return o;
    }();
    s.G = Eigen::MatrixXd::Zero(2, nn);
    s.G(0, self_off) = 1.0;
    s.G(1, self_off) = -1.0;
    s.g = Eigen::VectorXd::Constant(2, 0.1);

    s.Hc = Eigen::MatrixXd(2, 1);
    s.Hc << 1.0, -1.0;
    s.hc = Eigen::VectorXd::Constant(2, p.p_max);

    s.Q = q_weights[i];
    s.R = Eigen::MatrixXd::Constant(1, 1, 0.1);
    s.S = s_base();
  }

  return NetworkModel(std::move(subs),
                      std::vector<std::vector<int>>(neighbors), /*horizon=*/5,
                      /*continuous=*/true, /*sampling_time=*/1.0);
}

}  // namespace dmpc
