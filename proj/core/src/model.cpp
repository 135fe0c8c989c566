#include "dmpc/model.hpp"

#include <algorithm>
#include <fstream>

#include "dmpc/solve.hpp"
#include "json_util.hpp"

namespace dmpc {

using detail::json;

const Eigen::VectorXd& ReferenceSignal::at(int t) const {
  if (segments.empty()) throw SchemaError("reference has no segments");
  const Eigen::VectorXd* best = &segments.front().x_r;
  for (const auto& seg : segments) {
    if (seg.start_time <= t) best = &seg.x_r;
  }
  return *best;
}

ReferenceSignal ReferenceSignal::constant(const Eigen::VectorXd& x_r) {
  ReferenceSignal ref;
  ref.segments.push_back({0, x_r});
  return ref;
}

NetworkModel::NetworkModel(std::vector<SubsystemModel> subsystems,
                           std::vector<std::vector<int>> neighbors,
                           int horizon, bool continuous, double sampling_time)
    : subsystems_(std::move(subsystems)),
      neighbors_(std::move(neighbors)),
      horizon_(horizon),
      continuous_(continuous),
      sampling_time_(sampling_time) {
  validate_and_index();
}

void NetworkModel::validate_and_index() {
  const int M = static_cast<int>(subsystems_.size());
  if (M == 0) throw SchemaError("network has no subsystems");
  if (static_cast<int>(neighbors_.size()) != M)
    throw SchemaError("neighbor list count does not match subsystem count");
  if (horizon_ < 1) throw SchemaError("horizon must be >= 1");
  if (continuous_ && !(sampling_time_ > 0))
    throw SchemaError("continuous model needs a positive sampling_time");

  for (int i = 0; i < M; ++i) {
    auto& nb = neighbors_[i];
    for (int j : nb)
      if (j < 0 || j >= M) throw SchemaError("neighbor id out of range");
    if (!std::is_sorted(nb.begin(), nb.end()) ||
        std::adjacent_find(nb.begin(), nb.end()) != nb.end())
      throw SchemaError("neighbor sets must be strictly ascending");
    if (!std::binary_search(nb.begin(), nb.end(), i))
      throw ConventionError("subsystem " + std::to_string(i + 1) +
                            " is not in its own neighbor set");
  }
  for (int i = 0; i < M; ++i) {
    for (int j : neighbors_[i]) {
      if (!std::binary_search(neighbors_[j].begin(), neighbors_[j].end(), i))
        throw ConventionError("asymmetric neighbors: " + std::to_string(j + 1) +
                              " in N_" + std::to_string(i + 1) +
                              " but not conversely");
    }
  }

  nbhd_dims_.assign(M, 0);
  state_offsets_.assign(M + 1, 0);
  input_offsets_.assign(M + 1, 0);
  for (int i = 0; i < M; ++i) {
    auto& s = subsystems_[i];
    s.id = i;
    if (s.n < 1 || s.m < 1)
      throw SchemaError("subsystem dimensions must be positive");
    state_offsets_[i + 1] = state_offsets_[i] + s.n;
    input_offsets_[i + 1] = input_offsets_[i] + s.m;
  }
  for (int i = 0; i < M; ++i) {
    int dim = 0;
    for (int j : neighbors_[i]) dim += subsystems_[j].n;
    nbhd_dims_[i] = dim;
  }

  auto check_pd = [](const Eigen::MatrixXd& W, const std::string& what) {
    if (W.rows() != W.cols()) throw DimensionError(what + " must be square");
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw SchemaError(what + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-9)
      throw SchemaError(what + " must be positive definite");
  };

  for (int i = 0; i < M; ++i) {
    const auto& s = subsystems_[i];
    const std::string tag = "subsystem " + std::to_string(i + 1);
    const int nn = nbhd_dims_[i];
    if (s.A.rows() != s.n || s.A.cols() != nn)
      throw DimensionError(tag + ": A must be n x n_Ni");
    if (s.B.rows() != s.n || s.B.cols() != s.m)
      throw DimensionError(tag + ": B must be n x m");
    for (int c = 0; c < s.m; ++c)
      if (s.B.col(c).isZero(0.0))
        throw SchemaError(tag + ": input column " + std::to_string(c + 1) +
                          " of B is zero (input-free subsystems are rejected)");
    if (s.G.size() > 0 && s.G.cols() != nn)
      throw DimensionError(tag + ": G must have n_Ni columns");
    if (s.g.size() != s.G.rows())
      throw DimensionError(tag + ": g length must match G rows");
    if (s.Hc.size() > 0 && s.Hc.cols() != s.m)
      throw DimensionError(tag + ": Hc must have m columns");
    if (s.hc.size() != s.Hc.rows())
      throw DimensionError(tag + ": hc length must match Hc rows");
    if (s.Q.rows() != nn)
      throw DimensionError(tag + ": Q must act on the neighborhood vector");
    if (s.R.rows() != s.m) throw DimensionError(tag + ": R must be m x m");
    if (s.S.rows() != s.n) throw DimensionError(tag + ": S must be n x n");
    check_pd(s.Q, tag + ": Q");
    check_pd(s.R, tag + ": R");
    check_pd(s.S, tag + ": S");
  }

  // Nonemptiness of each polytope, by a feasibility solve.
  for (int i = 0; i < M; ++i) {
    const auto& s = subsystems_[i];
    auto check_nonempty = [&](const Eigen::MatrixXd& F,
                              const Eigen::VectorXd& f,
                              const std::string& what) {
      if (F.rows() == 0) return;
      ConicProgram p;
      auto x = p.add_variable("x", static_cast<int>(F.cols()));
      p.add_nonneg(constants(f) - (F * p.vec(x)));
      const SolveResult r = solve(p);
      if (r.status == SolveStatus::Infeasible)
        throw SchemaError("subsystem " + std::to_string(i + 1) + ": " + what +
                          " polytope is empty");
      if (r.status != SolveStatus::Optimal)
        throw SolverFailure("polytope nonemptiness check failed: " +
                            to_string(r.status));
    };
    check_nonempty(s.G, s.g, "state");
    check_nonempty(s.Hc, s.hc, "input");
  }
}

int NetworkModel::nbhd_offset(int i, int j) const {
  int off = 0;
  for (int k : neighbors_.at(i)) {
    if (k == j) return off;
    off += subsystems_[k].n;
  }
  throw MissingNeighborError("subsystem " + std::to_string(j + 1) +
                             " not in N_" + std::to_string(i + 1));
}

bool NetworkModel::is_neighbor(int i, int j) const {
  const auto& nb = neighbors_.at(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

Eigen::MatrixXd NetworkModel::selector(int i, int j) const {
  const int off = nbhd_offset(i, j);
  const int nj = subsystems_.at(j).n;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nj, nbhd_dims_.at(i));
  W.block(0, off, nj, nj).setIdentity();
  return W;
}

Eigen::MatrixXd NetworkModel::lift_matrix(int i) const {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nbhd_dims_.at(i), total_state_dim());
  int row = 0;
  for (int j : neighbors_.at(i)) {
    const int nj = subsystems_[j].n;
    T.block(row, state_offsets_[j], nj, nj).setIdentity();
    row += nj;
  }
  return T;
}

Eigen::VectorXd NetworkModel::lift(const std::vector<Eigen::VectorXd>& family,
                                   int i) const {
  Eigen::VectorXd out(nbhd_dims_.at(i));
  int row = 0;
  for (int j : neighbors_.at(i)) {
    const int nj = subsystems_[j].n;
    if (j >= static_cast<int>(family.size()) || family[j].size() == 0)
      throw MissingNeighborError("lift: no vector for subsystem " +
                                 std::to_string(j + 1));
    if (family[j].size() != nj)
      throw DimensionError("lift: vector for subsystem " +
                           std::to_string(j + 1) + " has wrong length");
    out.segment(row, nj) = family[j];
    row += nj;
  }
  return out;
}

Eigen::VectorXd NetworkModel::lift_global(const Eigen::VectorXd& x, int i) const {
  if (x.size() != total_state_dim())
    throw DimensionError("lift_global: wrong global state length");
  Eigen::VectorXd out(nbhd_dims_.at(i));
  int row = 0;
  for (int j : neighbors_.at(i)) {
    const int nj = subsystems_[j].n;
    out.segment(row, nj) = x.segment(state_offsets_[j], nj);
    row += nj;
  }
  return out;
}

double NetworkModel::stage_cost(int i, const Eigen::VectorXd& x_ni,
                                const Eigen::VectorXd& u_i,
                                const Eigen::VectorXd& xe_ni,
                                const Eigen::VectorXd& ue_i) const {
  const auto& s = subsystems_.at(i);
  if (x_ni.size() != nbhd_dims_[i] || xe_ni.size() != nbhd_dims_[i])
    throw DimensionError("stage_cost: neighborhood vector length mismatch");
  if (u_i.size() != s.m || ue_i.size() != s.m)
    throw DimensionError("stage_cost: input length mismatch");
  const Eigen::VectorXd dx = x_ni - xe_ni;
  const Eigen::VectorXd du = u_i - ue_i;
  return dx.dot(s.Q * dx) + du.dot(s.R * du);
}

Eigen::MatrixXd NetworkModel::global_A() const {
  const int n = total_state_dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < size(); ++i)
    A.block(state_offsets_[i], 0, subsystems_[i].n, n) =
        subsystems_[i].A * lift_matrix(i);
  return A;
}

Eigen::MatrixXd NetworkModel::global_B() const {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(total_state_dim(), total_input_dim());
  for (int i = 0; i < size(); ++i)
    B.block(state_offsets_[i], input_offsets_[i], subsystems_[i].n,
            subsystems_[i].m) = subsystems_[i].B;
  return B;
}

NetworkModel NetworkModel::with_discrete_dynamics(
    const std::vector<Eigen::MatrixXd>& A_blocks,
    const std::vector<Eigen::MatrixXd>& B_blocks, double sampling_time) const {
  NetworkModel out = *this;
  for (int i = 0; i < size(); ++i) {
    out.subsystems_[i].A = A_blocks.at(i);
    out.subsystems_[i].B = B_blocks.at(i);
  }
  out.continuous_ = false;
  out.sampling_time_ = sampling_time;
  out.validate_and_index();
  return out;
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  if (size() != other.size() || horizon_ != other.horizon_ ||
      continuous_ != other.continuous_ ||
      sampling_time_ != other.sampling_time_ || neighbors_ != other.neighbors_)
    return false;
  for (int i = 0; i < size(); ++i) {
    const auto& a = subsystems_[i];
    const auto& b = other.subsystems_[i];
    if (a.n != b.n || a.m != b.m) return false;
    if (a.A != b.A || a.B != b.B || a.G != b.G || a.g != b.g || a.Hc != b.Hc ||
        a.hc != b.hc || a.Q != b.Q || a.R != b.R || a.S != b.S)
      return false;
  }
  return true;
}

namespace {

json model_to_json(const NetworkModel& model) {
  json root;
  json subs = json::array();
  for (int i = 0; i < model.size(); ++i) {
    const auto& s = model.subsystem(i);
    json js;
    js["n"] = s.n;
    js["m"] = s.m;
    js["A"] = detail::dump_matrix(s.A);
    js["B"] = detail::dump_matrix(s.B);
    js["G"] = detail::dump_matrix(s.G);
    js["g"] = detail::dump_vector(s.g);
    js["Hc"] = detail::dump_matrix(s.Hc);
    js["hc"] = detail::dump_vector(s.hc);
    js["Q"] = detail::dump_matrix(s.Q);
    js["R"] = detail::dump_matrix(s.R);
    js["S"] = detail::dump_matrix(s.S);
    subs.push_back(std::move(js));
  }
  root["subsystems"] = std::move(subs);
  json nbrs = json::array();
  for (int i = 0; i < model.size(); ++i) {
    json row = json::array();
    for (int j : model.neighbors(i)) row.push_back(j + 1);  // 1-based on disk
    nbrs.push_back(std::move(row));
  }
  root["neighbors"] = std::move(nbrs);
  root["horizon"] = model.horizon();
  if (model.is_continuous()) {
    root["continuous"] = true;
    root["sampling_time"] = model.sampling_time();
  }
  return root;
}

}  // namespace

NetworkModel NetworkModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open network file " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("network file is not valid JSON: ") +
                      e.what());
  }

  const auto& jsubs = detail::require(root, "subsystems", "network");
  const auto& jnbrs = detail::require(root, "neighbors", "network");
  if (!jsubs.is_array() || !jnbrs.is_array())
    throw SchemaError("network: subsystems/neighbors must be arrays");

  std::vector<std::vector<int>> neighbors;
  for (const auto& row : jnbrs) {
    std::vector<int> nb;
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw SchemaError("neighbor ids must be integers");
      nb.push_back(v.get<int>() - 1);
    }
    neighbors.push_back(std::move(nb));
  }

  std::vector<SubsystemModel> subs;
  int idx = 0;
  for (const auto& js : jsubs) {
    const std::string ctx = "subsystem " + std::to_string(idx + 1);
    SubsystemModel s;
    s.n = detail::require(js, "n", ctx).get<int>();
    s.m = detail::require(js, "m", ctx).get<int>();
    s.A = detail::parse_matrix(detail::require(js, "A", ctx), ctx + ".A");
    s.B = detail::parse_matrix(detail::require(js, "B", ctx), ctx + ".B");
    s.G = detail::parse_matrix(detail::require(js, "G", ctx), ctx + ".G");
    s.g = detail::parse_vector(detail::require(js, "g", ctx), ctx + ".g");
    s.Hc = detail::parse_matrix(detail::require(js, "Hc", ctx), ctx + ".Hc");
    s.hc = detail::parse_vector(detail::require(js, "hc", ctx), ctx + ".hc");
    s.Q = detail::parse_matrix(detail::require(js, "Q", ctx), ctx + ".Q");
    s.R = detail::parse_matrix(detail::require(js, "R", ctx), ctx + ".R");
    s.S = detail::parse_matrix(detail::require(js, "S", ctx), ctx + ".S");
    subs.push_back(std::move(s));
    ++idx;
  }

  const int horizon = detail::require(root, "horizon", "network").get<int>();
  bool continuous = false;
  double sampling_time = 0.0;
  if (root.contains("continuous")) continuous = root["continuous"].get<bool>();
  if (root.contains("sampling_time"))
    sampling_time = root["sampling_time"].get<double>();

  return NetworkModel(std::move(subs), std::move(neighbors), horizon,
                      continuous, sampling_time);
}

void NetworkModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write network file " + path.string());
  out << model_to_json(*this).dump(1) << "\n";
}

ReferenceSignal load_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open reference file " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("reference file is not valid JSON: ") +
                      e.what());
  }
  ReferenceSignal ref;
  for (const auto& seg : detail::require(root, "segments", "reference")) {
    ReferenceSignal::Segment s;
    s.start_time = detail::require(seg, "start", "segment").get<int>();
    s.x_r = detail::parse_vector(detail::require(seg, "x_r", "segment"),
                                 "segment.x_r");
    ref.segments.push_back(std::move(s));
  }
  if (ref.segments.empty()) throw SchemaError("reference has no segments");
  std::sort(ref.segments.begin(), ref.segments.end(),
            [](const auto& a, const auto& b) { return a.start_time < b.start_time; });
  return ref;
}

void save_reference(const ReferenceSignal& ref,
                    const std::filesystem::path& path) {
  json root;
  json segs = json::array();
  for (const auto& s : ref.segments) {
    json seg;
    seg["start"] = s.start_time;
    seg["x_r"] = detail::dump_vector(s.x_r);
    segs.push_back(std::move(seg));
  }
  root["segments"] = std::move(segs);
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write reference file " + path.string());
  out << root.dump(1) << "\n";
}

}  // namespace dmpc
