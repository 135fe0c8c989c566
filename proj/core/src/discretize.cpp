#include "dmpc/discretize.hpp"

#include <algorithm>
#include <cmath>

namespace dmpc {

SparsityPattern SparsityPattern::from_model(const NetworkModel& model) {
  SparsityPattern p;
  for (int i = 0; i < model.size(); ++i)
    for (int j : model.neighbors(i)) p.blocks.emplace_back(i, j);
  std::sort(p.blocks.begin(), p.blocks.end());
  p.blocks.erase(std::unique(p.blocks.begin(), p.blocks.end()), p.blocks.end());
  return p;
}

bool SparsityPattern::allows(int i, int j) const {
  return std::binary_search(blocks.begin(), blocks.end(), std::make_pair(i, j));
}

void SparsityPattern::validate(int num_blocks) const {
  for (int i = 0; i < num_blocks; ++i)
    if (!allows(i, i))
      throw SchemaError("sparsity pattern misses diagonal block " +
                        std::to_string(i + 1));
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A, double h) {
  if (A.rows() != A.cols()) throw DimensionError("matrix_exponential: not square");
  if (!A.allFinite() || !std::isfinite(h))
    throw SchemaError("matrix_exponential: non-finite input");
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd X = A * h;
  const double norm = X.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    X /= std::pow(2.0, squarings);
  }
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * X) / static_cast<double>(k);
    result += term;
    if (term.norm() <= 1e-20 * result.norm()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Eigen::MatrixXd project_pattern(const Eigen::MatrixXd& M,
                                const SparsityPattern& pattern,
                                const std::vector<int>& row_offsets,
                                const std::vector<int>& col_offsets) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M.rows(), M.cols());
  const int nb_r = static_cast<int>(row_offsets.size()) - 1;
  const int nb_c = static_cast<int>(col_offsets.size()) - 1;
  for (int i = 0; i < nb_r; ++i) {
    for (int j = 0; j < nb_c; ++j) {
      if (!pattern.allows(i, j)) continue;
      const int r0 = row_offsets[i], r1 = row_offsets[i + 1];
      const int c0 = col_offsets[j], c1 = col_offsets[j + 1];
      out.block(r0, c0, r1 - r0, c1 - c0) = M.block(r0, c0, r1 - r0, c1 - c0);
    }
  }
  return out;
}

double spectral_radius(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

NetworkModel discretize_network(const NetworkModel& model, double h,
                                DiscretizeReport* report) {
  if (!model.is_continuous())
    throw SchemaError("discretize_network: model is already discrete");
  if (!(h > 0)) throw SchemaError("discretize_network: sampling time must be > 0");

  const int n = model.total_state_dim();
  const int m = model.total_input_dim();
  const Eigen::MatrixXd Ac = model.global_A();
  const Eigen::MatrixXd Bc = model.global_B();

  // Augmented exponential gives the state transition and its integral:
  // exp([[Ac, I], [0, 0]] h) = [[e^{Ac h}, int_0^h e^{Ac s} ds], [0, I]].
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = Ac;
  aug.topRightCorner(n, n).setIdentity();
  const Eigen::MatrixXd E = matrix_exponential(aug, h);
  const Eigen::MatrixXd Ad_exact = E.topLeftCorner(n, n);
  const Eigen::MatrixXd Bd_exact = E.topRightCorner(n, n) * Bc;

  std::vector<int> srow(model.size() + 1), irow(model.size() + 1);
  for (int i = 0; i <= model.size(); ++i) {
    srow[i] = i < model.size() ? model.state_offset(i) : n;
    irow[i] = i < model.size() ? model.input_offset(i) : m;
  }

  const SparsityPattern pattern = SparsityPattern::from_model(model);
  pattern.validate(model.size());
  const Eigen::MatrixXd Ad = project_pattern(Ad_exact, pattern, srow, srow);

  SparsityPattern diag;
  for (int i = 0; i < model.size(); ++i) diag.blocks.emplace_back(i, i);
  const Eigen::MatrixXd Bd = project_pattern(Bd_exact, diag, srow, irow);

  if (report) {
    report->spectral_radius_exact = spectral_radius(Ad_exact);
    report->spectral_radius_projected = spectral_radius(Ad);
    report->instability_warning =
        report->spectral_radius_projected >
        1.1 * report->spectral_radius_exact;
  }

  std::vector<Eigen::MatrixXd> A_blocks, B_blocks;
  for (int i = 0; i < model.size(); ++i) {
    const auto& s = model.subsystem(i);
    Eigen::MatrixXd Ai(s.n, model.nbhd_dim(i));
    int col = 0;
    for (int j : model.neighbors(i)) {
      const int nj = model.subsystem(j).n;
      Ai.block(0, col, s.n, nj) =
          Ad.block(model.state_offset(i), model.state_offset(j), s.n, nj);
      col += nj;
    }
    A_blocks.push_back(std::move(Ai));
    B_blocks.push_back(
        Bd.block(model.state_offset(i), model.input_offset(i), s.n, s.m));
  }
  return model.with_discrete_dynamics(A_blocks, B_blocks, h);
}

}  // namespace dmpc
