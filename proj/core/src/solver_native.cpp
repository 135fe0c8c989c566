// First-order conic solver: ADMM on the homogeneous self-dual embedding
// (the operator-splitting scheme of O'Donoghue et al.). Handles the same
// cone set as the IR and detects infeasibility/unboundedness through the
// embedding certificates. One sparse LDL' factorization is reused across
// iterations and re-solves.

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "backend.hpp"

namespace dmpc::detail {

namespace {

struct ConeLayout {
  ConeKind kind;
  int start;
  int rows;  // svec rows for PSD
  int dim;   // matrix order for PSD
};

// Projection of the dual vector block onto K^*; the zero cone's dual is
// free, the rest are self-dual.
void project_dual(const std::vector<ConeLayout>& cones, Eigen::VectorXd& y) {
  for (const auto& c : cones) {
    switch (c.kind) {
      case ConeKind::Zero:
        break;  // free
      case ConeKind::Nonnegative:
        y.segment(c.start, c.rows) = y.segment(c.start, c.rows).cwiseMax(0.0);
        break;
      case ConeKind::SecondOrder: {
        auto blk = y.segment(c.start, c.rows);
        const double t = blk[0];
        const double nz = blk.tail(c.rows - 1).norm();
        if (nz <= t) break;
        if (nz <= -t) {
          blk.setZero();
          break;
        }
        const double coef = 0.5 * (1.0 + t / nz);
        blk[0] = coef * nz;
        blk.tail(c.rows - 1) *= coef;
        break;
      }
      case ConeKind::Psd: {
        auto blk = y.segment(c.start, c.rows);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unsvec(blk, c.dim));
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        const Eigen::MatrixXd proj = es.eigenvectors() * lam.asDiagonal() *
                                     es.eigenvectors().transpose();
        blk = svec(proj);
        break;
      }
    }
  }
}

class NativeBackend final : public Backend {
 public:
  NativeBackend(const CompiledProgram& cp, const SolveOptions& opts)
      : orig_(cp), pc_(epigraph_form(cp)), opts_(opts) {
    n_ = pc_.n;
    m_ = pc_.total_rows();
    int row = 0;
    for (const auto& c : pc_.cones) {
      const int rows = cone_rows(c);
      cones_.push_back({c.kind, row, rows, c.dim});
      row += rows;
    }
    setup_scaling();
    factorize();
    refresh_data();
    cold_start();
    if (opts_.warm_x) {
      warm_start(*opts_.warm_x,
                 opts_.warm_y ? *opts_.warm_y : Eigen::VectorXd(),
                 opts_.warm_s ? *opts_.warm_s : Eigen::VectorXd());
    }
  }

  const CompiledProgram& program() const override { return orig_; }

  void set_b(int row_start, const Eigen::VectorXd& values) override {
    orig_.b.segment(row_start, values.size()) = values;
    pc_.b.segment(row_start, values.size()) = values;
    data_dirty_ = true;
  }

  void set_q0(const Eigen::VectorXd& q0) override {
    orig_.q0 = q0;
    pc_.q0.head(q0.size()) = q0;
    data_dirty_ = true;
  }

  void set_w(int row_start, const Eigen::VectorXd& values) override {
    orig_.w.segment(row_start, values.size()) = values;
    // Epigraph rows carry sqrt(2) * w as their constant part.
    const int soc_start = static_cast<int>(orig_.A.rows()) + 2;
    pc_.b.segment(soc_start + row_start, values.size()) =
        std::sqrt(2.0) * values;
    data_dirty_ = true;
  }

  void reset_warm() override { cold_start(); }

  SolveResult run() override {
    const auto t0 = std::chrono::steady_clock::now();
    if (data_dirty_) refresh_data();

    SolveResult res;
    res.stats.backend = "native";
    if (!factor_ok_) {
      res.status = SolveStatus::NumericalError;
      return res;
    }

    const int max_iters = opts_.max_iters > 0 ? opts_.max_iters : 200000;
    const double alpha = 1.5;  // over-relaxation
    constexpr int check_every = 25;

    Eigen::VectorXd w(n_ + m_ + 1), ut(n_ + m_ + 1), u_pre(n_ + m_ + 1);
    int k = 0;
    SolveStatus status = SolveStatus::TimeLimit;
    for (k = 1; k <= max_iters; ++k) {
      // ut = (I+Q)^{-1} (u + v), then over-relax
      w = u_ + v_;
      solve_iq(w, ut);
      ut = alpha * ut + (1.0 - alpha) * u_;
      u_pre = ut - v_;
      u_ = u_pre;
      project_cone(u_);     // u+ = Pi_C(ut - v)
      v_ += u_ - ut;        // v+ = v + u+ - ut

      if (k % check_every == 0 || k == max_iters) {
        const auto verdict = classify();
        if (verdict != SolveStatus::TimeLimit) {
          status = verdict;
          break;
        }
        if (opts_.time_limit_s > 0) {
          const double el =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
          if (el > opts_.time_limit_s) break;
        }
      }
    }

    res.stats.iterations = std::min(k, max_iters);
    res.status = status;
    const double tau = u_[n_ + m_];
    if (status == SolveStatus::Optimal ||
        (status == SolveStatus::TimeLimit && tau > 1e-9)) {
      res.x = unscale_x(u_, tau);
      res.objective = orig_.objective_at(res.x);
      res.incumbent = status != SolveStatus::Optimal;
    }
    res.stats.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return res;
  }

 private:
  void setup_scaling() {
    // Ruiz equilibration with one shared scale per SOC/PSD block so cone
    // membership is preserved.
    D_ = Eigen::VectorXd::Ones(m_);
    E_ = Eigen::VectorXd::Ones(n_);
    Eigen::SparseMatrix<double> S = pc_.A;
    for (int pass = 0; pass < 10; ++pass) {
      Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m_);
      Eigen::VectorXd cmax = Eigen::VectorXd::Zero(n_);
      for (int j = 0; j < S.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(S, j); it; ++it) {
          const double a = std::abs(it.value());
          rmax[it.row()] = std::max(rmax[it.row()], a);
          cmax[j] = std::max(cmax[j], a);
        }
      }
      for (const auto& c : cones_) {
        if (c.kind == ConeKind::SecondOrder || c.kind == ConeKind::Psd) {
          const double blk = rmax.segment(c.start, c.rows).maxCoeff();
          rmax.segment(c.start, c.rows).setConstant(blk);
        }
      }
      Eigen::VectorXd dr(m_), dc(n_);
      for (int i = 0; i < m_; ++i)
        dr[i] = rmax[i] > 1e-12 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
      for (int j = 0; j < n_; ++j)
        dc[j] = cmax[j] > 1e-12 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
      D_ = D_.cwiseProduct(dr);
      E_ = E_.cwiseProduct(dc);
      S = dr.asDiagonal() * S * dc.asDiagonal();
    }
    As_ = S;
  }

  void factorize() {
    // M = [[I, As'], [As, -I]] is symmetric quasi-definite.
    const int N = n_ + m_;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * As_.nonZeros() + N);
    for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, 1.0);
    for (int i = 0; i < m_; ++i) trips.emplace_back(n_ + i, n_ + i, -1.0);
    for (int j = 0; j < As_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(As_, j); it; ++it) {
        trips.emplace_back(n_ + it.row(), j, it.value());
        trips.emplace_back(j, n_ + it.row(), it.value());
      }
    }
    Eigen::SparseMatrix<double> M(N, N);
    M.setFromTriplets(trips.begin(), trips.end());
    ldlt_.compute(M);
    factor_ok_ = ldlt_.info() == Eigen::Success;
  }

  // F = [[I, As'], [-As, I]];  F(p,q) = (a1,a2)  <=>  M(p,q) = (a1,-a2)
  Eigen::VectorXd solve_f(const Eigen::VectorXd& a1,
                          const Eigen::VectorXd& a2) const {
    Eigen::VectorXd rhs(n_ + m_);
    rhs.head(n_) = a1;
    rhs.tail(m_) = -a2;
    return ldlt_.solve(rhs);
  }

  void refresh_data() {
    bs_ = D_.cwiseProduct(pc_.b);
    cs_ = E_.cwiseProduct(pc_.q0);
    // balance the primal/dual scales seen by the embedding
    const double nb = bs_.norm(), nc = cs_.norm();
    beta_b_ = 1.0;
    beta_c_ = 1.0;
    if (nb > 1e-10 && nc > 1e-10) {
      const double g = std::sqrt(nc / nb);
      beta_b_ = g;
      beta_c_ = 1.0 / g;
    }
    bs_ *= beta_b_;
    cs_ *= beta_c_;
    if (factor_ok_) {
      fih_ = solve_f(cs_, bs_);
      denom_ = 1.0 + cs_.dot(fih_.head(n_)) + bs_.dot(fih_.tail(m_));
    }
    data_dirty_ = false;
  }

  void cold_start() {
    u_ = Eigen::VectorXd::Zero(n_ + m_ + 1);
    v_ = Eigen::VectorXd::Zero(n_ + m_ + 1);
    u_[n_ + m_] = 1.0;
    v_[n_ + m_] = 1.0;
  }

  void warm_start(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& s) {
    cold_start();
    if (x.size() != orig_.n) return;
    Eigen::VectorXd xt(n_);
    xt.head(orig_.n) = x;
    if (n_ > orig_.n) xt[orig_.n] = (orig_.W * x + orig_.w).squaredNorm();
    u_.head(n_) = beta_b_ * xt.cwiseQuotient(E_);
    if (y.size() == m_) u_.segment(n_, m_) = beta_c_ * y.cwiseQuotient(D_);
    if (s.size() == m_) v_.segment(n_, m_) = beta_b_ * D_.cwiseProduct(s);
    v_[n_ + m_] = 0.0;
  }

  void solve_iq(const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
    const Eigen::VectorXd pq0 = solve_f(w.head(n_), w.segment(n_, m_));
    const double t =
        (w[n_ + m_] + cs_.dot(pq0.head(n_)) + bs_.dot(pq0.tail(m_))) / denom_;
    out.head(n_ + m_) = pq0 - t * fih_;
    out[n_ + m_] = t;
  }

  void project_cone(Eigen::VectorXd& u) const {
    Eigen::VectorXd y = u.segment(n_, m_);
    project_dual(cones_, y);
    u.segment(n_, m_) = y;
    u[n_ + m_] = std::max(0.0, u[n_ + m_]);
  }

  Eigen::VectorXd unscale_x(const Eigen::VectorXd& u, double tau) const {
    const Eigen::VectorXd xt = u.head(n_) / tau;
    const Eigen::VectorXd xs = E_.cwiseProduct(xt) / beta_b_;
    return xs.head(orig_.n);
  }

  SolveStatus classify() {
    const double tau = u_[n_ + m_];
    if (tau > 1e-11) {
      const Eigen::VectorXd x = E_.cwiseProduct(u_.head(n_)) / (tau * beta_b_);
      const Eigen::VectorXd y =
          D_.cwiseProduct(u_.segment(n_, m_)) / (tau * beta_c_);
      const Eigen::VectorXd s =
          v_.segment(n_, m_).cwiseQuotient(D_) / (tau * beta_b_);
      const Eigen::VectorXd& b = pc_.b;
      const Eigen::VectorXd& c = pc_.q0;
      const double pres = (pc_.A * x + s - b).norm() / (1.0 + b.norm());
      const double dres =
          (pc_.A.transpose() * y + c).norm() / (1.0 + c.norm());
      const double ctx = c.dot(x), bty = b.dot(y);
      const double gap =
          std::abs(ctx + bty) / (1.0 + std::abs(ctx) + std::abs(bty));
      if (pres <= opts_.feas_tol && dres <= opts_.feas_tol &&
          gap <= opts_.gap_tol)
        return SolveStatus::Optimal;
    }
    // certificates from the raw embedding point
    const Eigen::VectorXd yr = D_.cwiseProduct(u_.segment(n_, m_)) / beta_c_;
    const double bty = pc_.b.dot(yr);
    if (bty < -1e-12) {
      const Eigen::VectorXd yn = yr / (-bty);
      if ((pc_.A.transpose() * yn).norm() <= opts_.feas_tol)
        return SolveStatus::Infeasible;
    }
    const Eigen::VectorXd xr = E_.cwiseProduct(u_.head(n_)) / beta_b_;
    const double ctx = pc_.q0.dot(xr);
    if (ctx < -1e-12) {
      const Eigen::VectorXd sr = v_.segment(n_, m_).cwiseQuotient(D_) / beta_b_;
      const Eigen::VectorXd xn = xr / (-ctx);
      const Eigen::VectorXd sn = sr / (-ctx);
      if ((pc_.A * xn + sn).norm() <= opts_.feas_tol)
        return SolveStatus::Unbounded;
    }
    return SolveStatus::TimeLimit;  // keep iterating
  }

  CompiledProgram orig_;
  CompiledProgram pc_;
  SolveOptions opts_;
  int n_ = 0, m_ = 0;
  std::vector<ConeLayout> cones_;
  Eigen::VectorXd D_, E_;
  double beta_b_ = 1.0, beta_c_ = 1.0;
  Eigen::SparseMatrix<double> As_;
  Eigen::VectorXd bs_, cs_, fih_;
  double denom_ = 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool factor_ok_ = false;
  bool data_dirty_ = true;
  Eigen::VectorXd u_, v_;
};

}  // namespace

std::unique_ptr<Backend> make_native_backend(const CompiledProgram& cp,
                                             const SolveOptions& opts) {
  return std::make_unique<NativeBackend>(cp, opts);
}

}  // namespace dmpc::detail
