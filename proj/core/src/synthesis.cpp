#include "dmpc/synthesis.hpp"

#include <fstream>
#include <random>

#include "json_util.hpp"

namespace dmpc {

namespace {

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

std::string ename(int i) { return "E" + std::to_string(i); }
std::string yname(int i) { return "Y" + std::to_string(i); }
std::string gname(int i) { return "Gamma" + std::to_string(i); }
std::string tname(int i, int j) {
  return "Theta" + std::to_string(i) + "_" + std::to_string(j);
}

// Global stage-cost matrices used by the decrease certificate.
Eigen::MatrixXd assemble_q(const NetworkModel& model) {
  const int n = model.total_state_dim();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < model.size(); ++i) {
    const Eigen::MatrixXd T = model.lift_matrix(i);
    Q += T.transpose() * model.subsystem(i).Q * T;
  }
  return Q;
}

Eigen::MatrixXd assemble_r(const NetworkModel& model) {
  const int m = model.total_input_dim();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < model.size(); ++i)
    R.block(model.input_offset(i), model.input_offset(i),
            model.subsystem(i).m, model.subsystem(i).m) = model.subsystem(i).R;
  return R;
}

Eigen::MatrixXd assemble_gain(const NetworkModel& model,
                              const std::vector<Eigen::MatrixXd>& K) {
  Eigen::MatrixXd Kg =
      Eigen::MatrixXd::Zero(model.total_input_dim(), model.total_state_dim());
  for (int i = 0; i < model.size(); ++i)
    Kg.block(model.input_offset(i), 0, model.subsystem(i).m,
             model.total_state_dim()) = K[i] * model.lift_matrix(i);
  return Kg;
}

}  // namespace

TerminalIngredients synthesize(const NetworkModel& model,
                               std::vector<double> eps,
                               const SolveOptions& opts) {
  if (model.is_continuous())
    throw SchemaError("synthesize: model must be discrete");
  const int M = model.size();
  if (eps.empty()) eps.assign(M, 1e-6);
  if (static_cast<int>(eps.size()) != M)
    throw DimensionError("synthesize: eps needs one entry per subsystem");
  for (double e : eps)
    if (!(e > 0)) throw SchemaError("synthesize: eps must be positive");

  ConicProgram prog;
  std::vector<AffMat> E(M), Gamma(M), Y(M);
  std::vector<std::vector<AffMat>> Theta(M);  // blocks of Theta_i, per j in N_i

  for (int i = 0; i < M; ++i) {
    const auto& s = model.subsystem(i);
    E[i] = prog.add_symmetric(ename(i), s.n);
    Y[i] = prog.mat(prog.add_variable(yname(i), s.m, model.nbhd_dim(i)));
    Gamma[i] = prog.add_symmetric(gname(i), model.nbhd_dim(i));
    for (int j : model.neighbors(i))
      Theta[i].push_back(prog.add_symmetric(tname(i, j), model.subsystem(j).n));
  }

  for (int i = 0; i < M; ++i) {
    const auto& s = model.subsystem(i);
    const int nn = model.nbhd_dim(i);

    // E_i >= eps_i I
    prog.add_psd(E[i] - aff_from(eps[i] * Eigen::MatrixXd::Identity(s.n, s.n)),
                 "eps" + std::to_string(i));

    // block-diagonal E_{N_i}
    AffMat E_ni(nn, nn);
    {
      int off = 0;
      for (int j : model.neighbors(i)) {
        set_block(E_ni, off, off, E[j]);
        off += model.subsystem(j).n;
      }
    }
    // own E_i lifted to its neighborhood position, plus the relaxation
    AffMat blk11 = Gamma[i];
    {
      AffMat lifted(nn, nn);
      const int self = model.nbhd_offset(i, i);
      set_block(lifted, self, self, E[i]);
      blk11 = blk11 + lifted;
    }

    const AffMat AEBY = mat_mul(s.A, E_ni) + mat_mul(s.B, Y[i]);
    const Eigen::MatrixXd Qs = sym_sqrt(s.Q);
    const Eigen::MatrixXd Rs = sym_sqrt(s.R);
    const AffMat QE = mat_mul(Qs, E_ni);
    const AffMat RY = mat_mul(Rs, Y[i]);

    const int dim = nn + s.n + nn + s.m;
    AffMat lmi(dim, dim);
    set_block(lmi, 0, 0, blk11);
    set_block(lmi, nn, 0, AEBY);
    set_block(lmi, 0, nn, transpose(AEBY));
    set_block(lmi, nn, nn, E[i]);
    set_block(lmi, nn + s.n, 0, QE);
    set_block(lmi, 0, nn + s.n, transpose(QE));
    set_block(lmi, nn + s.n, nn + s.n,
              aff_from(Eigen::MatrixXd::Identity(nn, nn)));
    set_block(lmi, nn + s.n + nn, 0, RY);
    set_block(lmi, 0, nn + s.n + nn, transpose(RY));
    set_block(lmi, nn + s.n + nn, nn + s.n + nn,
              aff_from(Eigen::MatrixXd::Identity(s.m, s.m)));
    prog.add_psd(lmi, "lmi" + std::to_string(i));

    // Gamma_i <= Theta_i (block diagonal)
    AffMat theta_full(nn, nn);
    {
      int off = 0, idx = 0;
      for (int j : model.neighbors(i)) {
        set_block(theta_full, off, off, Theta[i][idx]);
        off += model.subsystem(j).n;
        ++idx;
      }
    }
    prog.add_psd(theta_full - Gamma[i], "relax" + std::to_string(i));
  }

  // Per node i: sum over j in N_i of the (i,i) block of Theta_j <= 0.
  for (int i = 0; i < M; ++i) {
    const auto& s = model.subsystem(i);
    AffMat sum(s.n, s.n);
    for (int j : model.neighbors(i)) {
      const auto& nbj = model.neighbors(j);
      const int idx = static_cast<int>(
          std::find(nbj.begin(), nbj.end(), i) - nbj.begin());
      sum = sum + Theta[j][idx];
    }
    prog.add_psd(scaled(sum, -1.0), "coupling" + std::to_string(i));
  }

  LinExpr trace_sum;
  for (int i = 0; i < M; ++i)
    for (int r = 0; r < model.subsystem(i).n; ++r) trace_sum += E[i](r, r);
  prog.add_lin_cost(-1.0 * trace_sum);

  // The trace-maximizing SDP sits on a degenerate boundary: feasibility is
  // what the certificate needs, the last digits of the objective are not.
  SolveOptions sopts = opts;
  sopts.gap_tol = std::max(sopts.gap_tol, 1e-4);
  sopts.chordal = false;
  if (sopts.max_iters == 0 && sopts.backend == "native") sopts.max_iters = 400000;
  const SolveResult res = solve(prog, sopts);
  if (res.status == SolveStatus::Infeasible)
    throw SynthesisInfeasible(
        "no distributed terminal pair exists for this structure");
  if (res.status != SolveStatus::Optimal)
    throw SolverFailure("synthesis solve failed: " + to_string(res.status));

  TerminalIngredients ing;
  ing.sub.resize(M);
  auto& cert = ing.certificate;
  cert.E.resize(M);
  cert.Y.resize(M);
  cert.Gamma.resize(M);
  cert.Theta.resize(M);
  cert.objective = 0.0;

  for (int i = 0; i < M; ++i) {
    cert.E[i] = prog.symmetric_value(ename(i), res.x);
    cert.Y[i] = res.value(prog.find(yname(i)));
    cert.Gamma[i] = prog.symmetric_value(gname(i), res.x);
    const int nn = model.nbhd_dim(i);
    cert.Theta[i] = Eigen::MatrixXd::Zero(nn, nn);
    int off = 0;
    for (int j : model.neighbors(i)) {
      cert.Theta[i].block(off, off, model.subsystem(j).n,
                          model.subsystem(j).n) =
          prog.symmetric_value(tname(i, j), res.x);
      off += model.subsystem(j).n;
    }
    cert.objective += cert.E[i].trace();
  }

  for (int i = 0; i < M; ++i) {
    const auto& s = model.subsystem(i);
    const int nn = model.nbhd_dim(i);
    Eigen::MatrixXd E_ni = Eigen::MatrixXd::Zero(nn, nn);
    {
      int off = 0;
      for (int j : model.neighbors(i)) {
        E_ni.block(off, off, model.subsystem(j).n, model.subsystem(j).n) =
            cert.E[j];
        off += model.subsystem(j).n;
      }
    }

    auto& sub = ing.sub[i];
    sub.eps = eps[i];
    sub.P_inv = 0.5 * (cert.E[i] + cert.E[i].transpose());
    sub.P = sub.P_inv.inverse();
    sub.P = 0.5 * (sub.P + sub.P.transpose());
    sub.K = cert.Y[i] * E_ni.inverse();
    sub.P_sqrt = sym_sqrt(sub.P);
    sub.P_inv_sqrt = sym_sqrt(sub.P_inv);
    (void)s;
  }

  // a-posteriori residuals
  cert.lmi_min_eig.resize(M);
  cert.coupling_max_eig.resize(M);
  for (int i = 0; i < M; ++i) {
    const auto& s = model.subsystem(i);
    const int nn = model.nbhd_dim(i);
    Eigen::MatrixXd E_ni = Eigen::MatrixXd::Zero(nn, nn);
    int off = 0;
    for (int j : model.neighbors(i)) {
      E_ni.block(off, off, model.subsystem(j).n, model.subsystem(j).n) =
          cert.E[j];
      off += model.subsystem(j).n;
    }
    const Eigen::MatrixXd AEBY = s.A * E_ni + s.B * cert.Y[i];
    const Eigen::MatrixXd QE = sym_sqrt(s.Q) * E_ni;
    const Eigen::MatrixXd RY = sym_sqrt(s.R) * cert.Y[i];
    const int dim = nn + s.n + nn + s.m;
    Eigen::MatrixXd lmi = Eigen::MatrixXd::Zero(dim, dim);
    lmi.block(0, 0, nn, nn) = cert.Gamma[i];
    const int self = model.nbhd_offset(i, i);
    lmi.block(self, self, s.n, s.n) += cert.E[i];
    lmi.block(nn, 0, s.n, nn) = AEBY;
    lmi.block(0, nn, nn, s.n) = AEBY.transpose();
    lmi.block(nn, nn, s.n, s.n) = cert.E[i];
    lmi.block(nn + s.n, 0, nn, nn) = QE;
    lmi.block(0, nn + s.n, nn, nn) = QE.transpose();
    lmi.block(nn + s.n, nn + s.n, nn, nn).setIdentity();
    lmi.block(nn + s.n + nn, 0, s.m, nn) = RY;
    lmi.block(0, nn + s.n + nn, nn, s.m) = RY.transpose();
    lmi.block(nn + s.n + nn, nn + s.n + nn, s.m, s.m).setIdentity();
    cert.lmi_min_eig[i] = check_psd(0.5 * (lmi + lmi.transpose()), 1e30).min_eigenvalue;

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(s.n, s.n);
    for (int j : model.neighbors(i)) {
      const Eigen::MatrixXd Wji = model.selector(j, i);
      sum += Wji * cert.Theta[j] * Wji.transpose();
    }
    cert.coupling_max_eig[i] =
        -check_psd(-0.5 * (sum + sum.transpose()), 1e30).min_eigenvalue;
  }

  {
    // Assembled E-domain certificate: with E = diag(E_i), Ybar = stacked
    // Y_i T_i and Gbar = sum_i T_i' Gamma_i T_i, the global analog of the
    // per-subsystem blocks must be PSD at the returned solution.
    const int n = model.total_state_dim();
    const int m = model.total_input_dim();
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Ybar = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd Gbar = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < M; ++i) {
      const Eigen::MatrixXd T = model.lift_matrix(i);
      E.block(model.state_offset(i), model.state_offset(i),
              model.subsystem(i).n, model.subsystem(i).n) = cert.E[i];
      Ybar.block(model.input_offset(i), 0, model.subsystem(i).m, n) =
          cert.Y[i] * T;
      Gbar += T.transpose() * cert.Gamma[i] * T;
    }
    const Eigen::MatrixXd AEBY = model.global_A() * E + model.global_B() * Ybar;
    const Eigen::MatrixXd Qs = sym_sqrt(assemble_q(model));
    const Eigen::MatrixXd Rs = sym_sqrt(assemble_r(model));
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(3 * n + m, 3 * n + m);
    G.block(0, 0, n, n) = E + Gbar;
    G.block(n, 0, n, n) = AEBY;
    G.block(0, n, n, n) = AEBY.transpose();
    G.block(n, n, n, n) = E;
    G.block(2 * n, 0, n, n) = Qs * E;
    G.block(0, 2 * n, n, n) = E * Qs;
    G.block(2 * n, 2 * n, n, n).setIdentity();
    G.block(3 * n, 0, m, n) = Rs * Ybar;
    G.block(0, 3 * n, n, m) = Ybar.transpose() * Rs;
    G.block(3 * n, 3 * n, m, m).setIdentity();
    cert.global_lmi_min_eig =
        check_psd(0.5 * (G + G.transpose()), 1e30).min_eigenvalue;
  }

  return ing;
}

Eigen::MatrixXd global_closed_loop(const NetworkModel& model,
                                   const TerminalIngredients& ing) {
  ing.check_compatible(model);
  std::vector<Eigen::MatrixXd> K;
  for (const auto& sub : ing.sub) K.push_back(sub.K);
  return model.global_A() + model.global_B() * assemble_gain(model, K);
}

void TerminalIngredients::check_compatible(const NetworkModel& model) const {
  if (size() != model.size())
    throw IngredientMismatchError("ingredient count does not match model");
  for (int i = 0; i < size(); ++i) {
    const auto& s = model.subsystem(i);
    if (sub[i].P.rows() != s.n || sub[i].K.rows() != s.m ||
        sub[i].K.cols() != model.nbhd_dim(i))
      throw IngredientMismatchError("ingredient shapes do not match model");
  }
}

DecreaseReport verify_ingredients(const NetworkModel& model,
                                  const TerminalIngredients& ing,
                                  int n_samples, uint64_t seed, double tol) {
  ing.check_compatible(model);
  const int n = model.total_state_dim();
  const Eigen::MatrixXd A = model.global_A();
  const Eigen::MatrixXd B = model.global_B();
  const Eigen::MatrixXd Q = assemble_q(model);
  const Eigen::MatrixXd R = assemble_r(model);
  std::vector<Eigen::MatrixXd> K;
  for (const auto& sub : ing.sub) K.push_back(sub.K);
  const Eigen::MatrixXd Kg = assemble_gain(model, K);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < model.size(); ++i)
    P.block(model.state_offset(i), model.state_offset(i), model.subsystem(i).n,
            model.subsystem(i).n) = ing.sub[i].P;

  DecreaseReport report;
  report.samples = n_samples;
  report.tol = tol;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < n_samples; ++k) {
    Eigen::VectorXd x =
        Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
    const double nx = x.norm();
    if (nx > 0) x /= nx;  // decrease is homogeneous; sample the unit sphere
    const Eigen::VectorXd u = Kg * x;
    const Eigen::VectorXd xp = A * x + B * u;
    const double lhs = xp.dot(P * xp) - x.dot(P * x);
    const double rhs = -x.dot(Q * x) - u.dot(R * u);
    const double violation = lhs - rhs;
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > tol) ++report.violations;
  }
  return report;
}

void TerminalIngredients::save(const std::filesystem::path& path) const {
  detail::json root;
  detail::json subs = detail::json::array();
  for (const auto& s : sub) {
    detail::json js;
    js["P"] = detail::dump_matrix(s.P);
    js["K"] = detail::dump_matrix(s.K);
    js["P_sqrt"] = detail::dump_matrix(s.P_sqrt);
    js["P_inv_sqrt"] = detail::dump_matrix(s.P_inv_sqrt);
    js["P_inv"] = detail::dump_matrix(s.P_inv);
    js["eps"] = s.eps;
    subs.push_back(std::move(js));
  }
  root["subsystems"] = std::move(subs);
  detail::json jc;
  auto dump_list = [](const std::vector<Eigen::MatrixXd>& v) {
    detail::json arr = detail::json::array();
    for (const auto& m : v) arr.push_back(detail::dump_matrix(m));
    return arr;
  };
  jc["E"] = dump_list(certificate.E);
  jc["Y"] = dump_list(certificate.Y);
  jc["Gamma"] = dump_list(certificate.Gamma);
  jc["Theta"] = dump_list(certificate.Theta);
  jc["lmi_min_eig"] = certificate.lmi_min_eig;
  jc["coupling_max_eig"] = certificate.coupling_max_eig;
  jc["global_lmi_min_eig"] = certificate.global_lmi_min_eig;
  jc["objective"] = certificate.objective;
  root["certificate"] = std::move(jc);
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write ingredients file " + path.string());
  out << root.dump(1) << "\n";
}

TerminalIngredients TerminalIngredients::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open ingredients file " + path.string());
  detail::json root;
  try {
    root = detail::json::parse(in);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("ingredients file is not valid JSON: ") +
                      e.what());
  }
  TerminalIngredients ing;
  for (const auto& js : detail::require(root, "subsystems", "ingredients")) {
    SubsystemIngredients s;
    s.P = detail::parse_matrix(detail::require(js, "P", "ingredient"), "P");
    s.K = detail::parse_matrix(detail::require(js, "K", "ingredient"), "K");
    s.P_sqrt = detail::parse_matrix(detail::require(js, "P_sqrt", "ingredient"),
                                    "P_sqrt");
    s.P_inv_sqrt = detail::parse_matrix(
        detail::require(js, "P_inv_sqrt", "ingredient"), "P_inv_sqrt");
    s.P_inv = detail::parse_matrix(detail::require(js, "P_inv", "ingredient"),
                                   "P_inv");
    s.eps = detail::require(js, "eps", "ingredient").get<double>();
    ing.sub.push_back(std::move(s));
  }
  if (root.contains("certificate")) {
    const auto& jc = root["certificate"];
    auto parse_list = [](const detail::json& arr) {
      std::vector<Eigen::MatrixXd> out;
      for (const auto& m : arr) out.push_back(detail::parse_matrix(m, "cert"));
      return out;
    };
    if (jc.contains("E")) ing.certificate.E = parse_list(jc["E"]);
    if (jc.contains("Y")) ing.certificate.Y = parse_list(jc["Y"]);
    if (jc.contains("Gamma")) ing.certificate.Gamma = parse_list(jc["Gamma"]);
    if (jc.contains("Theta")) ing.certificate.Theta = parse_list(jc["Theta"]);
    if (jc.contains("lmi_min_eig"))
      ing.certificate.lmi_min_eig = jc["lmi_min_eig"].get<std::vector<double>>();
    if (jc.contains("coupling_max_eig"))
      ing.certificate.coupling_max_eig =
          jc["coupling_max_eig"].get<std::vector<double>>();
    if (jc.contains("global_lmi_min_eig"))
      ing.certificate.global_lmi_min_eig =
          jc["global_lmi_min_eig"].get<double>();
    if (jc.contains("objective"))
      ing.certificate.objective = jc["objective"].get<double>();
  }
  return ing;
}

}  // namespace dmpc
