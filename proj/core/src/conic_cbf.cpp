#include <charconv>
#include <sstream>
#include <vector>

#include "dmpc/conic.hpp"

namespace dmpc {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

std::string num(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                               std::chars_format::general, 17);
  return std::string(buf, p);
}

// (row within svec block) -> (r, c, scale) of the upper triangle entry
struct TriEntry {
  int r, c;
  double scale;
};

TriEntry tri_entry(int k) {
  int c = 0;
  while (svec_dim(c + 1) <= k) ++c;
  const int r = k - svec_dim(c);
  return {r, c, r == c ? 1.0 : kSqrt2};
}

}  // namespace

std::string ConicProgram::dump_cbf() const {
  const CompiledProgram pure = epigraph_form(compile());

  std::ostringstream os;
  os << "VER\n1\n\n";
  os << "OBJSENSE\nMIN\n\n";
  os << "VAR\n" << pure.n << " 1\nF " << pure.n << "\n\n";

  // Split rows into scalar-cone rows (emitted in CON) and PSD blocks.
  struct ScalarBlock {
    const char* name;
    int dim;
  };
  std::vector<ScalarBlock> scalar_blocks;
  std::vector<int> psd_dims;
  std::vector<int> row_to_psd(pure.total_rows(), -1);   // psd index
  std::vector<int> row_to_local(pure.total_rows(), -1); // svec row in block
  std::vector<int> row_to_scalar(pure.total_rows(), -1);
  int row = 0, scalar_rows = 0;
  for (const auto& c : pure.cones) {
    const int rows = cone_rows(c);
    if (c.kind == ConeKind::Psd) {
      for (int k = 0; k < rows; ++k) {
        row_to_psd[row + k] = static_cast<int>(psd_dims.size());
        row_to_local[row + k] = k;
      }
      psd_dims.push_back(c.dim);
    } else {
      const char* name = c.kind == ConeKind::Zero          ? "L="
                         : c.kind == ConeKind::Nonnegative ? "L+"
                                                           : "Q";
      scalar_blocks.push_back({name, rows});
      for (int k = 0; k < rows; ++k) row_to_scalar[row + k] = scalar_rows + k;
      scalar_rows += rows;
    }
    row += rows;
  }

  if (scalar_rows > 0) {
    os << "CON\n" << scalar_rows << " " << scalar_blocks.size() << "\n";
    for (const auto& b : scalar_blocks) os << b.name << " " << b.dim << "\n";
    os << "\n";
  }
  if (!psd_dims.empty()) {
    os << "PSDCON\n" << psd_dims.size() << "\n";
    for (int d : psd_dims) os << d << "\n";
    os << "\n";
  }

  std::ostringstream acoord, bcoord, fcoord, hcoord;
  int an = 0, bn = 0, fn = 0, hn = 0;
  for (int k = 0; k < pure.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(pure.A, k); it; ++it) {
      const int r = static_cast<int>(it.row());
      const double coeff = -it.value();  // rows are b - A x
      if (row_to_scalar[r] >= 0) {
        acoord << row_to_scalar[r] << " " << it.col() << " " << num(coeff)
               << "\n";
        ++an;
      } else {
        const auto e = tri_entry(row_to_local[r]);
        fcoord << row_to_psd[r] << " " << it.col() << " " << e.c << " " << e.r
               << " " << num(coeff / e.scale) << "\n";
        ++fn;
      }
    }
  }
  for (int r = 0; r < pure.total_rows(); ++r) {
    if (pure.b[r] == 0.0) continue;
    if (row_to_scalar[r] >= 0) {
      bcoord << row_to_scalar[r] << " " << num(pure.b[r]) << "\n";
      ++bn;
    } else {
      const auto e = tri_entry(row_to_local[r]);
      hcoord << row_to_psd[r] << " " << e.c << " " << e.r << " "
             << num(pure.b[r] / e.scale) << "\n";
      ++hn;
    }
  }

  int on = 0;
  std::ostringstream ocoord;
  for (int j = 0; j < pure.n; ++j) {
    if (pure.q0[j] != 0.0) {
      ocoord << j << " " << num(pure.q0[j]) << "\n";
      ++on;
    }
  }
  if (on > 0) os << "OBJACOORD\n" << on << "\n" << ocoord.str() << "\n";
  if (pure.r0 != 0.0) os << "OBJBCOORD\n" << num(pure.r0) << "\n\n";
  if (fn > 0) os << "FCOORD\n" << fn << "\n" << fcoord.str() << "\n";
  if (an > 0) os << "ACOORD\n" << an << "\n" << acoord.str() << "\n";
  if (bn > 0) os << "BCOORD\n" << bn << "\n" << bcoord.str() << "\n";
  if (hn > 0) os << "HCOORD\n" << hn << "\n" << hcoord.str() << "\n";
  return os.str();
}

}  // namespace dmpc
