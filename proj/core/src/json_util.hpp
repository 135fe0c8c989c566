#pragma once

#include <Eigen/Dense>
#include <string>

#include <json.hpp>

#include "dmpc/types.hpp"

namespace dmpc::detail {

using json = nlohmann::ordered_json;

inline const json& require(const json& j, const std::string& key,
                           const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline Eigen::MatrixXd parse_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw SchemaError(ctx + ": expected a matrix (array of rows)");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw SchemaError(ctx + ": ragged matrix rows");
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw SchemaError(ctx + ": non-numeric matrix entry");
      M(r, c) = row[c].get<double>();
    }
  }
  return M;
}

inline Eigen::VectorXd parse_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw SchemaError(ctx + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (int k = 0; k < static_cast<int>(j.size()); ++k) {
    if (!j[k].is_number())
      throw SchemaError(ctx + ": non-numeric vector entry");
    v[k] = j[k].get<double>();
  }
  return v;
}

inline json dump_matrix(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json dump_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int k = 0; k < v.size(); ++k) arr.push_back(v[k]);
  return arr;
}

}  // namespace dmpc::detail
