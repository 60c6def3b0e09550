#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "sls/estimator.hpp"
#include "sls/models.hpp"

namespace sls {

using Json = nlohmann::json;

// Numeric arrays may be given inline or as {"csv": path}.
Vec json_vec(const Json& j, const std::string& what);
Mat json_mat(const Json& j, const std::string& what);
Mat read_csv_matrix(const std::string& path);

// Design helpers shared by the CLI and the tests.
Mat gaussian_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed);
Mat sphere_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed);
Mat ar1_covariance(Eigen::Index p, double rho);
std::function<Vec(double)> dictionary(const std::string& name, Eigen::Index p,
                                      double a, double b);

std::unique_ptr<SlsModel> build_model(const Json& j);
QuadPenalty build_penalty(const Json& j, Eigen::Index p);

template <class T>
T json_get(const Json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: bad value for '" + key + "': " + e.what());
  }
}

template <class T>
T json_require(const Json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config: missing key '" + key + "'");
  return json_get<T>(j, key, T{});
}

}  // namespace sls
