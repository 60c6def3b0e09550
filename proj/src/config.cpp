#include "sls/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sls {

Mat read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw ConfigError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty matrix file: " + path);
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return m;
}

Vec json_vec(const Json& j, const std::string& what) {
  if (j.is_object() && j.contains("csv")) {
    Mat m = read_csv_matrix(j.at("csv").get<std::string>());
    return Eigen::Map<Vec>(m.data(), m.size());
  }
  if (!j.is_array()) throw ConfigError("config: '" + what + "' must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("config: '" + what + "' must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Mat json_mat(const Json& j, const std::string& what) {
  if (j.is_object() && j.contains("csv")) return read_csv_matrix(j.at("csv").get<std::string>());
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("config: '" + what + "' must be an array of rows");
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    Vec r = json_vec(j[i], what);
    if (r.size() != m.cols()) throw ConfigError("config: ragged rows in '" + what + "'");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

Mat gaussian_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, 0xd351);
  Mat x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = standard_normal(rng, p).transpose();
  return x;
}

// Rows uniform on the sphere of radius sqrt(p), so E psi psi^T = I.
Mat sphere_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, 0x5b4e);
  Mat x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec g = standard_normal(rng, p);
    x.row(i) = (std::sqrt(static_cast<double>(p)) / g.norm()) * g.transpose();
  }
  return x;
}

Mat ar1_covariance(Eigen::Index p, double rho) {
  if (!(std::abs(rho) < 1.0)) throw ConfigError("config: AR(1) rho must lie in (-1, 1)");
  Mat s(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index k = 0; k < p; ++k) s(i, k) = std::pow(rho, std::abs(static_cast<double>(i - k)));
  return s;
}

std::function<Vec(double)> dictionary(const std::string& name, Eigen::Index p, double a,
                                      double b) {
  if (name == "poly") {
    return [=](double x) {
      double t = (2.0 * x - a - b) / (b - a);
      Vec v(p);
      double acc = 1.0;
      for (Eigen::Index k = 0; k < p; ++k) v(k) = (acc *= t);
      return v;
    };
  }
  if (name == "cosine") {
    return [=](double x) {
      Vec v(p);
      for (Eigen::Index k = 0; k < p; ++k)
        v(k) = std::sqrt(2.0) * std::cos(M_PI * static_cast<double>(k + 1) * (x - a) / (b - a));
      return v;
    };
  }
  if (name == "gauss") {
    if (p != 2) throw ConfigError("config: gauss dictionary has p = 2");
    return [](double x) {
      Vec v(2);
      v << x, -0.5 * x * x;
      return v;
    };
  }
  throw ConfigError("config: unknown dictionary '" + name + "'");
}

std::unique_ptr<SlsModel> build_model(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: 'model' must be an object");
  auto kind = json_require<std::string>(j, "kind");
  if (kind == "logistic") {
    Mat design;
    if (j.contains("design") && !j.at("design").is_string()) {
      design = json_mat(j.at("design"), "design");
    } else {
      auto n = json_require<Eigen::Index>(j, "n");
      auto p = json_require<Eigen::Index>(j, "p");
      auto seed = json_get<std::uint64_t>(j, "design_seed", 1);
      auto type = json_get<std::string>(j, "design", "gaussian");
      if (n < 1 || p < 1) throw ConfigError("config: logistic n and p must be >= 1");
      if (type == "gaussian")
        design = gaussian_design(n, p, seed);
      else if (type == "sphere")
        design = sphere_design(n, p, seed);
      else
        throw ConfigError("config: unknown design '" + type + "'");
    }
    Vec truth = j.contains("truth") ? json_vec(j.at("truth"), "truth") : Vec::Zero(design.cols());
    if (truth.size() != design.cols()) throw ConfigError("config: logistic truth has wrong size");
    return std::make_unique<LogisticModel>(design, truth);
  }
  if (kind == "histogram") {
    Vec theta = json_vec(json_require<Json>(j, "theta"), "theta");
    return std::make_unique<HistogramModel>(theta, json_require<double>(j, "n"));
  }
  if (kind == "logdensity") {
    auto basis = json_get<std::string>(j, "basis", "poly");
    Vec interval = j.contains("interval") ? json_vec(j.at("interval"), "interval") : Vec(Vec::LinSpaced(2, 0.0, 1.0));
    if (interval.size() != 2) throw ConfigError("config: interval needs two endpoints");
    int m = json_get<int>(j, "m", 2001);
    Vec truth = json_vec(json_require<Json>(j, "truth"), "truth");
    auto dict = dictionary(basis, truth.size(), interval(0), interval(1));
    return std::make_unique<LogDensityModel>(LogDensityModel::on_interval(
        interval(0), interval(1), m, dict, truth, json_require<double>(j, "n")));
  }
  if (kind == "precision") {
    Mat sigma;
    if (j.contains("sigma"))
      sigma = json_mat(j.at("sigma"), "sigma");
    else
      sigma = ar1_covariance(json_require<Eigen::Index>(j, "p"), json_get<double>(j, "rho", 0.0));
    return std::make_unique<PrecisionModel>(sigma, json_require<double>(j, "n"));
  }
  if (kind == "quadratic") {
    Mat f;
    if (j.contains("F"))
      f = json_mat(j.at("F"), "F");
    else
      f = json_vec(json_require<Json>(j, "diag"), "diag").asDiagonal();
    Vec truth = json_vec(json_require<Json>(j, "truth"), "truth");
    Mat var = j.contains("var") ? json_mat(j.at("var"), "var") : Mat();
    return std::make_unique<QuadraticModel>(f, truth, var, json_get<double>(j, "n", 1.0));
  }
  throw ConfigError("config: unknown model kind '" + kind + "'");
}

QuadPenalty build_penalty(const Json& j, Eigen::Index p) {
  if (j.is_null()) return QuadPenalty::none();
  auto kind = json_require<std::string>(j, "kind");
  if (kind == "none") return QuadPenalty::none();
  if (kind == "ridge") return QuadPenalty::ridge(json_require<double>(j, "g2"));
  if (kind == "diagonal") {
    Vec d = json_vec(json_require<Json>(j, "diag"), "diag");
    if (d.size() != p) throw ConfigError("config: penalty diagonal has wrong size");
    return QuadPenalty::from_diagonal(d);
  }
  if (kind == "dense") {
    Mat g = json_mat(json_require<Json>(j, "G2"), "G2");
    if (g.rows() != p) throw ConfigError("config: penalty matrix has wrong size");
    return QuadPenalty::from_dense(g);
  }
  if (kind == "projection") {
    auto idx = json_require<std::vector<Eigen::Index>>(j, "index");
    for (auto i : idx)
      if (i < 0 || i >= p) throw ConfigError("config: projection index out of range");
    return QuadPenalty::projection(idx);
  }
  if (kind == "cutoff") {
    auto J = json_require<Eigen::Index>(j, "J");
    if (J < 0 || J > p) throw ConfigError("config: cut-off index must lie in [0, p]");
    return QuadPenalty::cutoff(J);
  }
  throw ConfigError("config: unknown penalty kind '" + kind + "'");
}

}  // namespace sls
