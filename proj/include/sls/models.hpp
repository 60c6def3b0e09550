#pragma once

#include <functional>
#include <string>
#include <utility>

#include "sls/common.hpp"

namespace sls {

struct ConditionConstants {
  double delta0 = 0.0;
  double varkappa = 0.0;
  double varkappa_conservative = 0.0;
  double tau3 = 0.0;
  double tau4 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double C_rho = 0.0;
  double C_psi3 = 0.0;
  double C_psi4 = 0.0;
  double C_psi4_raw = 0.0;
  bool variability_ok = true;
};

// A model whose loss is L(u) = f(u) + <grad_zeta, u> + const, with f = E L
// smooth and convex. Data enter the generic solver only through grad_zeta.
class SlsModel {
 public:
  virtual ~SlsModel() = default;

  virtual std::string kind() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual double sample_size() const = 0;
  virtual Vec truth() const = 0;
  virtual Vec start() const { return Vec::Zero(dim()); }
  virtual bool in_domain(const Vec&) const { return true; }

  // Population loss and its derivatives.
  virtual double value(const Vec& u) const = 0;
  virtual Vec gradient(const Vec& u) const = 0;
  virtual Mat hessian(const Vec& u) const = 0;
  virtual double third(const Vec& u, const Vec& z) const = 0;
  virtual double fourth(const Vec& u, const Vec& z) const = 0;
  // Vector w -> <grad^3 f(u), w (x) z (x) z>.
  virtual Vec third_contract(const Vec& u, const Vec& z) const = 0;

  virtual Mat grad_zeta_cov() const = 0;
  virtual Mat default_v2() const { return grad_zeta_cov(); }
  virtual Vec draw_grad_zeta(Rng& rng) const = 0;

  // Direction along which f is flat (empty if none).
  virtual Vec gauge() const { return Vec(); }
};

namespace logistic {
double phi(double u);
double phi1(double u);
double phi2(double u);
double phi3(double u);
double phi4(double u);
}  // namespace logistic

class LogisticModel : public SlsModel {
 public:
  LogisticModel(Mat design, Vec upsilon_star);
  static LogisticModel from_probabilities(Mat design, Vec theta_star);

  std::string kind() const override { return "logistic"; }
  Eigen::Index dim() const override { return psi_.cols(); }
  double sample_size() const override { return static_cast<double>(psi_.rows()); }
  Vec truth() const override { return truth_; }

  double value(const Vec& u) const override;
  Vec gradient(const Vec& u) const override;
  Mat hessian(const Vec& u) const override;
  double third(const Vec& u, const Vec& z) const override { return dir_deriv(u, z, 3); }
  double fourth(const Vec& u, const Vec& z) const override { return dir_deriv(u, z, 4); }
  Vec third_contract(const Vec& u, const Vec& z) const override;
  Mat grad_zeta_cov() const override;
  Vec draw_grad_zeta(Rng& rng) const override;

  const Mat& design() const { return psi_; }
  const Vec& theta_star() const { return theta_; }

  // Empirical loss with observed labels.
  double loss(const Vec& u, const Vec& y) const;
  Vec loss_gradient(const Vec& u, const Vec& y) const;
  Vec grad_zeta(const Vec& y) const;
  Vec sample_labels(Rng& rng) const;

  double dir_deriv(const Vec& u, const Vec& z, int order) const;

  // delta0, kappa (conservative e^{1/4} delta0, optionally tightened by a
  // randomised search of the quartic ratio at `center`), tau3, tau4.
  ConditionConstants conditions(const Mat& d, double r, const Vec& center,
                                int tighten_dirs = 0,
                                std::uint64_t seed = 0) const;

 private:
  LogisticModel() = default;
  Mat psi_;
  Vec theta_;
  Vec truth_;
};

namespace histogram {
struct Phi {
  double phi;
  Vec theta;
  Mat hess;
};
Phi phi(const Vec& u);
double third_dir(const Vec& u, const Vec& z);
double fourth_dir(const Vec& u, const Vec& z);
// ||m z||^3/(theta_min + g2)^{1/2} + 3||h z||^3 with m^2 = diag(theta)+g2 I,
// h^2 = diag(theta).
double third_bound(const Vec& theta, const Vec& z, double g2);
}  // namespace histogram

class HistogramModel : public SlsModel {
 public:
  HistogramModel(Vec theta_star, double n);

  std::string kind() const override { return "histogram"; }
  Eigen::Index dim() const override { return theta_.size(); }
  double sample_size() const override { return n_; }
  Vec truth() const override;

  double value(const Vec& u) const override;
  Vec gradient(const Vec& u) const override;
  Mat hessian(const Vec& u) const override;
  double third(const Vec& u, const Vec& z) const override;
  double fourth(const Vec& u, const Vec& z) const override;
  Vec third_contract(const Vec& u, const Vec& z) const override;
  Mat grad_zeta_cov() const override;
  Vec draw_grad_zeta(Rng& rng) const override;
  Vec gauge() const override { return Vec::Ones(dim()); }

  const Vec& theta_star() const { return theta_; }
  Vec sample_counts(Rng& rng) const;
  Vec grad_zeta(const Vec& counts) const;
  double loss(const Vec& u, const Vec& counts) const;

 private:
  Vec theta_;
  double n_;
};

// Exponential family on a quadrature grid: density proportional to
// exp<Psi(x), u> against the discrete measure sum_k w_k delta_{x_k}.
class LogDensityModel : public SlsModel {
 public:
  struct Phi {
    double phi;
    Vec grad;
    Mat hess;
  };

  LogDensityModel(Vec nodes, Vec weights, Mat basis, Vec truth, double n);
  // Composite trapezoid rule with m nodes on [a, b].
  static LogDensityModel on_interval(double a, double b, int m,
                                     const std::function<Vec(double)>& dict,
                                     Vec truth, double n);

  std::string kind() const override { return "logdensity"; }
  Eigen::Index dim() const override { return basis_.cols(); }
  double sample_size() const override { return n_; }
  Vec truth() const override { return truth_; }

  double value(const Vec& u) const override;
  Vec gradient(const Vec& u) const override;
  Mat hessian(const Vec& u) const override;
  double third(const Vec& u, const Vec& z) const override;
  double fourth(const Vec& u, const Vec& z) const override;
  Vec third_contract(const Vec& u, const Vec& z) const override;
  Mat grad_zeta_cov() const override;
  Mat default_v2() const override;
  Vec draw_grad_zeta(Rng& rng) const override;

  Phi phi(const Vec& u) const;
  Vec tilted(const Vec& u) const;
  const Vec& nodes() const { return nodes_; }
  const Mat& basis() const { return basis_; }
  const Vec& psi_bar() const { return psi_bar_; }

  Vec sample_points(Rng& rng, Eigen::Index count) const;  // node indices
  Vec grad_zeta_from_stat(const Vec& s) const;  // s = sum_i Psi(X_i)

  // |E<e,z>^3| / E^{3/2}<e,z>^2 and E<e,z>^4 / E^2<e,z>^2 under P_u.
  std::pair<double, double> moment_ratios(const Vec& u, const Vec& z) const;
  ConditionConstants condition_constants(double rho, int n_samples,
                                         std::uint64_t seed) const;

 private:
  Vec nodes_;
  Vec log_w_;
  Mat basis_;
  Vec truth_;
  double n_;
  Vec psi_bar_;
  Vec cdf_;
};

// Gaussian precision matrix; parameters are symmetric matrices stored by an
// isometric half-vectorisation (off-diagonal entries scaled by sqrt 2).
class PrecisionModel : public SlsModel {
 public:
  PrecisionModel(Mat sigma, double n);

  static Vec hvec(const Mat& a);
  static Mat unhvec(const Vec& v, Eigen::Index p);

  std::string kind() const override { return "precision"; }
  Eigen::Index dim() const override { return p_ * (p_ + 1) / 2; }
  double sample_size() const override { return n_; }
  Vec truth() const override;
  Vec start() const override { return truth(); }
  bool in_domain(const Vec& u) const override;

  double value(const Vec& u) const override;
  Vec gradient(const Vec& u) const override;
  Mat hessian(const Vec& u) const override;
  double third(const Vec& u, const Vec& z) const override;
  double fourth(const Vec& u, const Vec& z) const override;
  Vec third_contract(const Vec& u, const Vec& z) const override;
  Mat grad_zeta_cov() const override;
  Vec draw_grad_zeta(Rng& rng) const override;

  Eigen::Index order() const { return p_; }
  const Mat& sigma() const { return sigma_; }
  Mat sample(Rng& rng) const;  // n x p
  Vec grad_zeta(const Mat& x) const;
  double loss(const Mat& ups, const Mat& x) const;
  Mat loss_gradient(const Mat& ups, const Mat& x) const;
  Mat hess_apply(const Mat& ups, const Mat& z) const;
  ConditionConstants constants(double r) const;

 private:
  Mat sigma_;
  Mat chol_;
  Eigen::Index p_;
  double n_;
};

// f(u) = (u - u*)^T F (u - u*)/2 with Gaussian grad_zeta ~ N(0, var).
class QuadraticModel : public SlsModel {
 public:
  QuadraticModel(Mat f, Vec truth, Mat var = Mat(), double n = 1.0);

  std::string kind() const override { return "quadratic"; }
  Eigen::Index dim() const override { return truth_.size(); }
  double sample_size() const override { return n_; }
  Vec truth() const override { return truth_; }

  double value(const Vec& u) const override;
  Vec gradient(const Vec& u) const override;
  Mat hessian(const Vec&) const override { return f_; }
  double third(const Vec&, const Vec&) const override { return 0.0; }
  double fourth(const Vec&, const Vec&) const override { return 0.0; }
  Vec third_contract(const Vec&, const Vec&) const override { return Vec::Zero(dim()); }
  Mat grad_zeta_cov() const override { return var_; }
  Vec draw_grad_zeta(Rng& rng) const override;

 private:
  Mat f_;
  Vec truth_;
  Mat var_;
  Mat root_;
  double n_;
};

}  // namespace sls
