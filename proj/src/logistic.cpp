#include <cmath>
#include <random>

#include "sls/estimator.hpp"
#include "sls/models.hpp"

namespace sls {

namespace logistic {

namespace {
double sig(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}
}  // namespace

double phi(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}
double phi1(double u) { return sig(u); }
double phi2(double u) { return sig(u) * sig(-u); }
// phi''' = phi'' (1 - 2 s) and 1 - 2 s = -tanh(u/2).
double phi3(double u) { return -phi2(u) * std::tanh(0.5 * u); }
// phi'''' = phi'' (1 - 6 s (1 - s)).
double phi4(double u) {
  double w = phi2(u);
  return w * (1.0 - 6.0 * w);
}

}  // namespace logistic

LogisticModel::LogisticModel(Mat design, Vec upsilon_star)
    : psi_(std::move(design)), truth_(std::move(upsilon_star)) {
  if (psi_.cols() != truth_.size())
    throw DomainError("LogisticModel: design/parameter dimension mismatch");
  Vec eta = psi_ * truth_;
  theta_ = eta.unaryExpr([](double v) { return logistic::phi1(v); });
}

LogisticModel LogisticModel::from_probabilities(Mat design, Vec theta_star) {
  if (design.rows() != theta_star.size())
    throw DomainError("LogisticModel: one probability per design row required");
  for (Eigen::Index i = 0; i < theta_star.size(); ++i)
    if (!(theta_star(i) > 0.0 && theta_star(i) < 1.0))
      throw DomainError("LogisticModel: theta_star must lie in (0,1)");
  LogisticModel m;
  m.psi_ = std::move(design);
  m.theta_ = std::move(theta_star);
  m.truth_ = Vec::Zero(m.psi_.cols());
  m.truth_ = fit_population(m, QuadPenalty::none()).upsilon_hat;
  return m;
}

double LogisticModel::value(const Vec& u) const {
  Vec eta = psi_ * u;
  KahanSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    s.add(logistic::phi(eta(i)) - theta_(i) * eta(i));
  return s.value();
}

Vec LogisticModel::gradient(const Vec& u) const {
  Vec eta = psi_ * u;
  Vec r = eta.unaryExpr([](double v) { return logistic::phi1(v); }) - theta_;
  return psi_.transpose() * r;
}

Mat LogisticModel::hessian(const Vec& u) const {
  Vec w = (psi_ * u).unaryExpr([](double v) { return logistic::phi2(v); });
  return psi_.transpose() * w.asDiagonal() * psi_;
}

double LogisticModel::dir_deriv(const Vec& u, const Vec& z, int order) const {
  if (order != 3 && order != 4)
    throw DomainError("LogisticModel::dir_deriv: order must be 3 or 4");
  Vec eta = psi_ * u;
  Vec a = psi_ * z;
  KahanSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double a2 = a(i) * a(i);
    if (order == 3)
      s.add(a2 * a(i) * logistic::phi3(eta(i)));
    else
      s.add(a2 * a2 * logistic::phi4(eta(i)));
  }
  return s.value();
}

Vec LogisticModel::third_contract(const Vec& u, const Vec& z) const {
  Vec eta = psi_ * u;
  Vec a = psi_ * z;
  Vec w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    w(i) = a(i) * a(i) * logistic::phi3(eta(i));
  return psi_.transpose() * w;
}

Mat LogisticModel::grad_zeta_cov() const {
  Vec w = theta_.array() * (1.0 - theta_.array());
  return psi_.transpose() * w.asDiagonal() * psi_;
}

Vec LogisticModel::sample_labels(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec y(theta_.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = unif(rng) < theta_(i) ? 1.0 : 0.0;
  return y;
}

Vec LogisticModel::grad_zeta(const Vec& y) const {
  return -(psi_.transpose() * (y - theta_));
}

Vec LogisticModel::draw_grad_zeta(Rng& rng) const { return grad_zeta(sample_labels(rng)); }

double LogisticModel::loss(const Vec& u, const Vec& y) const {
  Vec eta = psi_ * u;
  KahanSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    s.add(logistic::phi(eta(i)) - y(i) * eta(i));
  return s.value();
}

Vec LogisticModel::loss_gradient(const Vec& u, const Vec& y) const {
  Vec eta = psi_ * u;
  Vec r = y - eta.unaryExpr([](double v) { return logistic::phi1(v); });
  return -(psi_.transpose() * r);
}

ConditionConstants LogisticModel::conditions(const Mat& d, double r,
                                             const Vec& center,
                                             int tighten_dirs,
                                             std::uint64_t seed) const {
  Eigen::LLT<Mat> llt(0.5 * (d + d.transpose()));
  if (llt.info() != Eigen::Success) throw DomainError("logistic_conditions: D is singular");
  Mat dinv = sym_inv_sqrt(d * d);  // D symmetric positive definite
  Mat rows = psi_ * dinv;          // row i = (D^{-1} Psi_i)^T
  ConditionConstants c;
  c.delta0 = rows.rowwise().norm().maxCoeff();
  c.varkappa_conservative = std::exp(0.25) * c.delta0;
  c.varkappa = c.varkappa_conservative;

  if (tighten_dirs > 0) {
    Vec w = (psi_ * center).unaryExpr([](double v) { return logistic::phi2(v); });
    auto ratio = [&](const Vec& v) {
      // z = D^{-1} v with ||v|| = 1, so ||D z|| = 1.
      Vec a = rows * v;
      return (a.array().square().square() * w.array()).sum();
    };
    double best = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      Vec v = rows.row(i).transpose();
      double nv = v.norm();
      if (nv > 0.0) best = std::max(best, ratio(v / nv));
    }
    Rng rng = make_stream(seed, 0, 0x4b41);
    for (int k = 0; k < tighten_dirs; ++k) {
      Vec v = standard_normal(rng, dim());
      best = std::max(best, ratio(v / v.norm()));
    }
    double k2 = std::sqrt(std::exp(1.0)) * best;
    c.varkappa = std::min(c.varkappa_conservative, std::sqrt(k2));
  }
  c.tau3 = std::sqrt(std::exp(1.0)) * c.varkappa;
  c.tau4 = std::sqrt(std::exp(1.0)) * c.varkappa * c.varkappa;
  c.variability_ok = c.delta0 * r <= 0.5;
  return c;
}

}  // namespace sls
