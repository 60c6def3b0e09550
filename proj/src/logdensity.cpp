#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sls/models.hpp"

namespace sls {

LogDensityModel::LogDensityModel(Vec nodes, Vec weights, Mat basis, Vec truth,
                                 double n)
    : nodes_(std::move(nodes)), basis_(std::move(basis)), truth_(std::move(truth)), n_(n) {
  if (weights.size() != nodes_.size() || basis_.rows() != nodes_.size())
    throw DomainError("LogDensityModel: nodes, weights and basis disagree in size");
  if (basis_.cols() != truth_.size())
    throw DomainError("LogDensityModel: basis/parameter dimension mismatch");
  for (Eigen::Index k = 0; k < weights.size(); ++k)
    if (!(weights(k) > 0.0)) throw DomainError("LogDensityModel: quadrature weights must be > 0");
  log_w_ = weights.array().log();
  psi_bar_ = phi(truth_).grad;
  Vec p = tilted(truth_);
  cdf_.resize(p.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) cdf_(k) = (acc += p(k));
  cdf_(p.size() - 1) = 1.0;
}

LogDensityModel LogDensityModel::on_interval(double a, double b, int m,
                                             const std::function<Vec(double)>& dict,
                                             Vec truth, double n) {
  if (m < 2 || !(b > a)) throw DomainError("LogDensityModel: need m >= 2 nodes on a proper interval");
  Vec x = Vec::LinSpaced(m, a, b);
  double h = (b - a) / (m - 1);
  Vec w = Vec::Constant(m, h);
  w(0) = w(m - 1) = 0.5 * h;
  Mat basis(m, truth.size());
  for (int k = 0; k < m; ++k) basis.row(k) = dict(x(k)).transpose();
  return LogDensityModel(x, w, basis, std::move(truth), n);
}

Vec LogDensityModel::tilted(const Vec& u) const {
  Vec e = basis_ * u + log_w_;
  double m = e.maxCoeff();
  if (!std::isfinite(m)) {
    std::ostringstream os;
    os << "LogDensityModel: non-finite integral at u = " << u.transpose();
    throw DomainError(os.str());
  }
  Vec p = (e.array() - m).exp();
  return p / p.sum();
}

LogDensityModel::Phi LogDensityModel::phi(const Vec& u) const {
  Vec e = basis_ * u + log_w_;
  double m = e.maxCoeff();
  if (!std::isfinite(m)) {
    std::ostringstream os;
    os << "LogDensityModel: non-finite integral at u = " << u.transpose();
    throw DomainError(os.str());
  }
  Vec p = (e.array() - m).exp();
  double s = p.sum();
  p /= s;
  Phi out;
  out.phi = m + std::log(s);
  out.grad = basis_.transpose() * p;
  Mat c = basis_.rowwise() - out.grad.transpose();
  out.hess = c.transpose() * p.asDiagonal() * c;
  return out;
}

double LogDensityModel::value(const Vec& u) const {
  return n_ * (phi(u).phi - psi_bar_.dot(u));
}

Vec LogDensityModel::gradient(const Vec& u) const { return n_ * (phi(u).grad - psi_bar_); }

Mat LogDensityModel::hessian(const Vec& u) const { return n_ * phi(u).hess; }

double LogDensityModel::third(const Vec& u, const Vec& z) const {
  Vec p = tilted(u);
  Vec a = basis_ * z;
  Vec c = a.array() - p.dot(a);
  return n_ * (p.array() * c.array().cube()).sum();
}

double LogDensityModel::fourth(const Vec& u, const Vec& z) const {
  Vec p = tilted(u);
  Vec a = basis_ * z;
  Vec c = a.array() - p.dot(a);
  double v = (p.array() * c.array().square()).sum();
  double m4 = (p.array() * c.array().square().square()).sum();
  return n_ * (m4 - 3.0 * v * v);
}

Vec LogDensityModel::third_contract(const Vec& u, const Vec& z) const {
  Vec p = tilted(u);
  Vec mean = basis_.transpose() * p;
  Vec a = basis_ * z;
  Vec c2 = (a.array() - p.dot(a)).square();
  Vec w = p.array() * c2.array();
  Mat centred = basis_.rowwise() - mean.transpose();
  return n_ * (centred.transpose() * w);
}

Mat LogDensityModel::grad_zeta_cov() const { return n_ * phi(truth_).hess; }

Mat LogDensityModel::default_v2() const { return 2.0 * n_ * phi(truth_).hess; }

Vec LogDensityModel::sample_points(Rng& rng, Eigen::Index count) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec idx(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    double u = unif(rng);
    auto it = std::upper_bound(cdf_.data(), cdf_.data() + cdf_.size(), u);
    Eigen::Index k = std::min<Eigen::Index>(it - cdf_.data(), cdf_.size() - 1);
    idx(i) = static_cast<double>(k);
  }
  return idx;
}

Vec LogDensityModel::grad_zeta_from_stat(const Vec& s) const { return -(s - n_ * psi_bar_); }

Vec LogDensityModel::draw_grad_zeta(Rng& rng) const {
  auto count = static_cast<Eigen::Index>(std::llround(n_));
  Vec idx = sample_points(rng, count);
  Vec s = Vec::Zero(dim());
  for (Eigen::Index i = 0; i < count; ++i)
    s += basis_.row(static_cast<Eigen::Index>(idx(i))).transpose();
  return grad_zeta_from_stat(s);
}

std::pair<double, double> LogDensityModel::moment_ratios(const Vec& u, const Vec& z) const {
  Vec p = tilted(u);
  Vec a = basis_ * z;
  Vec c = a.array() - p.dot(a);
  double m2 = (p.array() * c.array().square()).sum();
  double m3 = (p.array() * c.array().cube()).sum();
  double m4 = (p.array() * c.array().square().square()).sum();
  if (!(m2 > 0.0)) return {0.0, 0.0};
  return {std::abs(m3) / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

ConditionConstants LogDensityModel::condition_constants(double rho, int n_samples,
                                                        std::uint64_t seed) const {
  if (!(rho > 0.0)) throw DomainError("logdensity_condition_constants: rho must be > 0");
  Eigen::Index p = dim();
  Mat h_star_inv_sqrt = sym_inv_sqrt(phi(truth_).hess);
  Rng rng = make_stream(seed, 0, 0x1d3e);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto ball_point = [&](double radius) {
    Vec v = standard_normal(rng, p);
    v /= v.norm();
    return Vec(radius * std::pow(unif(rng), 1.0 / static_cast<double>(p)) * v);
  };

  ConditionConstants c;
  c.C_rho = 1.0;
  for (int k = 0; k < n_samples; ++k) {
    Vec ups = truth_ + h_star_inv_sqrt * ball_point(rho);
    Phi at = phi(ups);
    Vec w = standard_normal(rng, p);
    w /= w.norm();
    // ||H(ups)^{1/2} u|| = 2 rho: the boundary carries the sup of a convex gap.
    Vec u = sym_inv_sqrt(at.hess) * (2.0 * rho * w);
    Vec e = basis_ * (ups + u) + log_w_;
    if (!std::isfinite(e.maxCoeff())) {
      std::ostringstream os;
      os << "logdensity_condition_constants: domain exit at u = " << (ups + u).transpose();
      throw DomainError(os.str());
    }
    double gap = phi(ups + u).phi - at.phi - at.grad.dot(u);
    c.C_rho = std::max(c.C_rho, std::exp(gap));

    Vec z = standard_normal(rng, p);
    auto [r3, r4] = moment_ratios(ups, z);
    c.C_psi3 = std::max(c.C_psi3, r3);
    c.C_psi4_raw = std::max(c.C_psi4_raw, r4);
  }
  c.C_psi4 = std::max(c.C_psi4_raw, 3.0);
  c.c3 = c.C_psi3 * std::pow(c.C_psi4 * c.C_rho, 0.75);
  c.c4 = (c.C_psi4 - 3.0) * c.C_psi4 * c.C_rho;
  c.tau3 = c.c3 / std::sqrt(n_);
  c.tau4 = c.c4 / n_;
  c.varkappa = 1.0;
  c.varkappa_conservative = 1.0;
  return c;
}

}  // namespace sls
