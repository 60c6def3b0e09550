#include <cmath>
#include <random>

#include "sls/models.hpp"

namespace sls {

namespace histogram {

Phi phi(const Vec& u) {
  double m = u.maxCoeff();
  Vec e = (u.array() - m).exp();
  double s = e.sum();
  Phi out;
  out.phi = m + std::log(s);
  out.theta = e / s;
  out.hess = Mat(out.theta.asDiagonal()) - out.theta * out.theta.transpose();
  return out;
}

namespace {
struct Moments {
  double m1, m2, m3, m4;
};
Moments raw_moments(const Vec& theta, const Vec& z) {
  Moments r{0, 0, 0, 0};
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    double v = z(j), t = theta(j);
    r.m1 += t * v;
    r.m2 += t * v * v;
    r.m3 += t * v * v * v;
    r.m4 += t * v * v * v * v;
  }
  return r;
}
}  // namespace

double third_dir(const Vec& u, const Vec& z) {
  Vec theta = phi(u).theta;
  // Central moments directly; equal to m3 - 3 m1 m2 + 2 m1^3.
  double a = theta.dot(z);
  Vec c = z.array() - a;
  return (theta.array() * c.array().cube()).sum();
}

double fourth_dir(const Vec& u, const Vec& z) {
  Vec theta = phi(u).theta;
  double a = theta.dot(z);
  Vec c = z.array() - a;
  double v = (theta.array() * c.array().square()).sum();
  double k4 = (theta.array() * c.array().square().square()).sum();
  return k4 - 3.0 * v * v;
}

double third_bound(const Vec& theta, const Vec& z, double g2) {
  double mz = std::sqrt(((theta.array() + g2) * z.array().square()).sum());
  double hz = std::sqrt((theta.array() * z.array().square()).sum());
  return mz * mz * mz / std::sqrt(theta.minCoeff() + g2) + 3.0 * hz * hz * hz;
}

}  // namespace histogram

HistogramModel::HistogramModel(Vec theta_star, double n)
    : theta_(std::move(theta_star)), n_(n) {
  if (theta_.size() < 2) throw DomainError("HistogramModel: need at least two cells");
  for (Eigen::Index j = 0; j < theta_.size(); ++j)
    if (!(theta_(j) > 0.0)) throw DomainError("HistogramModel: cell probabilities must be > 0");
  if (std::abs(theta_.sum() - 1.0) > 1e-10)
    throw DomainError("HistogramModel: cell probabilities must sum to 1");
  if (!(n_ > 0.0)) throw DomainError("HistogramModel: n must be > 0");
}

Vec HistogramModel::truth() const {
  Vec l = theta_.array().log();
  return l.array() - l.mean();
}

double HistogramModel::value(const Vec& u) const {
  return n_ * (histogram::phi(u).phi - theta_.dot(u));
}

Vec HistogramModel::gradient(const Vec& u) const {
  return n_ * (histogram::phi(u).theta - theta_);
}

Mat HistogramModel::hessian(const Vec& u) const { return n_ * histogram::phi(u).hess; }

double HistogramModel::third(const Vec& u, const Vec& z) const {
  return n_ * histogram::third_dir(u, z);
}

double HistogramModel::fourth(const Vec& u, const Vec& z) const {
  return n_ * histogram::fourth_dir(u, z);
}

Vec HistogramModel::third_contract(const Vec& u, const Vec& z) const {
  Vec theta = histogram::phi(u).theta;
  double a = theta.dot(z);
  Vec c2 = (z.array() - a).square();
  double v = theta.dot(c2);
  return n_ * (theta.array() * (c2.array() - v)).matrix();
}

Mat HistogramModel::grad_zeta_cov() const {
  return n_ * (Mat(theta_.asDiagonal()) - theta_ * theta_.transpose());
}

Vec HistogramModel::sample_counts(Rng& rng) const {
  auto total = static_cast<long long>(std::llround(n_));
  Vec s = Vec::Zero(theta_.size());
  double rest = 1.0;
  for (Eigen::Index j = 0; j + 1 < theta_.size() && total > 0; ++j) {
    double pj = std::min(1.0, theta_(j) / rest);
    std::binomial_distribution<long long> b(total, pj);
    long long k = b(rng);
    s(j) = static_cast<double>(k);
    total -= k;
    rest -= theta_(j);
  }
  s(theta_.size() - 1) += static_cast<double>(total);
  return s;
}

Vec HistogramModel::grad_zeta(const Vec& counts) const {
  return -(counts - n_ * theta_);
}

Vec HistogramModel::draw_grad_zeta(Rng& rng) const { return grad_zeta(sample_counts(rng)); }

double HistogramModel::loss(const Vec& u, const Vec& counts) const {
  return -counts.dot(u) + n_ * histogram::phi(u).phi;
}

}  // namespace sls
