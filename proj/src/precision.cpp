#include <cmath>
#include <limits>

#include "sls/models.hpp"

namespace sls {

namespace {
const double kSqrt2 = std::sqrt(2.0);

double trace_power(const Mat& a, int k) {
  Mat acc = a;
  for (int i = 1; i < k; ++i) acc = acc * a;
  return acc.trace();
}
}  // namespace

PrecisionModel::PrecisionModel(Mat sigma, double n)
    : sigma_(std::move(sigma)), p_(sigma_.rows()), n_(n) {
  if (sigma_.rows() != sigma_.cols()) throw DomainError("PrecisionModel: sigma must be square");
  Eigen::LLT<Mat> llt(sigma_);
  if (llt.info() != Eigen::Success) throw DomainError("PrecisionModel: sigma must be positive definite");
  chol_ = llt.matrixL();
  if (!(n_ > 0.0)) throw DomainError("PrecisionModel: n must be > 0");
}

Vec PrecisionModel::hvec(const Mat& a) {
  Eigen::Index p = a.rows();
  Vec v(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    v(k++) = a(j, j);
    for (Eigen::Index i = j + 1; i < p; ++i) v(k++) = kSqrt2 * 0.5 * (a(i, j) + a(j, i));
  }
  return v;
}

Mat PrecisionModel::unhvec(const Vec& v, Eigen::Index p) {
  Mat a(p, p);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    a(j, j) = v(k++);
    for (Eigen::Index i = j + 1; i < p; ++i) a(i, j) = a(j, i) = v(k++) / kSqrt2;
  }
  return a;
}

Vec PrecisionModel::truth() const { return hvec(sigma_.inverse()); }

bool PrecisionModel::in_domain(const Vec& u) const {
  Eigen::LLT<Mat> llt(unhvec(u, p_));
  return llt.info() == Eigen::Success;
}

double PrecisionModel::value(const Vec& u) const {
  Mat ups = unhvec(u, p_);
  Eigen::LLT<Mat> llt(ups);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  return 0.5 * n_ * ((sigma_.cwiseProduct(ups)).sum() - logdet);
}

Vec PrecisionModel::gradient(const Vec& u) const {
  Mat ups = unhvec(u, p_);
  return hvec(0.5 * n_ * (sigma_ - ups.inverse()));
}

Mat PrecisionModel::hessian(const Vec& u) const {
  Mat inv = unhvec(u, p_).inverse();
  Eigen::Index d = dim();
  Mat h(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Mat e = unhvec(Vec::Unit(d, k), p_);
    h.col(k) = hvec(0.5 * n_ * inv * e * inv);
  }
  return 0.5 * (h + h.transpose());
}

double PrecisionModel::third(const Vec& u, const Vec& z) const {
  Mat a = unhvec(u, p_).llt().solve(unhvec(z, p_));
  return -n_ * trace_power(a, 3);
}

double PrecisionModel::fourth(const Vec& u, const Vec& z) const {
  Mat a = unhvec(u, p_).llt().solve(unhvec(z, p_));
  return 3.0 * n_ * trace_power(a, 4);
}

Vec PrecisionModel::third_contract(const Vec& u, const Vec& z) const {
  Mat inv = unhvec(u, p_).inverse();
  Mat zm = unhvec(z, p_);
  return hvec(-n_ * inv * zm * inv * zm * inv);
}

Mat PrecisionModel::grad_zeta_cov() const {
  Eigen::Index d = dim();
  Mat c(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Mat e = unhvec(Vec::Unit(d, k), p_);
    c.col(k) = hvec(0.5 * n_ * sigma_ * e * sigma_);
  }
  return 0.5 * (c + c.transpose());
}

Mat PrecisionModel::sample(Rng& rng) const {
  auto count = static_cast<Eigen::Index>(std::llround(n_));
  Mat x(count, p_);
  for (Eigen::Index i = 0; i < count; ++i) x.row(i) = (chol_ * standard_normal(rng, p_)).transpose();
  return x;
}

Vec PrecisionModel::grad_zeta(const Mat& x) const {
  return hvec(0.5 * (x.transpose() * x - n_ * sigma_));
}

Vec PrecisionModel::draw_grad_zeta(Rng& rng) const { return grad_zeta(sample(rng)); }

double PrecisionModel::loss(const Mat& ups, const Mat& x) const {
  Eigen::LLT<Mat> llt(ups);
  if (llt.info() != Eigen::Success) throw DomainError("precision loss: upsilon is not SPD");
  double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  Mat s = x.transpose() * x;
  return 0.5 * s.cwiseProduct(ups).sum() - 0.5 * n_ * logdet;
}

Mat PrecisionModel::loss_gradient(const Mat& ups, const Mat& x) const {
  Eigen::LLT<Mat> llt(ups);
  if (llt.info() != Eigen::Success) throw DomainError("precision gradient: upsilon is not SPD");
  return 0.5 * (x.transpose() * x) - 0.5 * n_ * llt.solve(Mat::Identity(p_, p_));
}

Mat PrecisionModel::hess_apply(const Mat& ups, const Mat& z) const {
  Mat inv = ups.inverse();
  return 0.5 * n_ * inv * z * inv;
}

ConditionConstants PrecisionModel::constants(double r) const {
  if (!(r >= 0.0 && r < std::sqrt(n_ / 2.0)))
    throw DomainError("precision_constants: r < sqrt(n/2) violated");
  double f = 1.0 - std::sqrt(2.0 * r * r / n_);
  ConditionConstants c;
  c.tau3 = std::sqrt(8.0) * std::pow(f, -3.0) / std::sqrt(n_);
  c.tau4 = 12.0 * std::pow(f, -4.0) / n_;
  c.varkappa = 1.0;
  c.varkappa_conservative = 1.0;
  return c;
}

}  // namespace sls
