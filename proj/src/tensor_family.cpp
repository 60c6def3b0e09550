#include <cmath>
#include <string>

#include "sls/tailbounds.hpp"

namespace sls {

TensorFamily TensorFamily::dense(std::vector<Mat> t, Mat v_sq) {
  TensorFamily tf;
  tf.tensors = std::move(t);
  tf.v_sq = std::move(v_sq);
  tf.validate();
  if (tf.v_sq.size() == 0) tf.v_sq = tensor_family_covariance(tf);
  return tf;
}

TensorFamily TensorFamily::diagonal(Mat diags, Mat v_sq) {
  TensorFamily tf;
  tf.diagonals = std::move(diags);
  tf.v_sq = std::move(v_sq);
  tf.validate();
  if (tf.v_sq.size() == 0) tf.v_sq = tensor_family_covariance(tf);
  return tf;
}

Eigen::Index TensorFamily::count() const {
  return is_diagonal() ? diagonals.cols() : static_cast<Eigen::Index>(tensors.size());
}

Eigen::Index TensorFamily::order() const {
  if (is_diagonal()) return diagonals.rows();
  return tensors.empty() ? 0 : tensors.front().rows();
}

Mat TensorFamily::combine(const Vec& u) const {
  if (is_diagonal()) return (diagonals * u).asDiagonal();
  Mat out = Mat::Zero(order(), order());
  for (std::size_t i = 0; i < tensors.size(); ++i) out += u(i) * tensors[i];
  return out;
}

Vec TensorFamily::evaluate(const Vec& g) const {
  if (is_diagonal()) return diagonals.transpose() * g.cwiseAbs2();
  Vec t(count());
  for (std::size_t i = 0; i < tensors.size(); ++i) t(i) = g.dot(tensors[i] * g);
  return t;
}

Vec TensorFamily::mean() const {
  if (is_diagonal()) return diagonals.colwise().sum().transpose();
  Vec t(count());
  for (std::size_t i = 0; i < tensors.size(); ++i) t(i) = tensors[i].trace();
  return t;
}

void TensorFamily::validate() const {
  if (is_diagonal()) return;
  Eigen::Index m = order();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Mat& t = tensors[i];
    if (t.rows() != m || t.cols() != m)
      throw DomainError("TensorFamily: tensor " + std::to_string(i) + " has wrong shape");
    double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw DomainError("TensorFamily: tensor " + std::to_string(i) + " is not symmetric");
  }
}

Mat tensor_family_covariance(const TensorFamily& tf) {
  tf.validate();
  Eigen::Index q = tf.count();
  Mat s2(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = i; j < q; ++j) {
      double v;
      if (tf.is_diagonal())
        v = tf.diagonals.col(i).dot(tf.diagonals.col(j));
      else
        v = tf.tensors[i].cwiseProduct(tf.tensors[j]).sum();
      s2(i, j) = s2(j, i) = 2.0 * v;
    }
  }
  return s2;
}

namespace {

// 2 ||T[u]|| together with the signed top eigenvector of T[u].
double top_pair(const TensorFamily& tf, const Vec& u, Vec* e, double* sign) {
  if (tf.is_diagonal()) {
    Vec d = tf.diagonals * u;
    Eigen::Index k;
    double v = d.cwiseAbs().maxCoeff(&k);
    *e = Vec::Unit(d.size(), k);
    *sign = d(k) >= 0.0 ? 1.0 : -1.0;
    return 2.0 * v;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(tf.combine(u));
  const Vec& ev = es.eigenvalues();
  Eigen::Index k = std::abs(ev(0)) >= std::abs(ev(ev.size() - 1)) ? 0 : ev.size() - 1;
  *e = es.eigenvectors().col(k);
  *sign = ev(k) >= 0.0 ? 1.0 : -1.0;
  return 2.0 * std::abs(ev(k));
}

Vec form_gradient(const TensorFamily& tf, const Vec& e) {
  Vec g(tf.count());
  if (tf.is_diagonal()) return tf.diagonals.transpose() * e.cwiseAbs2();
  for (Eigen::Index i = 0; i < tf.count(); ++i) g(i) = e.dot(tf.tensors[i] * e);
  return g;
}

}  // namespace

double tensor_delta(const TensorFamily& tf, int n_dirs, std::uint64_t seed) {
  tf.validate();
  Eigen::Index q = tf.count();
  if (q == 0 || tf.order() == 0) return 0.0;
  if (tf.v_sq.rows() != q) throw DomainError("tensor_delta: v_sq has wrong shape");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (tf.v_sq + tf.v_sq.transpose()));
  if (es.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw DomainError("tensor_delta: V^2 is singular");
  Mat vinv = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
             es.eigenvectors().transpose();
  Mat vinv2 = vinv * vinv;

  Rng rng = make_stream(seed, 0, 0x7e45);
  double best = 0.0;
  for (int d = 0; d < n_dirs; ++d) {
    Vec v = standard_normal(rng, q);
    double nv = v.norm();
    if (nv == 0.0) continue;
    Vec u = vinv * (v / nv);
    Vec e;
    double sign;
    double val = top_pair(tf, u, &e, &sign);
    // Alternating maximisation over the eigenvector and the constraint set
    // ||V u|| <= 1; each step cannot decrease the value.
    for (int it = 0; it < 50; ++it) {
      Vec g = sign * form_gradient(tf, e);
      double ng = (vinv * g).norm();
      if (ng == 0.0) break;
      Vec u2 = vinv2 * g / ng;
      Vec e2;
      double s2;
      double val2 = top_pair(tf, u2, &e2, &s2);
      if (val2 <= val * (1.0 + 1e-13)) break;
      val = val2;
      e = e2;
      sign = s2;
    }
    best = std::max(best, val);
  }
  return best;
}

double tensor_upper_tail(const TensorFamily& tf, const Mat& q,
                         const TailConfig& cfg, double x) {
  if (!(tf.delta * cfg.gamma < 1.0))
    throw DomainError("tensor_upper_tail: precondition delta*gamma < 1 violated");
  Mat b = q * tf.v_sq * q.transpose();
  SpectralSummary s = SpectralSummary::from_matrix(b);
  if (s.lambda == 0.0) return 0.0;
  PhaseTransition pt = solve_xc(s, cfg);
  return fused_quantile(pt, s, x);
}

namespace {

double alpha_lhs(double a) { return a * std::sqrt((1.0 - a) / (1.0 - 2.0 * a)); }

double alpha_rhs(const SpectralSummary& s, double delta) {
  return delta * std::sqrt(s.dim_a) *
         (1.0 + std::sqrt(s.dim_a * s.lambda / (2.0 * s.v2)));
}

}  // namespace

double tensor_lower_min_alpha(const SpectralSummary& s, double delta) {
  double target = alpha_rhs(s, delta);
  if (target <= 0.0) return 0.0;
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (alpha_lhs(mid) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double tensor_lower_tail(const TensorFamily& tf, const Mat& q, double x,
                         double alpha) {
  if (!(x >= 0.0)) throw DomainError("tensor_lower_tail: x must be >= 0");
  if (!(alpha >= 0.0 && alpha < 0.5))
    throw DomainError("tensor_lower_tail: alpha must lie in [0, 1/2)");
  Mat b = q * tf.v_sq * q.transpose();
  SpectralSummary s = SpectralSummary::from_matrix(b);
  if (s.v2 > 0.0 && x > s.dim_a * s.dim_a / (4.0 * s.v2))
    throw DomainError("tensor_lower_tail: x <= dim_a^2/(4 v2) violated");
  if (s.v2 > 0.0 && alpha_lhs(alpha) < alpha_rhs(s, tf.delta)) {
    double need = tensor_lower_min_alpha(s, tf.delta);
    throw AlphaTooSmall("tensor_lower_tail: alpha too small, need alpha >= " +
                            std::to_string(need),
                        need);
  }
  return s.dim_a - alpha * s.dim_a / (1.0 - alpha) - 2.0 * std::sqrt(x * s.v2);
}

}  // namespace sls
