#include "sls/models.hpp"

namespace sls {

QuadraticModel::QuadraticModel(Mat f, Vec truth, Mat var, double n)
    : f_(std::move(f)), truth_(std::move(truth)), var_(std::move(var)), n_(n) {
  if (f_.rows() != truth_.size() || f_.cols() != truth_.size())
    throw DomainError("QuadraticModel: F and truth disagree in size");
  if (var_.size() == 0) var_ = f_;
  root_ = sym_sqrt(var_);
}

double QuadraticModel::value(const Vec& u) const {
  Vec d = u - truth_;
  return 0.5 * d.dot(f_ * d);
}

Vec QuadraticModel::gradient(const Vec& u) const { return f_ * (u - truth_); }

Vec QuadraticModel::draw_grad_zeta(Rng& rng) const {
  return root_ * standard_normal(rng, dim());
}

}  // namespace sls
