#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace sls {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy. The CLI maps these onto exit codes.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoPhaseTransition : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AlphaTooSmall : std::runtime_error {
  AlphaTooSmall(const std::string& msg, double required)
      : std::runtime_error(msg), required_alpha(required) {}
  double required_alpha;
};
struct NonConverged : std::runtime_error {
  NonConverged(const std::string& msg, double gnorm)
      : std::runtime_error(msg), grad_norm(gnorm) {}
  double grad_norm;
};
struct CertificateInapplicable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Unsupported : std::logic_error {
  using std::logic_error::logic_error;
};

// Neumaier compensated summation.
class KahanSum {
 public:
  void add(double x) {
    double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

using Rng = std::mt19937_64;

// Independent stream for (master seed, replicate, tag). The key is mixed with
// splitmix64 so neighbouring replicates get unrelated engine states.
Rng make_stream(std::uint64_t master_seed, std::uint64_t replicate,
                std::uint64_t tag = 0);

Vec standard_normal(Rng& rng, Eigen::Index n);

// Runs body(i) for i in [0, n) on up to `threads` workers. Callers write into
// slot i only, so the result never depends on scheduling.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

// Symmetric PSD helpers.
Mat sym_sqrt(const Mat& a);
Mat sym_inv_sqrt(const Mat& a);
double spectral_norm(const Mat& a);
double max_eigenvalue(const Mat& a);
double min_eigenvalue(const Mat& a);

}  // namespace sls
