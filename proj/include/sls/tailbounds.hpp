#pragma once

#include <cstdint>
#include <vector>

#include "sls/common.hpp"

namespace sls {

// (tr B, tr B^2, ||B||) of a PSD operator B. All tail formulas consume this
// triple, so structured operators never have to be materialised.
struct SpectralSummary {
  double dim_a = 0.0;
  double v2 = 0.0;
  double lambda = 0.0;

  static SpectralSummary from_matrix(const Mat& b);
  static SpectralSummary from_eigenvalues(const Vec& ev);
  SpectralSummary scaled(double c) const { return {c * dim_a, c * c * v2, c * lambda}; }
};

struct TailConfig {
  double gamma = 1.0;
  double rho = 0.5;
};

struct PhaseTransition {
  double x_c = 0.0;
  double z_c = 0.0;
  double kappa = 0.0;
  double mu_c = 0.0;
  double gamma = 0.0;
  double rho = 0.5;
  double residual = 0.0;  // |z^2 - rhs| / z^2 at x_c
};

double gaussian_quantile(const SpectralSummary& s, double x);
double mu_of_x(const SpectralSummary& s, double x);

// Right-hand side of the crossing equation; the positive part is taken on the
// base before squaring.
double phase_rhs(const SpectralSummary& s, const TailConfig& cfg, double x);

PhaseTransition solve_xc(const SpectralSummary& s, const TailConfig& cfg);

// z(B,x) up to x_c, linear with slope 1/kappa beyond.
double fused_quantile(const PhaseTransition& pt, const SpectralSummary& s,
                      double x);

// sqrt(dim_a) + kappa*lambda/sqrt(2) + x/kappa; kappa = gamma/((sqrt 8 + 1)
// sqrt(lambda)). Reduces to sqrt(dim_a) + kappa/sqrt(2) + x/kappa at lambda = 1.
double linear_majorant(const SpectralSummary& s, const TailConfig& cfg,
                       double x);
double majorant_kappa(const SpectralSummary& s, const TailConfig& cfg);

double exp_moment_bound(const SpectralSummary& s, const TailConfig& cfg,
                        const PhaseTransition& pt, double nu, double z);

double hkz_mgf_bound(const SpectralSummary& s, double mu);

// Family of quadratic forms T_i = g^T T_i g of a standard Gaussian g.
// Either dense symmetric matrices or, for large diagonal families, one column
// of `diagonals` per form.
struct TensorFamily {
  std::vector<Mat> tensors;
  Mat diagonals;
  Mat v_sq;
  double delta = 0.0;

  static TensorFamily dense(std::vector<Mat> t, Mat v_sq = Mat());
  static TensorFamily diagonal(Mat diags, Mat v_sq = Mat());

  bool is_diagonal() const { return tensors.empty() && diagonals.size() > 0; }
  Eigen::Index count() const;
  Eigen::Index order() const;
  Mat combine(const Vec& u) const;
  Vec evaluate(const Vec& g) const;
  Vec mean() const;
  void validate() const;
};

Mat tensor_family_covariance(const TensorFamily& tf);
double tensor_delta(const TensorFamily& tf, int n_dirs, std::uint64_t seed);
double tensor_upper_tail(const TensorFamily& tf, const Mat& q,
                         const TailConfig& cfg, double x);
double tensor_lower_tail(const TensorFamily& tf, const Mat& q, double x,
                         double alpha);
// Smallest alpha in (0, 1/2) accepted by tensor_lower_tail.
double tensor_lower_min_alpha(const SpectralSummary& s, double delta);

}  // namespace sls
