#include "sls/tailbounds.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sls {

SpectralSummary SpectralSummary::from_eigenvalues(const Vec& ev) {
  SpectralSummary s;
  KahanSum a, b;
  double m = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    a.add(ev(i));
    b.add(ev(i) * ev(i));
    m = std::max(m, std::abs(ev(i)));
  }
  s.dim_a = a.value();
  s.v2 = b.value();
  s.lambda = m;
  return s;
}

SpectralSummary SpectralSummary::from_matrix(const Mat& b) {
  if (b.rows() != b.cols()) throw DomainError("SpectralSummary: B must be square");
  if (b.size() == 0) return {};
  Mat sym = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return from_eigenvalues(es.eigenvalues());
}

double gaussian_quantile(const SpectralSummary& s, double x) {
  if (!(x >= 0.0)) throw DomainError("gaussian_quantile: x must be >= 0");
  if (x == 0.0) return std::sqrt(s.dim_a);
  return std::sqrt(s.dim_a + 2.0 * std::sqrt(x * s.v2) + 2.0 * x * s.lambda);
}

double mu_of_x(const SpectralSummary& s, double x) {
  if (!(x > 0.0)) throw DomainError("mu_of_x: x must be > 0");
  if (s.v2 == 0.0) return 1.0;
  return 1.0 / (1.0 + std::sqrt(s.v2) / (2.0 * s.lambda * std::sqrt(x)));
}

double phase_rhs(const SpectralSummary& s, const TailConfig& cfg, double x) {
  double mu = mu_of_x(s, x);
  double base = cfg.gamma * std::sqrt(s.lambda) / mu - std::sqrt(s.dim_a / mu);
  base = std::max(base, 0.0);
  return cfg.rho * base * base;
}

namespace {

double crossing(const SpectralSummary& s, const TailConfig& cfg, double x) {
  double z = gaussian_quantile(s, x);
  return z * z - phase_rhs(s, cfg, x);
}

}  // namespace

PhaseTransition solve_xc(const SpectralSummary& s, const TailConfig& cfg) {
  if (!(s.lambda > 0.0)) throw DomainError("solve_xc: lambda must be > 0");
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma))
    throw DomainError("solve_xc: gamma must be finite and > 0");
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0))
    throw DomainError("solve_xc: rho must lie in (0,1)");

  double lo = 1e-12;
  if (crossing(s, cfg, lo) >= 0.0)
    throw NoPhaseTransition("solve_xc: no crossing, gamma too small for dim_a/lambda");
  double hi = std::max(cfg.gamma * cfg.gamma / 4.0 * 2.0, 1.0);
  int doublings = 0;
  while (crossing(s, cfg, hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1100 || !std::isfinite(hi))
      throw NoPhaseTransition("solve_xc: bracket expansion failed");
  }

  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double h = crossing(s, cfg, mid);
    if (h < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double hl = crossing(s, cfg, lo);
  double hh = crossing(s, cfg, hi);
  double xc = std::abs(hl) <= std::abs(hh) ? lo : hi;

  PhaseTransition pt;
  pt.x_c = xc;
  pt.z_c = gaussian_quantile(s, xc);
  double sr = std::sqrt(cfg.rho);
  pt.kappa = sr * cfg.gamma / ((2.0 + sr) * std::sqrt(s.lambda));
  pt.mu_c = mu_of_x(s, xc);
  pt.gamma = cfg.gamma;
  pt.rho = cfg.rho;
  pt.residual = std::abs(crossing(s, cfg, xc)) / (pt.z_c * pt.z_c);
  return pt;
}

double fused_quantile(const PhaseTransition& pt, const SpectralSummary& s,
                      double x) {
  if (!(x >= 0.0)) throw DomainError("fused_quantile: x must be >= 0");
  if (x <= pt.x_c) return gaussian_quantile(s, x);
  double kappa = pt.gamma / ((std::sqrt(8.0) + 1.0) * std::sqrt(s.lambda));
  return pt.z_c + (x - pt.x_c) / kappa;
}

double majorant_kappa(const SpectralSummary& s, const TailConfig& cfg) {
  return cfg.gamma / ((std::sqrt(8.0) + 1.0) * std::sqrt(s.lambda));
}

double linear_majorant(const SpectralSummary& s, const TailConfig& cfg,
                       double x) {
  if (!(x >= 0.0)) throw DomainError("linear_majorant: x must be >= 0");
  double k = majorant_kappa(s, cfg);
  return std::sqrt(s.dim_a) + k * s.lambda / std::sqrt(2.0) + x / k;
}

double exp_moment_bound(const SpectralSummary& s, const TailConfig& cfg,
                        const PhaseTransition& pt, double nu, double z) {
  (void)cfg;
  if (!(nu >= 0.0)) throw DomainError("exp_moment_bound: nu >= 0 violated");
  double sd = std::sqrt(s.dim_a);
  if (z < sd) throw DomainError("exp_moment_bound: z >= sqrt(dim_a) violated");
  double sl = std::sqrt(s.lambda);
  if (z <= pt.z_c) {
    double nu_max = (z - sd) / (2.0 * sl);
    if (nu > nu_max)
      throw DomainError(
          "exp_moment_bound: nu <= (z - sqrt(dim_a))/(2 sqrt(lambda)) violated");
    return 6.0 * std::exp(nu * z - (z - sd) * (z - sd) / (2.0 * s.lambda));
  }
  if (!(nu < pt.kappa))
    throw DomainError("exp_moment_bound: nu < kappa violated");
  double e = nu * pt.z_c - (pt.z_c - sd) * (pt.z_c - sd) / (2.0 * s.lambda) -
             (pt.kappa - nu) * (z - pt.z_c);
  return 3.0 * pt.kappa / (pt.kappa - nu) * std::exp(e);
}

double hkz_mgf_bound(const SpectralSummary& s, double mu) {
  if (!(mu >= 0.0)) throw DomainError("hkz_mgf_bound: mu >= 0 violated");
  if (!(mu * s.lambda < 1.0))
    throw DomainError("hkz_mgf_bound: mu < 1/lambda violated");
  double e = mu * mu * s.v2 / (4.0 * (1.0 - s.lambda * mu)) + mu * s.dim_a / 2.0;
  return std::exp(e);
}

}  // namespace sls
