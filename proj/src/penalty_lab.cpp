#include "sls/penalty_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sls {

void SequenceModel::validate() const {
  const Eigen::Index p = N.size();
  if (p < 1) throw DomainError("SequenceModel: empty spectrum");
  if (w.size() != p || upsilon_star.size() != p)
    throw DomainError("SequenceModel: N, w and upsilon_star disagree in size");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(N(j) > 0.0) || !(w(j) > 0.0))
      throw DomainError("SequenceModel: N and w must be positive");
    if (j > 0 && N(j) > N(j - 1)) throw DomainError("SequenceModel: N must be nonincreasing");
    if (j > 0 && w(j) < w(j - 1)) throw DomainError("SequenceModel: w must be nondecreasing");
  }
  if (sobolev) {
    KahanSum s;
    for (Eigen::Index j = 0; j < p; ++j) s.add(w(j) * w(j) * upsilon_star(j) * upsilon_star(j));
    if (s.value() > 1.0 + 1e-12) throw DomainError("SequenceModel: outside the unit Sobolev ball");
  }
}

SequenceModel SequenceModel::synthetic(double s, double beta, double C_w, double N1,
                                       Eigen::Index p, double eps) {
  if (p < 1 || !(N1 > 0.0) || !(C_w > 0.0) || s < 0.0 || beta < 0.0)
    throw DomainError("SequenceModel::synthetic: bad rate parameters");
  SequenceModel m;
  m.N.resize(p);
  m.w.resize(p);
  m.upsilon_star.resize(p);
  KahanSum mass;
  for (Eigen::Index j = 0; j < p; ++j) {
    double jj = static_cast<double>(j + 1);
    m.N(j) = N1 * std::pow(jj, -2.0 * s);
    m.w(j) = std::sqrt(C_w) * std::pow(jj, beta);
    m.upsilon_star(j) = std::pow(jj, -beta - 0.5 - eps);
    mass.add(m.w(j) * m.w(j) * m.upsilon_star(j) * m.upsilon_star(j));
  }
  m.upsilon_star /= std::sqrt(mass.value());
  m.sobolev = true;
  m.s = s;
  m.beta = beta;
  m.C_w = C_w;
  m.N1 = N1;
  return m;
}

RidgeRisk ridge_risk_bound(const SequenceModel& m, double g2) {
  if (!(g2 > 0.0)) throw DomainError("ridge_risk_bound: g^2 must be > 0");
  m.validate();
  const Eigen::Index p = m.size();
  RidgeRisk r;
  for (Eigen::Index j = 0; j < p; ++j)
    if (m.N(j) >= g2) r.J = j + 1;
  KahanSum head, tail, ev, eb;
  double bmax = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double nj = m.N(j);
    if (j < r.J)
      head.add(1.0 / nj);
    else
      tail.add(nj);
    ev.add(nj / ((nj + g2) * (nj + g2)));
    double shrink = 1.0 / (nj / g2 + 1.0);
    eb.add(m.upsilon_star(j) * m.upsilon_star(j) * shrink * shrink);
    bmax = std::max(bmax, shrink * shrink / (m.w(j) * m.w(j)));
  }
  r.var_bound = head.value() + tail.value() / (g2 * g2);
  double wj = m.w(std::max<Eigen::Index>(r.J, 1) - 1);
  r.bias_bound = 1.0 / (wj * wj);
  r.bias_bound_max = bmax;
  r.exact_var = ev.value();
  r.exact_bias = eb.value();
  return r;
}

CutoffRisk cutoff_risk(const SequenceModel& m, Eigen::Index J) {
  m.validate();
  if (J < 0 || J > m.size()) throw DomainError("cutoff_risk: J must lie in [0, p]");
  KahanSum v, b;
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    if (j < J)
      v.add(1.0 / m.N(j));
    else
      b.add(m.upsilon_star(j) * m.upsilon_star(j));
  }
  return {v.value(), b.value()};
}

OracleCutoff oracle_cutoff(const SequenceModel& m) {
  m.validate();
  const Eigen::Index p = m.size();
  // Running sums; the tail is accumulated from the back so that small
  // coefficients are not swamped.
  std::vector<double> tail(static_cast<std::size_t>(p) + 1, 0.0);
  {
    KahanSum t;
    for (Eigen::Index j = p - 1; j >= 0; --j) {
      t.add(m.upsilon_star(j) * m.upsilon_star(j));
      tail[static_cast<std::size_t>(j)] = t.value();
    }
  }
  OracleCutoff best;
  best.risk = std::numeric_limits<double>::infinity();
  KahanSum head;
  for (Eigen::Index J = 0; J <= p; ++J) {
    if (J > 0) head.add(1.0 / m.N(J - 1));
    CutoffRisk c{head.value(), tail[static_cast<std::size_t>(J)]};
    if (c.risk() < best.risk) {
      best.J_star = J;
      best.risk = c.risk();
      best.terms = c;
    }
  }
  return best;
}

RateConstants empirical_rate_constants(const SequenceModel& m) {
  m.validate();
  const Eigen::Index p = m.size();
  std::vector<double> tail(static_cast<std::size_t>(p) + 1, 0.0);
  KahanSum t;
  for (Eigen::Index j = p - 1; j >= 0; --j) {
    t.add(m.N(j));
    tail[static_cast<std::size_t>(j)] = t.value();
  }
  RateConstants c;
  KahanSum head;
  for (Eigen::Index J = 1; J <= p; ++J) {
    double nj = m.N(J - 1);
    head.add(1.0 / nj);
    double jj = static_cast<double>(J);
    c.C1 = std::max(c.C1, head.value() * nj / jj);
    c.C2 = std::max(c.C2, tail[static_cast<std::size_t>(J)] / (jj * nj));
  }
  return c;
}

namespace {

void check_bsq(const Vec& bsq, bool positive) {
  if (bsq.size() < 1) throw DomainError("roughness: empty sequence");
  for (Eigen::Index j = 0; j < bsq.size(); ++j) {
    if (positive ? !(bsq(j) > 0.0) : !(bsq(j) >= 0.0))
      throw DomainError("roughness: b_j^2 must be positive");
    if (j > 0 && bsq(j) < bsq(j - 1)) throw DomainError("roughness: b_j^2 must be nondecreasing");
  }
}

// ratio[M-1] for M = 1..p-1: the two sides of the condition divided by M times
// the reference term.
std::vector<std::pair<double, double>> roughness_ratios(const Vec& bsq) {
  const Eigen::Index p = bsq.size();
  std::vector<double> tail(static_cast<std::size_t>(p) + 1, 0.0);
  KahanSum t;
  for (Eigen::Index j = p - 1; j >= 0; --j) {
    t.add(1.0 / (bsq(j) * bsq(j)));
    tail[static_cast<std::size_t>(j)] = t.value();
  }
  std::vector<std::pair<double, double>> out;
  KahanSum head;
  for (Eigen::Index M = 1; M < p; ++M) {
    head.add(bsq(M - 1) * bsq(M - 1));
    double mm = static_cast<double>(M);
    double next = bsq(M) * bsq(M);      // b_{M+1}^4
    double cur = bsq(M - 1) * bsq(M - 1);  // b_M^4
    out.emplace_back(tail[static_cast<std::size_t>(M)] * next / mm, head.value() / (mm * cur));
  }
  return out;
}

}  // namespace

bool roughness_condition(const Vec& bsq, double C_B) {
  check_bsq(bsq, true);
  for (auto [a, b] : roughness_ratios(bsq))
    if (a > C_B || b > C_B) return false;
  return true;
}

double roughness_min_cb(const Vec& bsq) {
  check_bsq(bsq, true);
  double c = 0.0;
  for (auto [a, b] : roughness_ratios(bsq)) c = std::max({c, a, b});
  return c;
}

RoughnessDim roughness_effective_dim(const Vec& bsq, double C_B) {
  check_bsq(bsq, false);
  RoughnessDim r;
  KahanSum e;
  for (Eigen::Index j = 0; j < bsq.size(); ++j) {
    double d = 1.0 + bsq(j);
    e.add(1.0 / (d * d));
    if (bsq(j) <= 1.0) r.M_g = j + 1;
  }
  r.exact = e.value();
  r.C_B = C_B;
  r.bound = (1.0 + C_B) * static_cast<double>(r.M_g);
  r.degenerate = r.M_g == 0;
  return r;
}

RoughnessDim roughness_effective_dim(const Vec& bsq) {
  check_bsq(bsq, false);
  double cb = bsq.minCoeff() > 0.0 ? roughness_min_cb(bsq) : 0.0;
  return roughness_effective_dim(bsq, cb);
}

double tau_family_risk(double n, double s0, double C1, double tau) {
  return (std::pow(n / tau, 1.0 / (2.0 * s0)) + tau * C1) / n;
}

TauOracle tau_family_oracle(double n, double s0, double C1) {
  if (!(n > 0.0) || !(s0 > 0.0) || !(C1 > 0.0))
    throw DomainError("tau_family_oracle: n, s0 and C1 must be > 0");
  // Golden section in log tau; the objective is convex in tau.
  auto f = [&](double lt) { return tau_family_risk(n, s0, C1, std::exp(lt)); };
  double a = std::log(n) - 60.0, b = std::log(n) + 60.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  TauOracle o;
  o.tau_star = std::exp(0.5 * (a + b));
  o.J_tau = std::pow(n / o.tau_star, 1.0 / (2.0 * s0));
  o.risk = tau_family_risk(n, s0, C1, o.tau_star);
  return o;
}

RateTable rate_sweep(const RateSpec& spec, const std::vector<double>& n_grid, int threads) {
  if (n_grid.size() < 3) throw DomainError("rate_sweep: need at least 3 grid points");
  RateTable t;
  t.rows.resize(n_grid.size());
  parallel_for(n_grid.size(), threads, [&](std::size_t i) {
    double n = n_grid[i];
    if (!(n > 0.0)) throw DomainError("rate_sweep: n must be > 0");
    SequenceModel m = SequenceModel::synthetic(spec.s, spec.beta, spec.C_w, n, spec.p, spec.eps);
    OracleCutoff o = oracle_cutoff(m);
    t.rows[i] = {n, o.J_star, o.terms.var_term, o.terms.bias_term, o.risk};
  });
  const double k = static_cast<double>(n_grid.size());
  KahanSum sx, sy;
  for (const auto& r : t.rows) {
    sx.add(std::log(r.n));
    sy.add(std::log(r.risk));
  }
  double mx = sx.value() / k, my = sy.value() / k;
  KahanSum sxx, sxy;
  for (const auto& r : t.rows) {
    double dx = std::log(r.n) - mx;
    sxx.add(dx * dx);
    sxy.add(dx * (std::log(r.risk) - my));
  }
  if (!(sxx.value() > 0.0)) throw DomainError("rate_sweep: degenerate n grid");
  t.slope = sxy.value() / sxx.value();
  t.intercept = my - t.slope * mx;
  KahanSum rss;
  for (const auto& r : t.rows) {
    double e = std::log(r.risk) - t.intercept - t.slope * std::log(r.n);
    rss.add(e * e);
  }
  t.slope_se = std::sqrt(rss.value() / (k - 2.0) / sxx.value());
  return t;
}

}  // namespace sls
