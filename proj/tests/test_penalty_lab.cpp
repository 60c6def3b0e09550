#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sls/penalty_lab.hpp"

using namespace sls;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    double m = 0.5 * (lo + hi);
    ((f(m) < 0) == (f(lo) < 0) ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

// Random model satisfying the ordering and Sobolev hypotheses.
SequenceModel random_model(std::mt19937_64& rng, int p) {
  std::uniform_real_distribution<double> u(0, 1);
  SequenceModel m;
  m.N.resize(p);
  m.w.resize(p);
  m.upsilon_star.resize(p);
  double n = 1e2 + 1e4 * u(rng), s = 2 * u(rng), b = 0.5 + 2 * u(rng);
  double mass = 0;
  for (int j = 0; j < p; ++j) {
    double jj = j + 1;
    m.N(j) = n * std::pow(jj, -2 * s);
    m.w(j) = std::pow(jj, b);
    m.upsilon_star(j) = (u(rng) - 0.5) * std::pow(jj, -b - 0.6);
    mass += std::pow(m.w(j) * m.upsilon_star(j), 2);
  }
  m.upsilon_star /= std::sqrt(mass) * (1 + u(rng));
  m.sobolev = true;
  return m;
}

std::vector<double> pow2_grid(int lo, int hi, double step = 1) {
  std::vector<double> g;
  for (double e = lo; e <= hi + 1e-9; e += step) g.push_back(std::pow(2.0, e));
  return g;
}

}  // namespace

TEST(SequenceModelTest, SyntheticOnSobolevSphere) {
  SequenceModel m = SequenceModel::synthetic(1, 1, 2, 1000, 500);
  double mass = 0;
  for (int j = 0; j < 500; ++j) mass += std::pow(m.w(j) * m.upsilon_star(j), 2);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_NO_THROW(m.validate());
  SequenceModel bad = m;
  bad.N(3) = bad.N(2) * 2;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(RidgeRisk, ConstantSpectrum) {
  const int p = 40;
  const double n = 300;
  SequenceModel m;
  m.N = Vec::Constant(p, n);
  m.w = Vec::LinSpaced(p, 1, p);
  m.upsilon_star = Vec::Zero(p);
  for (double g2 : {0.5, 30.0, 300.0, 5000.0}) {
    RidgeRisk r = ridge_risk_bound(m, g2);
    EXPECT_NEAR(r.exact_var, p * n / ((n + g2) * (n + g2)), 1e-12 * r.exact_var);
    EXPECT_EQ(r.J, g2 <= n ? p : 0);
  }
  EXPECT_THROW(ridge_risk_bound(m, 0.0), DomainError);
}

TEST(RidgeRisk, TieRuleInclusive) {
  SequenceModel m = SequenceModel::synthetic(1, 1, 1, 100, 20);
  for (int J = 1; J <= 20; ++J) EXPECT_EQ(ridge_risk_bound(m, m.N(J - 1)).J, J);
  EXPECT_EQ(ridge_risk_bound(m, m.N(0) * 2).J, 0);
}

TEST(RidgeRisk, ExactBelowBounds) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    SequenceModel m = random_model(rng, 60);
    for (double g2 : {1.0, 10.0, 100.0, 1e4}) {
      RidgeRisk r = ridge_risk_bound(m, g2);
      EXPECT_LE(r.exact_var, r.var_bound * (1 + 1e-12));
      EXPECT_LE(r.exact_bias, r.bias_bound_max * (1 + 1e-12));
    }
  }
  // Synthetic models, where the weights grow polynomially, satisfy the simple 1/w_J^2 form.
  for (double g2 : {1.0, 10.0, 100.0, 1e3}) {
    RidgeRisk r = ridge_risk_bound(SequenceModel::synthetic(1, 1, 1, 1e4, 400), g2);
    EXPECT_LE(r.exact_bias, r.bias_bound);
  }
}

TEST(Cutoff, Conventions) {
  SequenceModel m = SequenceModel::synthetic(0.5, 1, 1, 1000, 50);
  CutoffRisk all = cutoff_risk(m, 50);
  EXPECT_EQ(all.bias_term, 0.0);
  CutoffRisk none = cutoff_risk(m, 0);
  EXPECT_EQ(none.var_term, 0.0);
  EXPECT_NEAR(none.bias_term, m.upsilon_star.squaredNorm(), 1e-15);
  for (int J = 1; J < 50; ++J) EXPECT_LE(cutoff_risk(m, J).bias_term, 1 / (m.w(J - 1) * m.w(J - 1)));
  EXPECT_THROW(cutoff_risk(m, 51), DomainError);
}

TEST(OracleCutoffTest, ZeroTruth) {
  SequenceModel m = SequenceModel::synthetic(1, 1, 1, 100, 30);
  m.upsilon_star.setZero();
  EXPECT_EQ(oracle_cutoff(m).J_star, 0);
}

TEST(OracleCutoffTest, ArgminContract) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    SequenceModel m = random_model(rng, 80);
    OracleCutoff o = oracle_cutoff(m);
    for (int J = 0; J <= 80; ++J) {
      double r = cutoff_risk(m, J).risk();
      EXPECT_LE(o.risk, r * (1 + 1e-14));
      if (J < o.J_star) EXPECT_GT(r, o.risk);
    }
  }
}

TEST(OracleCutoffTest, BalanceEquation) {
  // Tail mass exactly J^{-2 s0}: risk(J) = J/n + (J+1)^{-2 s0} - (p+1)^{-2 s0}.
  const double s0 = 1;
  const int p = 4000;
  for (double n : {100.0, 400.0, 1000.0}) {
    SequenceModel m;
    m.N = Vec::Constant(p, n);
    m.w.resize(p);
    m.upsilon_star.resize(p);
    for (int j = 0; j < p; ++j) {
      double jj = j + 1;
      m.w(j) = std::pow(jj, s0);
      m.upsilon_star(j) = std::sqrt(std::pow(jj, -2 * s0) - std::pow(jj + 1, -2 * s0));
    }
    double balance = bisect([&](double J) { return J / n - std::pow(J, -2 * s0); }, 1e-3, p);
    EXPECT_LE(std::abs(oracle_cutoff(m).J_star - balance), 2.0) << "n=" << n;
  }
}

TEST(RateConstantsTest, PolynomialSpectrum) {
  SequenceModel m = SequenceModel::synthetic(1, 1, 1, 1000, 200);
  RateConstants c = empirical_rate_constants(m);
  // N_j = N_1 j^{-2}: C1 is attained at J = 1; J sum_{j>J} j^{-2} < 1.
  EXPECT_GE(c.C1, 1.0);
  EXPECT_LE(c.C1, 1.0 + 1e-12);
  EXPECT_GT(c.C2, 0.0);
  EXPECT_LT(c.C2, 1.0);
}

TEST(Roughness, Condition) {
  const int p = 1000;
  Vec lin(p), quad(p);
  for (int j = 0; j < p; ++j) {
    lin(j) = j + 1;
    quad(j) = std::pow(j + 1.0, 2);
  }
  EXPECT_FALSE(roughness_condition(lin, 1.0));
  EXPECT_FALSE(roughness_condition(Vec::Constant(p, 2.0), 1.0));
  EXPECT_TRUE(roughness_condition(quad, 2.0));

  // Direct summation at M = 1 for b_j^2 = j.
  double tail = 0;
  for (int j = 2; j <= p; ++j) tail += 1.0 / (double(j) * j);
  EXPECT_GT(tail, 0.25);
  EXPECT_NEAR(tail, M_PI * M_PI / 6 - 1, 1.0 / p);

  double cb = roughness_min_cb(quad);
  EXPECT_TRUE(roughness_condition(quad, cb));
  EXPECT_FALSE(roughness_condition(quad, cb * (1 - 1e-9)));
  Vec bad(3);
  bad << 1, 0.5, 2;
  EXPECT_THROW(roughness_condition(bad, 1.0), DomainError);
}

TEST(Roughness, EffectiveDimension) {
  RoughnessDim z = roughness_effective_dim(Vec::Zero(12));
  EXPECT_EQ(z.M_g, 12);
  EXPECT_EQ(z.exact, 12.0);
  RoughnessDim t = roughness_effective_dim(Vec::Constant(12, 3.0));
  EXPECT_EQ(t.M_g, 0);
  EXPECT_NEAR(t.exact, 12.0 / 16, 1e-15);
  EXPECT_TRUE(t.degenerate);

  Vec b(100);
  for (int j = 0; j < 100; ++j) b(j) = std::pow((j + 1) / 5.0, 4);
  RoughnessDim r = roughness_effective_dim(b);
  double exact = 0, cb = 0;
  for (int j = 0; j < 100; ++j) exact += 1 / std::pow(1 + b(j), 2);
  for (int M = 1; M < 100; ++M) {
    double s1 = 0, s2 = 0;
    for (int j = M; j < 100; ++j) s1 += 1 / (b(j) * b(j));
    for (int j = 0; j < M; ++j) s2 += b(j) * b(j);
    cb = std::max({cb, s1 * b(M) * b(M) / M, s2 / (M * b(M - 1) * b(M - 1))});
  }
  EXPECT_NEAR(r.exact, exact, 1e-12);
  EXPECT_NEAR(r.C_B, cb, 1e-10 * cb);
  EXPECT_EQ(r.M_g, 5);
  EXPECT_LE(r.exact, r.bound);
}

TEST(TauFamily, FirstOrderCondition) {
  const double n = 1e6, s0 = 1, c1 = 1;
  TauOracle o = tau_family_oracle(n, s0, c1);
  double foc = std::exp(bisect(
      [&](double lt) {
        double tau = std::exp(lt);
        return std::pow(n / tau, 1 / (2 * s0)) / (2 * s0 * tau) - c1;
      },
      -20, 40));
  EXPECT_NEAR(o.tau_star, foc, 1e-6 * foc);
  EXPECT_GT(o.tau_star, 100 / 4.0);
  EXPECT_LT(o.tau_star, 100 * 4.0);
  EXPECT_LE(o.risk, tau_family_risk(n, s0, c1, 2 * o.tau_star));
  EXPECT_LE(o.risk, tau_family_risk(n, s0, c1, o.tau_star / 2));
  EXPECT_NEAR(o.J_tau, std::sqrt(n / o.tau_star), 1e-9 * o.J_tau);
  double ratio = tau_family_oracle(16 * n, s0, c1).tau_star / o.tau_star;
  EXPECT_NEAR(ratio, std::pow(16.0, 1.0 / 3), 0.01 * std::pow(16.0, 1.0 / 3));
}

TEST(RateSweep, InverseProblemSlope) {
  RateTable t = rate_sweep(RateSpec{}, pow2_grid(10, 16), 2);
  EXPECT_NEAR(t.slope, -0.4, 0.1);
  ASSERT_EQ(t.rows.size(), 7u);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GE(t.rows[i].J_star, t.rows[i - 1].J_star);
}

TEST(RateSweep, DirectProblemSlope) {
  RateSpec spec;
  spec.s = 0;
  RateTable t = rate_sweep(spec, pow2_grid(10, 16), 2);
  EXPECT_NEAR(t.slope, -2.0 / 3, 0.1);
}

TEST(RateSweep, WeightScaleShift) {
  RateSpec a, b;
  b.C_w = 2;
  auto grid = pow2_grid(10, 16);
  RateTable ta = rate_sweep(a, grid), tb = rate_sweep(b, grid);
  double expected = -3.0 / 5 * std::log(2.0);
  EXPECT_NEAR(tb.intercept - ta.intercept, expected, 0.1 * std::abs(expected));
}

TEST(RateSweep, GridRefinementStable) {
  RateTable coarse = rate_sweep(RateSpec{}, pow2_grid(10, 16));
  RateTable fine = rate_sweep(RateSpec{}, pow2_grid(10, 16, 0.5));
  EXPECT_LT(std::abs(coarse.slope - fine.slope), 0.02);
}

TEST(RateSweep, ThreadInvariantAndGuards) {
  RateTable a = rate_sweep(RateSpec{}, pow2_grid(10, 13), 1);
  RateTable b = rate_sweep(RateSpec{}, pow2_grid(10, 13), 3);
  EXPECT_EQ(a.slope, b.slope);
  EXPECT_THROW(rate_sweep(RateSpec{}, {1024, 2048}), DomainError);
}
