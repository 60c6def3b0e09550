#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sls/tailbounds.hpp"

using namespace sls;

namespace {

std::vector<Mat> random_family(int count, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<Mat> out;
  for (int i = 0; i < count; ++i) {
    Mat a(p, p);
    for (int k = 0; k < p * p; ++k) a.data()[k] = n(rng);
    out.push_back(0.5 * (a + a.transpose()) / p);
  }
  return out;
}

}  // namespace

TEST(TensorCovariance, ScalarForm) {
  Mat t(1, 1);
  t << 1.7;
  Mat s2 = tensor_family_covariance(TensorFamily::dense({t}));
  EXPECT_DOUBLE_EQ(s2(0, 0), 2 * 1.7 * 1.7);
}

TEST(TensorCovariance, TraceIsTwiceFrobeniusMass) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto fam = random_family(6, 5, seed);
    Mat s2 = tensor_family_covariance(TensorFamily::dense(fam));
    double mass = 0;
    for (const auto& t : fam) mass += t.cwiseProduct(t).sum();
    double tr = 0;
    for (int i = 0; i < s2.rows(); ++i) tr += s2(i, i);
    EXPECT_EQ(tr, 2 * mass);
    EXPECT_GE(min_eigenvalue(s2), -1e-12);
    EXPECT_EQ((s2 - s2.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(TensorCovariance, RejectsAsymmetric) {
  Mat t = Mat::Zero(2, 2);
  t(0, 1) = 1;
  EXPECT_THROW(TensorFamily::dense({t}), DomainError);
}

TEST(TensorCovariance, MonteCarlo) {
  const int p = 4, count = 3, reps = 200000;
  auto fam = random_family(count, p, 9);
  TensorFamily tf = TensorFamily::dense(fam);
  Mat s2 = tensor_family_covariance(tf);
  Vec mean = tf.mean();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Mat acc = Mat::Zero(count, count), acc2 = Mat::Zero(count, count);
  for (int r = 0; r < reps; ++r) {
    Vec g(p);
    for (int i = 0; i < p; ++i) g(i) = n(rng);
    Vec d = tf.evaluate(g) - mean;
    Mat o = d * d.transpose();
    acc += o;
    acc2 += o.cwiseAbs2();
  }
  for (int i = 0; i < count; ++i)
    for (int k = 0; k < count; ++k) {
      double m = acc(i, k) / reps;
      double se = std::sqrt((acc2(i, k) / reps - m * m) / reps);
      EXPECT_NEAR(m, s2(i, k), 4 * se);
    }
}

TEST(TensorDelta, KnownValues) {
  Mat t(1, 1), v(1, 1);
  t << 1;
  v << 2;
  EXPECT_NEAR(tensor_delta(TensorFamily::dense({t}, v), 10, 1), std::sqrt(2.0), 1e-14);
  TensorFamily zero = TensorFamily::dense({Mat::Zero(3, 3), Mat::Zero(3, 3)}, Mat::Identity(2, 2));
  EXPECT_EQ(tensor_delta(zero, 50, 1), 0.0);
  Mat sing = Mat::Zero(2, 2);
  sing(0, 0) = 1;
  EXPECT_THROW(tensor_delta(TensorFamily::dense(random_family(2, 3, 1), sing), 10, 1), DomainError);
}

TEST(TensorDelta, MonotoneInDirections) {
  TensorFamily tf = TensorFamily::dense(random_family(5, 6, 3));
  double a = tensor_delta(tf, 100, 42);
  double b = tensor_delta(tf, 10000, 42);
  EXPECT_GE(b, a);
}

TEST(TensorDelta, BlockChiSquareAnalytic) {
  // Forms T_i = k^{-1/2} * sum of g_j^2 over block i; sup of 2|max u_i|/sqrt(k)
  // over ||V u|| <= 1 with V^2 = S^2 = 2I is sqrt(2/k).
  const int k = 50, count = 3;
  Mat d = Mat::Zero(k * count, count);
  for (int i = 0; i < count; ++i) d.block(i * k, i, k, 1).setConstant(1 / std::sqrt(double(k)));
  TensorFamily tf = TensorFamily::diagonal(d);
  EXPECT_NEAR(tf.v_sq(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(tensor_delta(tf, 500, 7), std::sqrt(2.0 / k), 1e-10);
}

TEST(TensorUpperTail, Definitional) {
  TensorFamily tf = TensorFamily::dense(random_family(4, 4, 5));
  tf.delta = tensor_delta(tf, 200, 1);
  TailConfig cfg{0.5 / tf.delta, 0.5};
  EXPECT_EQ(tensor_upper_tail(tf, Mat::Zero(4, 4), cfg, 0.0), 0.0);
  Mat q = Mat::Identity(4, 4);
  SpectralSummary s = SpectralSummary::from_matrix(tf.v_sq);
  PhaseTransition pt = solve_xc(s, cfg);
  for (double x : {0.5, 2.0, 50.0})
    EXPECT_DOUBLE_EQ(tensor_upper_tail(tf, q, cfg, x), fused_quantile(pt, s, x));
  TailConfig bad{2.0 / tf.delta, 0.5};
  EXPECT_THROW(tensor_upper_tail(tf, q, bad, 1.0), DomainError);
}

TEST(TensorUpperTail, DiagonalFamilyMC) {
  const int p = 30, reps = 100000;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  Mat d(p, p);
  for (int i = 0; i < p * p; ++i) d.data()[i] = u(rng) / p;
  TensorFamily tf = TensorFamily::diagonal(d);
  tf.delta = tensor_delta(tf, 300, 2);
  TailConfig cfg{0.5 / tf.delta, 0.5};
  double q = tensor_upper_tail(tf, Mat::Identity(p, p), cfg, 2.0);
  std::normal_distribution<double> n;
  Vec mean = tf.mean();
  int hit = 0;
  for (int r = 0; r < reps; ++r) {
    Vec g(p);
    for (int i = 0; i < p; ++i) g(i) = n(rng);
    hit += std::sqrt(1 - tf.delta * cfg.gamma) * (tf.evaluate(g) - mean).norm() > q;
  }
  double nom = 3 * std::exp(-2.0);
  EXPECT_LE(double(hit) / reps, nom + 3 * std::sqrt(nom * (1 - nom) / reps));
}

TEST(TensorLowerTail, Formula) {
  Mat d = Mat::Identity(4, 4);
  TensorFamily tf = TensorFamily::diagonal(d);
  tf.delta = 0.0;
  SpectralSummary s = SpectralSummary::from_matrix(tf.v_sq);
  double x = 0.3;
  EXPECT_NEAR(tensor_lower_tail(tf, Mat::Identity(4, 4), x, 0.0), s.dim_a - 2 * std::sqrt(x * s.v2), 1e-12);
  double cap = s.dim_a * s.dim_a / (4 * s.v2);
  double a = 0.2;
  EXPECT_NEAR(tensor_lower_tail(tf, Mat::Identity(4, 4), cap, a), -a * s.dim_a / (1 - a), 1e-12);
  EXPECT_THROW(tensor_lower_tail(tf, Mat::Identity(4, 4), cap * 1.01, a), DomainError);
}

TEST(TensorLowerTail, AlphaTooSmallReportsRequirement) {
  TensorFamily tf = TensorFamily::dense(random_family(3, 3, 2));
  tf.delta = 0.05;
  try {
    tensor_lower_tail(tf, Mat::Identity(3, 3), 0.01, 1e-6);
    FAIL() << "expected AlphaTooSmall";
  } catch (const AlphaTooSmall& e) {
    SpectralSummary s = SpectralSummary::from_matrix(tf.v_sq);
    EXPECT_NEAR(e.required_alpha, tensor_lower_min_alpha(s, 0.05), 1e-15);
    EXPECT_NO_THROW(tensor_lower_tail(tf, Mat::Identity(3, 3), 0.01, e.required_alpha));
  }
}

TEST(TensorLowerTail, DiagonalGaussianMC) {
  // Block chi-square family, 40 forms, each k^{-1/2} chi^2_k.
  const int count = 40, k = 2000, reps = 100000;
  Mat v = 2 * Mat::Identity(count, count);
  SpectralSummary s = SpectralSummary::from_matrix(v);
  double delta = std::sqrt(2.0 / k);
  double alpha = tensor_lower_min_alpha(s, delta);
  ASSERT_LT(alpha, 0.5);
  // Only v_sq and delta enter the threshold.
  TensorFamily tf;
  tf.diagonals = Mat::Ones(1, count);
  tf.v_sq = v;
  tf.delta = delta;
  double t = tensor_lower_tail(tf, Mat::Identity(count, count), 1.0, alpha);
  std::mt19937_64 rng(12);
  std::chi_squared_distribution<double> chi(k);
  int hit = 0;
  for (int r = 0; r < reps; ++r) {
    double sq = 0;
    for (int i = 0; i < count; ++i) {
      double dev = (chi(rng) - k) / std::sqrt(double(k));
      sq += dev * dev;
    }
    hit += sq < t;
  }
  double nom = 2 * std::exp(-1.0);
  EXPECT_LE(double(hit) / reps, nom + 3 * std::sqrt(nom * (1 - nom) / reps));
}
