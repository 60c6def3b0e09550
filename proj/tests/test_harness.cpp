#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sls/harness.hpp"

using namespace sls;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("sls_harness_" + name);
  fs::remove_all(d);
  return d;
}

RunOptions opts(const fs::path& dir, int threads = 1, std::optional<std::uint64_t> seed = 5) {
  RunOptions o;
  o.seed = seed;
  o.threads = threads;
  o.outdir = dir.string();
  return o;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(CoverageRow, Margin) {
  CoverageRow r = coverage_row(2.0, 0.1, 12, 100);
  EXPECT_DOUBLE_EQ(r.empirical, 0.12);
  EXPECT_DOUBLE_EQ(r.margin3sigma, 3 * std::sqrt(0.1 * 0.9 / 100));
  EXPECT_TRUE(r.ok());
  EXPECT_FALSE(coverage_row(2.0, 0.1, 20, 100).ok());
  // Nominal above one is capped for the variance.
  CoverageRow big = coverage_row(0.5, 3 * std::exp(-0.5), 100, 100);
  EXPECT_EQ(big.margin3sigma, 0.0);
  EXPECT_TRUE(big.ok());
  EXPECT_THROW(coverage_row(1.0, 0.1, 0, 0), ConfigError);
}

TEST(Format, Doubles) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(HUGE_VAL), "inf");
  EXPECT_EQ(format_double(-HUGE_VAL), "-inf");
  double v = 1.0 / 3;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Hash, Fnv) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  Json c = {{"n", 3}};
  std::string h = config_hash(c, std::nullopt);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_NE(h, config_hash(c, 1));
  EXPECT_NE(config_hash(c, 1), config_hash(c, 2));
  EXPECT_EQ(h, config_hash(Json{{"n", 3}}, std::nullopt));
}

TEST(UnitLaplace, Moments) {
  Rng rng(3);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    double v = unit_laplace(rng);
    s += v;
    s2 += v * v;
    s4 += v * v * v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  // Laplace kurtosis is 6.
  EXPECT_NEAR(s4 / n, 6.0, 0.5);
}

TEST(RunCommand, Guards) {
  fs::path d = scratch("guards");
  Json tail = {{"B", {{"identity", 3}}}, {"mc", {{"reps", 100}}}};
  EXPECT_THROW(run_command("tail", tail, opts(d, 1, std::nullopt)), ConfigError);
  EXPECT_THROW(run_command("tail", tail, opts(d, 0)), ConfigError);
  EXPECT_THROW(run_command("nope", tail, opts(d)), ConfigError);
  EXPECT_THROW(run_command("tail", Json{{"B", {{"bogus", 1}}}}, opts(d)), ConfigError);
}

TEST(RunCommand, TailWithoutMcNeedsNoSeed) {
  fs::path d = scratch("tail");
  Json cfg = {{"B", {{"identity", 4}}}, {"gamma", 20.0}, {"x_grid", {1.0, 2.0}}};
  EXPECT_EQ(run_command("tail", cfg, opts(d, 1, std::nullopt)), 0);
  auto ls = lines(slurp(d / "tail.csv"));
  ASSERT_GE(ls.size(), 4u);
  EXPECT_EQ(ls[0].rfind("# sls ", 0), 0u);
  EXPECT_NE(ls[0].find("config=" + config_hash(cfg, std::nullopt)), std::string::npos);
  bool header = false;
  for (const auto& l : ls) header |= l.rfind("x,z_gauss,z_fused,z_majorant,regime", 0) == 0;
  EXPECT_TRUE(header);
}

TEST(RunCommand, FitPrecisionClosedForm) {
  fs::path d = scratch("fit");
  Json cfg = {{"model", {{"kind", "precision"}, {"p", 4}, {"rho", 0.3}, {"n", 300}}}};
  EXPECT_EQ(run_command("fit", cfg, opts(d)), 0);
  Json j = Json::parse(slurp(d / "fit.json"));
  EXPECT_TRUE(j.at("converged").get<bool>());
  EXPECT_LE(j.at("closed_form_frobenius").get<double>(), 1e-8);
  EXPECT_TRUE(fs::exists(d / "fit.csv"));
}

TEST(RunCommand, RateFooter) {
  fs::path d = scratch("rate");
  EXPECT_EQ(run_command("rate", Json{{"log2_n", {10, 13}}, {"p", 500}}, opts(d, 1, std::nullopt)), 0);
  auto ls = lines(slurp(d / "rate.csv"));
  ASSERT_FALSE(ls.empty());
  const std::string& last = ls.back();
  ASSERT_EQ(last.rfind("# {", 0), 0u);
  Json footer = Json::parse(last.substr(2));
  EXPECT_NEAR(footer.at("expected_slope").get<double>(), -0.4, 1e-15);
}

TEST(RunCommand, IidSandwichAdvisory) {
  fs::path d = scratch("iid");
  Json cfg = {{"n", 50}, {"p", 5}, {"reps", 2000}, {"x_grid", {1.0}}};
  EXPECT_EQ(run_command("iid-sandwich", cfg, opts(d)), 0);
  std::string s = slurp(d / "iid_sandwich.csv");
  EXPECT_NE(s.find("advisory:"), std::string::npos);
  auto ls = lines(s);
  EXPECT_EQ(ls.back().back(), '1');
  cfg["n"] = 100000;
  EXPECT_EQ(run_command("iid-sandwich", cfg, opts(d)), 0);
  s = slurp(d / "iid_sandwich.csv");
  EXPECT_EQ(s.find("advisory:"), std::string::npos);
}

TEST(RunCommand, ThreadsDoNotChangeBytes) {
  Json tail = {{"B", {{"diag", {3.0, 2.0, 1.0, 0.5}}}}, {"mc", {{"reps", 25000}, {"generator", "laplace"}}}};
  Json risk = {{"model", {{"kind", "logistic"}, {"n", 200}, {"p", 3}, {"truth", {0.2, -0.1, 0.3}}}},
               {"penalty", {{"kind", "ridge"}, {"g2", 1.0}}},
               {"reps", 30}};
  for (auto [cmd, cfg, file] : {std::tuple{"tail", tail, "tail.csv"}, std::tuple{"risk", risk, "risk.json"}}) {
    fs::path a = scratch(std::string("det_a_") + cmd), b = scratch(std::string("det_b_") + cmd);
    int ra = run_command(cmd, cfg, opts(a, 1));
    int rb = run_command(cmd, cfg, opts(b, 3));
    EXPECT_EQ(ra, rb);
    std::string fa = slurp(a / file);
    EXPECT_FALSE(fa.empty());
    EXPECT_EQ(fa, slurp(b / file)) << cmd;
  }
}
