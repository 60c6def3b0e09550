#include "sls/harness.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sls/penalty_lab.hpp"
#include "sls/tailbounds.hpp"

namespace sls {

CoverageRow coverage_row(double x, double nominal, long long violations, long long reps) {
  if (reps < 1) throw ConfigError("coverage: replicate count must be >= 1");
  CoverageRow r;
  r.x = x;
  r.nominal = nominal;
  r.violations = violations;
  r.reps = reps;
  r.empirical = static_cast<double>(violations) / static_cast<double>(reps);
  double q = std::min(nominal, 1.0);
  r.margin3sigma = 3.0 * std::sqrt(q * (1.0 - q) / static_cast<double>(reps));
  return r;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const Json& cfg, std::optional<std::uint64_t> seed) {
  Json j = cfg;
  if (seed) j["__seed"] = *seed;
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(j.dump()));
  return buf;
}

double unit_laplace(Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution coin(0.5);
  double v = e(rng) / std::sqrt(2.0);
  return coin(rng) ? v : -v;
}

namespace {

namespace fs = std::filesystem;

class Csv {
 public:
  Csv(const RunOptions& opt, const std::string& name, const std::string& hash) {
    fs::create_directories(opt.outdir);
    path_ = (fs::path(opt.outdir) / name).string();
    out_.open(path_, std::ios::binary);
    if (!out_) throw ConfigError("cannot write " + path_);
    out_ << "# sls " << SLS_VERSION << " config=" << hash << "\n";
  }
  void comment(const std::string& s) { out_ << "# " << s << "\n"; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::string path_;
  std::ofstream out_;
};

void write_json(const RunOptions& opt, const std::string& name, Json j, const std::string& hash) {
  fs::create_directories(opt.outdir);
  std::string path = (fs::path(opt.outdir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  j["version"] = SLS_VERSION;
  j["config_hash"] = hash;
  out << j.dump(2) << "\n";
}

std::string F(double v) { return format_double(v); }
std::string I(long long v) { return std::to_string(v); }

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::uint64_t need_seed(const RunOptions& opt, const std::string& cmd) {
  if (!opt.seed) throw ConfigError(cmd + ": --seed is required for stochastic runs");
  return *opt.seed;
}

std::vector<double> x_grid(const Json& cfg, std::vector<double> fallback) {
  auto g = json_get<std::vector<double>>(cfg, "x_grid", fallback);
  if (g.empty()) throw ConfigError("config: empty x_grid");
  for (double x : g)
    if (!(x >= 0.0)) throw ConfigError("config: x values must be >= 0");
  return g;
}

long long reps_of(const Json& cfg, const std::string& key, long long fallback) {
  auto r = json_get<long long>(cfg, key, fallback);
  if (r < 1) throw ConfigError("config: replicate count must be >= 1");
  return r;
}

// Splits reps into fixed blocks and sums per-block violation counts for each
// of `k` events. body(block_rng, count, counts) fills counts for one block.
std::vector<long long> mc_blocks(
    long long reps, std::size_t k, std::uint64_t seed, std::uint64_t tag, int threads,
    const std::function<void(Rng&, long long, std::vector<long long>&)>& body) {
  std::size_t nb = static_cast<std::size_t>((reps + kBlock - 1) / kBlock);
  std::vector<std::vector<long long>> per(nb, std::vector<long long>(k, 0));
  parallel_for(nb, threads, [&](std::size_t b) {
    Rng rng = make_stream(seed, b, tag);
    long long count = std::min<long long>(kBlock, reps - static_cast<long long>(b) * kBlock);
    body(rng, count, per[b]);
  });
  std::vector<long long> total(k, 0);
  for (const auto& v : per)
    for (std::size_t i = 0; i < k; ++i) total[i] += v[i];
  return total;
}

// Operator for the tail command: either diagonal eigenvalues or a dense PSD matrix.
struct TailOperator {
  Vec diag;
  Mat dense;
  SpectralSummary summary;
};

TailOperator tail_operator(const Json& cfg) {
  TailOperator op;
  Json b = json_require<Json>(cfg, "B");
  if (b.contains("identity")) {
    auto p = json_require<Eigen::Index>(b, "identity");
    if (p < 1) throw ConfigError("config: identity dimension must be >= 1");
    op.diag = Vec::Ones(p);
  } else if (b.contains("diag")) {
    op.diag = json_vec(b.at("diag"), "B.diag");
    if (op.diag.size() < 1 || op.diag.minCoeff() < 0.0)
      throw ConfigError("config: B.diag must be nonnegative");
  } else if (b.contains("matrix")) {
    op.dense = json_mat(b.at("matrix"), "B.matrix");
    if (op.dense.rows() != op.dense.cols()) throw ConfigError("config: B must be square");
  } else {
    throw ConfigError("config: B needs identity, diag or matrix");
  }
  op.summary = op.diag.size() > 0 ? SpectralSummary::from_eigenvalues(op.diag)
                                  : SpectralSummary::from_matrix(op.dense);
  return op;
}

}  // namespace

int cmd_tail(const Json& cfg, const RunOptions& opt) {
  TailOperator op = tail_operator(cfg);
  auto xs = x_grid(cfg, {0.5, 1, 2, 3, 5});
  const SpectralSummary& s = op.summary;
  Json mc = cfg.contains("mc") ? cfg.at("mc") : Json();
  std::string gen = mc.is_object() ? json_get<std::string>(mc, "generator", "gaussian") : "gaussian";
  if (gen != "gaussian" && gen != "laplace") throw ConfigError("config: unknown generator '" + gen + "'");
  TailConfig tc;
  tc.gamma = json_get<double>(cfg, "gamma", gen == "laplace" ? std::sqrt(3.0) : 1e3);
  tc.rho = json_get<double>(cfg, "rho", 0.5);
  if (!(tc.gamma > 0.0) || !(tc.rho > 0.0 && tc.rho < 1.0)) throw ConfigError("config: bad gamma/rho");

  std::optional<PhaseTransition> pt;
  try {
    pt = solve_xc(s, tc);
  } catch (const NoPhaseTransition&) {
  }

  std::vector<double> zg, zf, zm;
  for (double x : xs) {
    zg.push_back(gaussian_quantile(s, x));
    zf.push_back(pt ? fused_quantile(*pt, s, x) : std::nan(""));
    zm.push_back(linear_majorant(s, tc, x));
  }

  std::optional<std::uint64_t> seed;
  std::vector<CoverageRow> cov;
  std::vector<double> thr;
  if (mc.is_object()) {
    seed = need_seed(opt, "tail");
    long long reps = reps_of(mc, "reps", 1000000);
    // Draw xi with Var = V^2 (I or 2I) mapped by B^{1/2} V^{-1}.
    const double vscale = gen == "laplace" ? 1.0 / std::sqrt(2.0) : 1.0;
    Mat root = op.dense.size() > 0 ? sym_sqrt(op.dense) : Mat();
    Vec droot = op.diag.size() > 0 ? Vec(op.diag.cwiseSqrt()) : Vec();
    const Eigen::Index p = op.diag.size() > 0 ? op.diag.size() : op.dense.rows();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (gen == "gaussian")
        thr.push_back(zg[i]);
      else
        thr.push_back(pt ? zf[i] : zm[i]);
    }
    auto counts = mc_blocks(reps, xs.size(), *seed, 0x7a11, opt.threads,
                            [&](Rng& rng, long long count, std::vector<long long>& c) {
                              Vec xi(p);
                              for (long long r = 0; r < count; ++r) {
                                if (gen == "gaussian")
                                  xi = standard_normal(rng, p);
                                else
                                  for (Eigen::Index j = 0; j < p; ++j) xi(j) = unit_laplace(rng);
                                xi *= vscale;
                                double nrm = droot.size() > 0 ? droot.cwiseProduct(xi).norm()
                                                              : (root * xi).norm();
                                for (std::size_t i = 0; i < thr.size(); ++i)
                                  if (nrm > thr[i]) ++c[i];
                              }
                            });
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double nominal = (gen == "gaussian" ? 1.0 : 3.0) * std::exp(-xs[i]);
      cov.push_back(coverage_row(xs[i], nominal, counts[i], reps));
    }
  }

  Csv csv(opt, "tail.csv", config_hash(cfg, seed));
  csv.comment("dim_a=" + F(s.dim_a) + " v2=" + F(s.v2) + " lambda=" + F(s.lambda) +
              " gamma=" + F(tc.gamma) + " rho=" + F(tc.rho));
  if (pt)
    csv.comment("x_c=" + F(pt->x_c) + " z_c=" + F(pt->z_c) + " kappa=" + F(pt->kappa));
  else
    csv.comment("no phase transition for this gamma; fused column is nan");
  if (mc.is_object()) csv.comment("generator=" + gen);
  std::vector<std::string> head{"x", "z_gauss", "z_fused", "z_majorant", "regime"};
  if (!cov.empty())
    for (const char* h : {"threshold", "nominal", "violations", "reps", "empirical", "margin3sigma", "ok"})
      head.push_back(h);
  csv.row(head);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::string regime = !pt ? "none" : (xs[i] <= pt->x_c ? "gauss" : "subexp");
    std::vector<std::string> r{F(xs[i]), F(zg[i]), F(zf[i]), F(zm[i]), regime};
    if (!cov.empty()) {
      const auto& c = cov[i];
      for (auto v : {F(thr[i]), F(c.nominal), I(c.violations), I(c.reps), F(c.empirical),
                     F(c.margin3sigma), std::string(c.ok() ? "1" : "0")})
        r.push_back(v);
    }
    csv.row(r);
  }
  return 0;
}

int cmd_iid_sandwich(const Json& cfg, const RunOptions& opt) {
  std::uint64_t seed = need_seed(opt, "iid-sandwich");
  auto n = json_require<long long>(cfg, "n");
  auto p = json_require<Eigen::Index>(cfg, "p");
  if (n < 1 || p < 1) throw ConfigError("config: n and p must be >= 1");
  auto gen = json_get<std::string>(cfg, "generator", "rademacher");
  if (gen != "rademacher" && gen != "gaussian") throw ConfigError("config: unknown generator '" + gen + "'");
  Vec q = cfg.contains("q_diag") ? json_vec(cfg.at("q_diag"), "q_diag") : Vec(Vec::Ones(p));
  if (q.size() != p) throw ConfigError("config: q_diag has wrong size");
  auto xs = x_grid(cfg, {1, 2, 3});
  long long reps = reps_of(cfg, "reps", 100000);

  // Var(xi_1) = I, so B = Q Q^T.
  Vec bdiag = q.cwiseAbs2();
  SpectralSummary s = SpectralSummary::from_eigenvalues(bdiag);
  double qq = bdiag.maxCoeff();
  bool advisory = static_cast<double>(n) < 100.0 * s.dim_a * s.dim_a;

  const std::size_t k = xs.size();
  auto counts = mc_blocks(reps, 2 * k, seed, 0x11d5, opt.threads,
                          [&](Rng& rng, long long count, std::vector<long long>& c) {
                            std::binomial_distribution<long long> bin(n, 0.5);
                            const double sn = std::sqrt(static_cast<double>(n));
                            Vec xv(p);
                            for (long long r = 0; r < count; ++r) {
                              if (gen == "gaussian")
                                xv = standard_normal(rng, p);
                              else
                                for (Eigen::Index j = 0; j < p; ++j)
                                  xv(j) = static_cast<double>(2 * bin(rng) - n) / sn;
                              double dev = q.cwiseProduct(xv).squaredNorm() - s.dim_a;
                              for (std::size_t i = 0; i < k; ++i) {
                                double x = xs[i];
                                if (dev > 2.0 * std::sqrt(x * s.v2) + 2.0 * x * s.lambda) ++c[i];
                                if (dev < -2.0 * std::sqrt(x * s.v2)) ++c[k + i];
                              }
                            }
                          });

  Csv csv(opt, "iid_sandwich.csv", config_hash(cfg, seed));
  csv.comment("generator=" + gen + " n=" + I(n) + " p=" + I(p) + " dim_Q=" + F(s.dim_a));
  if (advisory) csv.comment("advisory: n >> dim_Q^2 not met; rows are flagged, not asserted");
  csv.row({"x", "side", "nominal", "violations", "reps", "empirical", "margin3sigma", "ok",
           "applicable", "advisory"});
  for (std::size_t i = 0; i < k; ++i) {
    double x = xs[i];
    CoverageRow up = coverage_row(x, std::exp(-x), counts[i], reps);
    CoverageRow lo = coverage_row(x, 2.0 * std::exp(-x), counts[k + i], reps);
    bool lo_app = x <= s.v2 / (4.0 * qq * qq);
    csv.row({F(x), "upper", F(up.nominal), I(up.violations), I(up.reps), F(up.empirical),
             F(up.margin3sigma), up.ok() ? "1" : "0", "1", advisory ? "1" : "0"});
    csv.row({F(x), "lower", F(lo.nominal), I(lo.violations), I(lo.reps), F(lo.empirical),
             F(lo.margin3sigma), lo.ok() ? "1" : "0", lo_app ? "1" : "0", advisory ? "1" : "0"});
  }
  return 0;
}

int cmd_fit(const Json& cfg, const RunOptions& opt) {
  auto model = build_model(json_require<Json>(cfg, "model"));
  const SlsModel& m = *model;
  QuadPenalty pen = build_penalty(cfg.contains("penalty") ? cfg.at("penalty") : Json(), m.dim());
  bool population = json_get<bool>(cfg, "population", false);
  std::optional<std::uint64_t> seed;
  Vec gz = Vec::Zero(m.dim());
  Json extra = Json::object();
  if (!population) {
    seed = need_seed(opt, "fit");
    Rng rng = make_stream(*seed, 0, 0xf17);
    if (auto* pr = dynamic_cast<const PrecisionModel*>(&m)) {
      Mat x = pr->sample(rng);
      gz = pr->grad_zeta(x);
      if (pen.kind == QuadPenalty::Kind::None)
        extra["closed_form"] = to_std(PrecisionModel::hvec((x.transpose() * x / pr->sample_size()).inverse()));
    } else {
      gz = m.draw_grad_zeta(rng);
    }
  }
  FitResult fit = fit_pmle(m, pen, gz);
  Json j;
  j["command"] = "fit";
  j["model"] = m.kind();
  j["penalty"] = pen.describe();
  j["population"] = population;
  j["iters"] = fit.iters;
  j["grad_norm"] = fit.grad_norm;
  j["objective"] = fit.objective;
  j["converged"] = fit.converged;
  j["upsilon_hat"] = std::vector<double>(fit.upsilon_hat.data(), fit.upsilon_hat.data() + fit.upsilon_hat.size());
  if (extra.contains("closed_form")) {
    auto* pr = dynamic_cast<const PrecisionModel*>(&m);
    Mat closed = PrecisionModel::unhvec(json_vec(extra["closed_form"], "closed_form"), pr->order());
    j["closed_form_frobenius"] = (PrecisionModel::unhvec(fit.upsilon_hat, pr->order()) - closed).norm();
  }
  std::string hash = config_hash(cfg, seed);
  write_json(opt, "fit.json", j, hash);
  Csv csv(opt, "fit.csv", hash);
  csv.row({"index", "upsilon_hat", "truth"});
  Vec t = m.truth();
  for (Eigen::Index i = 0; i < m.dim(); ++i) csv.row({I(i), F(fit.upsilon_hat(i)), F(t(i))});
  return 0;
}

namespace {

CertifierOptions certifier_options(const Json& cfg) {
  CertifierOptions o;
  o.x = json_get<double>(cfg, "x", 2.0);
  if (!(o.x > 0.0)) throw ConfigError("config: x must be > 0");
  o.fg_at_truth = json_get<bool>(cfg, "fg_at_truth", false);
  if (cfg.contains("C4")) o.C4 = json_require<double>(cfg, "C4");
  return o;
}

Json constants_json(const ConditionConstants& c) {
  return {{"delta0", c.delta0},   {"varkappa", c.varkappa}, {"varkappa_conservative", c.varkappa_conservative},
          {"tau3", c.tau3},       {"tau4", c.tau4},         {"c3", c.c3},
          {"c4", c.c4},           {"C_rho", c.C_rho},       {"C_psi3", c.C_psi3},
          {"C_psi4", c.C_psi4},   {"C_psi4_raw", c.C_psi4_raw}, {"variability_ok", c.variability_ok}};
}

Json certifier_json(const Certifier& cert) {
  return {{"kappa_d", cert.kappa_d()},
          {"r_d", cert.r_d()},
          {"dim_d", cert.dim_d()},
          {"b_d", cert.b_d()},
          {"radius", cert.radius()},
          {"x", cert.x()},
          {"fg_spectral_distance", cert.fg_spectral_distance()},
          {"v2_convention", cert.v2_convention()},
          {"var_le_v2", cert.var_le_v2()},
          {"constants", constants_json(cert.constants())}};
}

}  // namespace

int cmd_certify(const Json& cfg, const RunOptions& opt) {
  std::uint64_t seed = need_seed(opt, "certify");
  auto model = build_model(json_require<Json>(cfg, "model"));
  const SlsModel& m = *model;
  QuadPenalty pen = build_penalty(cfg.contains("penalty") ? cfg.at("penalty") : Json(), m.dim());
  long long reps = reps_of(cfg, "reps", 500);
  Certifier cert(m, pen, certifier_options(cfg));
  cert.set_constants(default_constants(cert, json_get<int>(cfg, "tighten_dirs", 0), seed));

  std::vector<ExpansionReport> rows(static_cast<std::size_t>(reps));
  parallel_for(rows.size(), opt.threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i, 0xce27);
    Vec gz = m.draw_grad_zeta(rng);
    rows[i] = cert.expansion(gz);
    if (!rows[i].converged) {
      std::ostringstream os;
      os << "certify: replicate " << i << " did not converge";
      throw NonConverged(os.str(), 0.0);
    }
  });

  long long bad = 0;
  std::string hash = config_hash(cfg, seed);
  {
    Csv csv(opt, "certify.csv", hash);
    csv.row({"rep", "norm_d_score", "on_omega", "fisher_lhs", "fisher_rhs", "wilks_lhs", "wilks_rhs",
             "three_s_residual", "four_s_residual", "four_s_bound", "all_hold"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      bool hold = r.on_omega && r.fisher_lhs <= r.fisher_rhs && r.wilks_lhs <= r.wilks_rhs;
      if (!hold) ++bad;
      csv.row({I(static_cast<long long>(i)), F(r.norm_d_score), r.on_omega ? "1" : "0", F(r.fisher_lhs),
               F(r.fisher_rhs), F(r.wilks_lhs), F(r.wilks_rhs), F(r.three_s_residual),
               F(r.four_s_residual), F(r.four_s_bound), hold ? "1" : "0"});
    }
  }
  CoverageRow cov = coverage_row(cert.x(), 3.0 * std::exp(-cert.x()), bad, reps);
  BiasReport b = cert.bias();
  bool pre = cert.preconditions_ok();
  Json j = certifier_json(cert);
  j["command"] = "certify";
  j["model"] = m.kind();
  j["penalty"] = pen.describe();
  j["bias_lhs"] = b.lhs;
  j["bias_rhs"] = b.rhs;
  j["bias_precondition_ok"] = b.precondition_ok;
  j["precondition_ok"] = pre;
  j["coverage"] = {{"x", cov.x},         {"nominal", cov.nominal},   {"violations", cov.violations},
                   {"reps", cov.reps},   {"empirical", cov.empirical}, {"margin3sigma", cov.margin3sigma},
                   {"ok", cov.ok()}};
  write_json(opt, "certify.json", j, hash);
  return pre ? 0 : 4;
}

int cmd_risk(const Json& cfg, const RunOptions& opt) {
  auto model = build_model(json_require<Json>(cfg, "model"));
  const SlsModel& m = *model;
  QuadPenalty pen = build_penalty(cfg.contains("penalty") ? cfg.at("penalty") : Json(), m.dim());
  int reps = json_get<int>(cfg, "reps", 0);
  if (reps < 0) throw ConfigError("config: reps must be >= 0");
  std::optional<std::uint64_t> seed;
  if (reps > 0) seed = need_seed(opt, "risk");
  Certifier cert(m, pen, certifier_options(cfg));
  cert.set_constants(default_constants(cert, json_get<int>(cfg, "tighten_dirs", 0), seed.value_or(0)));
  Mat q;
  if (cfg.contains("Q")) {
    const Json& jq = cfg.at("Q");
    if (jq.is_object() && jq.contains("coordinate")) {
      auto k = json_require<Eigen::Index>(jq, "coordinate");
      if (k < 0 || k >= m.dim()) throw ConfigError("config: Q coordinate out of range");
      q = Mat::Zero(1, m.dim());
      q(0, k) = 1.0;
    } else if (!(jq.is_string() && jq.get<std::string>() == "fg_sqrt")) {
      q = json_mat(jq, "Q");
    }
  }
  RiskReport r = cert.risk(q, reps, seed.value_or(0), opt.threads);
  Json j = certifier_json(cert);
  j["command"] = "risk";
  j["model"] = m.kind();
  j["penalty"] = pen.describe();
  j["dim_q"] = r.dim_q;
  j["bias_q"] = r.bias_q;
  j["R_Q"] = r.R_Q;
  j["alpha_Q"] = r.alpha_Q;
  j["sandwich_lo"] = r.sandwich_lo;
  j["sandwich_hi"] = r.sandwich_hi;
  j["C4"] = r.C4;
  j["binding"] = r.binding;
  j["mc_reps"] = r.mc_reps;
  if (reps > 0) {
    j["mc_risk"] = r.mc_risk;
    j["mc_se"] = r.mc_se;
    j["mc_in_sandwich"] = r.mc_risk >= r.sandwich_lo && r.mc_risk <= r.sandwich_hi;
  }
  write_json(opt, "risk.json", j, config_hash(cfg, seed));
  return r.binding ? 0 : 4;
}

int cmd_rate(const Json& cfg, const RunOptions& opt) {
  RateSpec spec;
  spec.s = json_get<double>(cfg, "s", 1.0);
  spec.beta = json_get<double>(cfg, "beta", 1.0);
  spec.C_w = json_get<double>(cfg, "C_w", 1.0);
  spec.eps = json_get<double>(cfg, "eps", 0.01);
  spec.p = json_get<Eigen::Index>(cfg, "p", 2000);
  std::vector<double> grid;
  if (cfg.contains("n_grid")) {
    grid = json_get<std::vector<double>>(cfg, "n_grid", {});
  } else {
    auto lr = json_get<std::vector<int>>(cfg, "log2_n", {10, 16});
    if (lr.size() != 2 || lr[1] < lr[0]) throw ConfigError("config: log2_n needs [lo, hi]");
    for (int e = lr[0]; e <= lr[1]; ++e) grid.push_back(std::ldexp(1.0, e));
  }
  if (grid.size() < 3) throw ConfigError("rate: need at least 3 grid points");
  RateTable t = rate_sweep(spec, grid, opt.threads);
  Csv csv(opt, "rate.csv", config_hash(cfg, std::nullopt));
  csv.comment("u*_j = c j^(-beta-1/2-eps) on the unit Sobolev sphere, eps=" + F(spec.eps));
  csv.row({"n", "J_star", "var_term", "bias_term", "risk"});
  for (const auto& r : t.rows) csv.row({F(r.n), I(r.J_star), F(r.var_term), F(r.bias_term), F(r.risk)});
  Json footer = {{"slope", t.slope},
                 {"slope_se", t.slope_se},
                 {"intercept", t.intercept},
                 {"expected_slope", -2.0 * spec.beta / (1.0 + 2.0 * spec.beta + 2.0 * spec.s)}};
  csv.comment(footer.dump());
  return 0;
}

int cmd_tensor(const Json& cfg, const RunOptions& opt) {
  std::uint64_t seed = need_seed(opt, "tensor");
  auto p = json_get<Eigen::Index>(cfg, "p", 30);
  auto count = json_get<Eigen::Index>(cfg, "count", p);
  if (p < 1 || count < 1) throw ConfigError("config: p and count must be >= 1");
  auto family = json_get<std::string>(cfg, "family", "diagonal");
  auto fseed = json_get<std::uint64_t>(cfg, "family_seed", 1);
  Rng frng = make_stream(fseed, 0, 0x7f);
  TensorFamily tf;
  if (family == "diagonal") {
    Mat d(p, count);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = u(frng) / std::sqrt(static_cast<double>(p));
    tf = TensorFamily::diagonal(d);
  } else if (family == "dense") {
    std::vector<Mat> ts;
    for (Eigen::Index i = 0; i < count; ++i) {
      Mat a(p, p);
      for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = standard_normal(frng, 1)(0);
      ts.push_back((a + a.transpose()) / (2.0 * p));
    }
    tf = TensorFamily::dense(ts);
  } else {
    throw ConfigError("config: unknown tensor family '" + family + "'");
  }
  tf.delta = tensor_delta(tf, json_get<int>(cfg, "n_dirs", 200), seed);
  TailConfig tc;
  tc.gamma = json_get<double>(cfg, "gamma", tf.delta > 0.0 ? 0.5 / tf.delta : 1.0);
  auto xs = x_grid(cfg, {1, 2});
  long long reps = reps_of(cfg, "reps", 100000);
  Mat q = Mat::Identity(count, count);
  Mat s2 = tensor_family_covariance(tf);
  SpectralSummary sb = SpectralSummary::from_matrix(tf.v_sq);
  double alpha_min = std::nan("");
  try {
    alpha_min = tensor_lower_min_alpha(sb, tf.delta);
  } catch (const AlphaTooSmall&) {
  }
  double alpha = json_get<double>(cfg, "alpha", std::isnan(alpha_min) ? std::nan("") : alpha_min);

  std::vector<double> upper, lower;
  for (double x : xs) {
    upper.push_back(tensor_upper_tail(tf, q, tc, x));
    double t = std::nan("");
    if (!std::isnan(alpha) && x <= sb.dim_a * sb.dim_a / (4.0 * sb.v2)) {
      try {
        t = tensor_lower_tail(tf, q, x, alpha);
      } catch (const AlphaTooSmall&) {
      }
    }
    lower.push_back(t);
  }
  const double factor = std::sqrt(1.0 - tf.delta * tc.gamma);
  Vec mean = tf.mean();
  const std::size_t k = xs.size();
  auto counts = mc_blocks(reps, 2 * k, seed, 0x7e5, opt.threads,
                          [&](Rng& rng, long long c, std::vector<long long>& out) {
                            for (long long r = 0; r < c; ++r) {
                              Vec dev = tf.evaluate(standard_normal(rng, p)) - mean;
                              double sq = dev.squaredNorm();
                              for (std::size_t i = 0; i < k; ++i) {
                                if (factor * std::sqrt(sq) > upper[i]) ++out[i];
                                if (!std::isnan(lower[i]) && sq < lower[i]) ++out[k + i];
                              }
                            }
                          });
  std::string hash = config_hash(cfg, seed);
  Csv csv(opt, "tensor.csv", hash);
  csv.comment("delta=" + F(tf.delta) + " gamma=" + F(tc.gamma) + " alpha=" + F(alpha));
  csv.row({"x", "side", "threshold", "nominal", "violations", "reps", "empirical", "margin3sigma", "ok"});
  for (std::size_t i = 0; i < k; ++i) {
    CoverageRow up = coverage_row(xs[i], 3.0 * std::exp(-xs[i]), counts[i], reps);
    csv.row({F(xs[i]), "upper", F(upper[i]), F(up.nominal), I(up.violations), I(up.reps), F(up.empirical),
             F(up.margin3sigma), up.ok() ? "1" : "0"});
    if (std::isnan(lower[i])) {
      csv.row({F(xs[i]), "lower", "nan", "nan", "0", I(reps), "nan", "nan", "nan"});
    } else {
      CoverageRow lo = coverage_row(xs[i], 2.0 * std::exp(-xs[i]), counts[k + i], reps);
      csv.row({F(xs[i]), "lower", F(lower[i]), F(lo.nominal), I(lo.violations), I(lo.reps),
               F(lo.empirical), F(lo.margin3sigma), lo.ok() ? "1" : "0"});
    }
  }
  Json j = {{"command", "tensor"},   {"delta", tf.delta}, {"gamma", tc.gamma},
            {"alpha", alpha},        {"alpha_min", alpha_min},
            {"trace_S2", s2.trace()}, {"dim_a", sb.dim_a}, {"v2", sb.v2}, {"lambda", sb.lambda}};
  write_json(opt, "tensor.json", j, hash);
  return 0;
}

int run_command(const std::string& cmd, const Json& cfg, const RunOptions& opt) {
  if (opt.threads < 1) throw ConfigError("--threads must be >= 1");
  if (cmd == "tail") return cmd_tail(cfg, opt);
  if (cmd == "iid-sandwich") return cmd_iid_sandwich(cfg, opt);
  if (cmd == "fit") return cmd_fit(cfg, opt);
  if (cmd == "certify") return cmd_certify(cfg, opt);
  if (cmd == "risk") return cmd_risk(cfg, opt);
  if (cmd == "rate") return cmd_rate(cfg, opt);
  if (cmd == "tensor") return cmd_tensor(cfg, opt);
  throw ConfigError("unknown command '" + cmd + "'");
}

}  // namespace sls
