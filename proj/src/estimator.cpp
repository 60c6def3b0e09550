#include "sls/estimator.hpp"

#include <cmath>
#include <sstream>

namespace sls {

QuadPenalty QuadPenalty::from_dense(Mat g2m) {
  QuadPenalty p;
  p.kind = Kind::Dense;
  if (g2m.rows() != g2m.cols()) throw DomainError("QuadPenalty: G^2 must be square");
  if (g2m.size() > 0 && min_eigenvalue(g2m) < -1e-12 * std::max(1.0, g2m.cwiseAbs().maxCoeff()))
    throw DomainError("QuadPenalty: G^2 must be positive semidefinite");
  p.dense = 0.5 * (g2m + g2m.transpose());
  return p;
}

QuadPenalty QuadPenalty::from_diagonal(Vec d) {
  for (Eigen::Index j = 0; j < d.size(); ++j)
    if (!(d(j) >= 0.0)) throw DomainError("QuadPenalty: diagonal entries must be >= 0");
  QuadPenalty p;
  p.kind = Kind::Diagonal;
  p.diag = std::move(d);
  return p;
}

QuadPenalty QuadPenalty::ridge(double g2) {
  if (!(g2 >= 0.0)) throw DomainError("QuadPenalty: ridge g^2 must be >= 0");
  QuadPenalty p;
  p.kind = Kind::Ridge;
  p.g2 = g2;
  return p;
}

QuadPenalty QuadPenalty::projection(std::vector<Eigen::Index> idx) {
  QuadPenalty p;
  p.kind = Kind::Projection;
  p.index = std::move(idx);
  return p;
}

QuadPenalty QuadPenalty::cutoff(Eigen::Index j) {
  if (j < 0) throw DomainError("QuadPenalty: cut-off index must be >= 0");
  QuadPenalty p;
  p.kind = Kind::Cutoff;
  p.cutoff_j = j;
  return p;
}

Mat QuadPenalty::matrix(Eigen::Index p) const {
  switch (kind) {
    case Kind::Dense:
      if (dense.rows() != p) throw DomainError("QuadPenalty: dense G^2 has wrong size");
      return dense;
    case Kind::Diagonal:
      if (diag.size() != p) throw DomainError("QuadPenalty: diagonal has wrong size");
      return diag.asDiagonal();
    case Kind::Ridge:
      return g2 * Mat::Identity(p, p);
    default:
      return Mat::Zero(p, p);
  }
}

std::vector<Eigen::Index> QuadPenalty::active(Eigen::Index p) const {
  std::vector<Eigen::Index> a;
  if (kind == Kind::Projection) {
    for (auto i : index) {
      if (i < 0 || i >= p) throw DomainError("QuadPenalty: projection index out of range");
      a.push_back(i);
    }
    return a;
  }
  if (kind == Kind::Cutoff) {
    if (cutoff_j > p) throw DomainError("QuadPenalty: cut-off index exceeds dimension");
    for (Eigen::Index i = 0; i < cutoff_j; ++i) a.push_back(i);
    return a;
  }
  for (Eigen::Index i = 0; i < p; ++i) a.push_back(i);
  return a;
}

std::string QuadPenalty::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::None: os << "none"; break;
    case Kind::Dense: os << "dense"; break;
    case Kind::Diagonal: os << "diagonal"; break;
    case Kind::Ridge: os << "ridge(" << g2 << ")"; break;
    case Kind::Projection: os << "projection(" << index.size() << ")"; break;
    case Kind::Cutoff: os << "cutoff(" << cutoff_j << ")"; break;
  }
  return os.str();
}

double penalized_objective(const SlsModel& m, const QuadPenalty& pen,
                           const Vec& grad_zeta, const Vec& u) {
  if (!m.in_domain(u)) return std::numeric_limits<double>::infinity();
  Mat g2 = pen.matrix(m.dim());
  return m.value(u) + grad_zeta.dot(u) + 0.5 * u.dot(g2 * u);
}

namespace {

Mat selector(Eigen::Index p, const std::vector<Eigen::Index>& act) {
  Mat e = Mat::Zero(p, static_cast<Eigen::Index>(act.size()));
  for (std::size_t k = 0; k < act.size(); ++k) e(act[k], static_cast<Eigen::Index>(k)) = 1.0;
  return e;
}

}  // namespace

FitResult fit_pmle(const SlsModel& m, const QuadPenalty& pen,
                   const Vec& grad_zeta, const FitOptions& opts) {
  const Eigen::Index p = m.dim();
  if (grad_zeta.size() != p) throw DomainError("fit_pmle: grad_zeta has wrong size");
  const Mat g2 = pen.matrix(p);
  const auto act = pen.active(p);
  const Mat e = selector(p, act);
  const Eigen::Index k = e.cols();

  Vec u = m.start();
  if (pen.is_restriction()) u = e * (e.transpose() * u);

  Vec gauge = m.gauge();
  bool use_gauge = gauge.size() == p && (g2 * gauge).norm() <= 1e-12 * gauge.norm() &&
                   !pen.is_restriction();
  Vec gauge_r;
  if (use_gauge) {
    u -= (gauge.dot(u) / gauge.squaredNorm()) * gauge;
    gauge_r = gauge / gauge.norm();
  }
  if (!m.in_domain(u)) throw DomainError("fit_pmle: starting point outside the model domain");

  auto objective = [&](const Vec& v) { return penalized_objective(m, pen, grad_zeta, v); };

  FitResult res;
  double phi = objective(u);
  for (int it = 0;; ++it) {
    Vec grad = m.gradient(u) + grad_zeta + g2 * u;
    Vec gr = e.transpose() * grad;
    double gnorm = gr.norm();
    res.iters = it;
    res.grad_norm = gnorm;
    if (gnorm <= opts.tol_scale * (1.0 + std::abs(phi))) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    Mat hr = e.transpose() * (m.hessian(u) + g2) * e;
    if (use_gauge) hr += (hr.trace() / static_cast<double>(k)) * gauge_r * gauge_r.transpose();
    Eigen::LLT<Mat> llt(hr);
    if (llt.info() != Eigen::Success) {
      double shift = 1e-10 * std::max(hr.trace(), 1e-300) / static_cast<double>(k);
      for (int s = 0; s < 30; ++s, shift *= 10.0) {
        llt.compute(hr + shift * Mat::Identity(k, k));
        if (llt.info() == Eigen::Success) break;
      }
    }
    Vec d = llt.solve(-gr);
    double slope = gr.dot(d);
    if (!(slope < 0.0)) d = -gr, slope = -gr.squaredNorm();

    double t = 1.0;
    bool accepted = false;
    // Below this the Armijo test only compares rounding noise and can accept
    // steps that leave u unchanged.
    const bool tiny = -slope < 1e-12 * (1.0 + std::abs(phi));
    for (int ls = 0; ls < 60 && !tiny; ++ls, t *= 0.5) {
      Vec cand = u + t * (e * d);
      if (!m.in_domain(cand)) continue;
      double pc = objective(cand);
      if (pc <= phi + opts.armijo * t * slope) {
        u = cand;
        phi = pc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Near the optimum the decrease can drop below the rounding of the
      // objective; fall back to a step that shrinks the reduced gradient.
      for (t = 1.0; t > 1e-6 && !accepted; t *= 0.5) {
        Vec cand = u + t * (e * d);
        if (!m.in_domain(cand)) continue;
        Vec gc = e.transpose() * (m.gradient(cand) + grad_zeta + g2 * cand);
        if (gc.norm() < gnorm) {
          u = cand;
          phi = objective(cand);
          accepted = true;
        }
      }
    }
    if (!accepted) break;
  }

  res.upsilon_hat = u;
  res.objective = phi;
  res.hess_g = m.hessian(u) + g2;
  if (!res.converged && opts.throw_on_failure) {
    std::ostringstream os;
    os << "fit_pmle: no convergence after " << res.iters << " iterations, |grad| = "
       << res.grad_norm;
    throw NonConverged(os.str(), res.grad_norm);
  }
  return res;
}

FitResult fit_population(const SlsModel& m, const QuadPenalty& pen,
                         const FitOptions& opts) {
  return fit_pmle(m, pen, Vec::Zero(m.dim()), opts);
}

EffectiveDimension effective_dimension(const Mat& f, const QuadPenalty& pen,
                                       const Mat& v2) {
  const Eigen::Index p = f.rows();
  const Mat e = selector(p, pen.active(p));
  Mat fg = e.transpose() * (f + pen.matrix(p)) * e;
  Eigen::LLT<Mat> llt(fg);
  if (llt.info() != Eigen::Success) throw DomainError("effective_dimension: F_G is singular");
  const Mat& rhs = v2.size() > 0 ? v2 : f;
  EffectiveDimension out;
  out.dim_g = llt.solve(e.transpose() * rhs * e).trace();
  return out;
}

Certifier::Certifier(const SlsModel& m, QuadPenalty pen, CertifierOptions opts)
    : m_(m), pen_(std::move(pen)), opts_(std::move(opts)) {
  if (pen_.is_restriction())
    throw Unsupported("Certifier: projection penalties are handled by effective_dimension only");
  const Eigen::Index p = m_.dim();
  g2_ = pen_.matrix(p);
  ups_ = m_.truth();
  ups_g_ = fit_population(m_, pen_, opts_.fit).upsilon_hat;

  Mat f_g = m_.hessian(ups_g_) + g2_;
  Mat f_t = m_.hessian(ups_) + g2_;
  fg_dist_ = spectral_norm(f_g - f_t);
  fg_ = opts_.fg_at_truth ? f_t : f_g;
  fg_truth_ = f_t;
  fg_llt_.compute(fg_);
  fg_truth_llt_.compute(fg_truth_);
  if (fg_llt_.info() != Eigen::Success || fg_truth_llt_.info() != Eigen::Success)
    throw DomainError("Certifier: F_G is singular");

  d_ = opts_.d.size() > 0 ? opts_.d : sym_sqrt(fg_);
  if (d_.rows() != p || d_.cols() != p) throw DomainError("Certifier: D has wrong size");
  d_inv_ = d_.inverse();
  Mat fis = sym_inv_sqrt(fg_);
  kappa_d_ = std::sqrt(std::max(0.0, max_eigenvalue(fis * d_ * d_.transpose() * fis)));

  Mat var = m_.grad_zeta_cov();
  if (opts_.v2.size() > 0) {
    v2_ = opts_.v2;
    v2_conv_ = "V2 supplied";
  } else if (m_.kind() == "logistic") {
    v2_ = d_ * d_.transpose();
    v2_conv_ = "V2 = D^2";
  } else if (m_.kind() == "logdensity") {
    v2_ = m_.default_v2();
    v2_conv_ = "V2 = 2 n hess phi(u*)";
  } else {
    v2_ = m_.default_v2();
    v2_conv_ = "V2 = Var(grad zeta)";
  }
  double scale = std::max(1.0, v2_.cwiseAbs().maxCoeff());
  var_le_v2_ = min_eigenvalue(v2_ - var) >= -1e-10 * scale;

  Mat a = d_ * fg_llt_.solve(Mat::Identity(p, p));
  Mat bd = a * v2_ * a.transpose();
  SpectralSummary s = SpectralSummary::from_matrix(bd);
  dim_d_ = s.dim_a;
  r_d_ = gaussian_quantile(s, opts_.x);
  m_g_ = g2_ * ups_;
  b_d_ = (d_ * fg_llt_.solve(m_g_)).norm();
}

bool Certifier::preconditions_ok() const {
  return c_.tau3 * kappa_d_ * kappa_d_ * std::max(r_d_, b_d_) < 4.0 / 9.0;
}

BiasReport Certifier::bias() const {
  BiasReport b;
  b.bias_vec = ups_g_ - ups_;
  b.lhs = (d_inv_ * (fg_ * b.bias_vec + m_g_)).norm();
  b.rhs = 0.75 * c_.tau3 * b_d_ * b_d_;
  b.b_d = b_d_;
  b.precondition_ok = c_.tau3 * kappa_d_ * kappa_d_ * b_d_ < 4.0 / 9.0;
  return b;
}

FourthOrder Certifier::fourth_order(const Vec& grad_zeta) const {
  FourthOrder out;
  Vec u = fg_llt_.solve(grad_zeta);
  out.phi_g = u + fg_llt_.solve(0.5 * m_.third_contract(ups_g_, u));
  Vec mg = fg_truth_llt_.solve(m_g_);
  out.mu_g = mg + fg_truth_llt_.solve(0.5 * m_.third_contract(ups_, mg));
  return out;
}

ExpansionReport Certifier::expansion(const Vec& grad_zeta) const {
  FitOptions fo = opts_.fit;
  fo.throw_on_failure = false;
  FitResult fit = fit_pmle(m_, pen_, grad_zeta, fo);
  const Vec& ut = fit.upsilon_hat;

  ExpansionReport r;
  r.converged = fit.converged;
  Vec u = fg_llt_.solve(grad_zeta);
  double nd = (d_ * u).norm();
  r.norm_d_score = nd;
  r.r_d = r_d_;
  r.on_omega = nd <= r_d_;
  r.fisher_lhs = (d_inv_ * (fg_ * (ut - ups_g_) + grad_zeta)).norm();
  r.fisher_rhs = 0.75 * c_.tau3 * nd * nd;
  double lt = penalized_objective(m_, pen_, grad_zeta, ut);
  double lg = penalized_objective(m_, pen_, grad_zeta, ups_g_);
  r.wilks_lhs = std::abs(2.0 * (lt - lg) + grad_zeta.dot(u));
  r.wilks_rhs = 0.5 * c_.tau3 * nd * nd * nd;

  BiasReport b = bias();
  r.bias_lhs = b.lhs;
  r.bias_rhs = b.rhs;

  FourthOrder f4 = fourth_order(grad_zeta);
  r.four_s_residual = (d_inv_ * fg_ * (ut - ups_ + f4.phi_g + f4.mu_g)).norm();
  r.four_s_bound = (0.5 * c_.tau4 + kappa_d_ * kappa_d_ * c_.tau3 * c_.tau3) *
                   (nd * nd * nd + b_d_ * b_d_ * b_d_);
  r.three_s_residual = (d_inv_ * fg_ * (ut - ups_ + u + fg_llt_.solve(m_g_))).norm();
  r.precondition_ok = c_.tau3 * kappa_d_ * kappa_d_ * r_d_ < 4.0 / 9.0;
  return r;
}

RiskReport Certifier::risk(const Mat& q_in, int mc_reps, std::uint64_t seed,
                           int threads) const {
  const Eigen::Index p = m_.dim();
  Mat q = q_in.size() > 0 ? q_in : sym_sqrt(fg_);
  if (q.cols() != p) throw DomainError("risk_certificate: Q has wrong number of columns");
  Mat a = q * fg_llt_.solve(Mat::Identity(p, p));

  RiskReport r;
  Mat var = m_.grad_zeta_cov();
  r.dim_q = (a * var * a.transpose()).trace();
  r.bias_q = (a * m_g_).squaredNorm();
  r.R_Q = r.dim_q + r.bias_q;
  r.dim_d = dim_d_;
  r.b_d = b_d_;
  r.r_d = r_d_;
  r.C4 = std::isnan(opts_.C4) ? r_d_ / std::sqrt(dim_d_) : opts_.C4;
  double qfd = spectral_norm(a * d_);
  r.alpha_Q = qfd * 0.75 * c_.tau3 * (r.C4 * dim_d_ + b_d_ * b_d_) / std::sqrt(r.R_Q);
  r.sandwich_lo = r.alpha_Q < 1.0 ? (1.0 - r.alpha_Q) * (1.0 - r.alpha_Q) * r.R_Q : 0.0;
  r.sandwich_hi = (1.0 + r.alpha_Q) * (1.0 + r.alpha_Q) * r.R_Q;
  r.binding = preconditions_ok();

  if (mc_reps > 0) {
    std::vector<double> loss(static_cast<std::size_t>(mc_reps));
    FitOptions fo = opts_.fit;
    fo.throw_on_failure = false;
    parallel_for(loss.size(), threads, [&](std::size_t i) {
      Rng rng = make_stream(seed, i, 0x5249534b);
      Vec gz = m_.draw_grad_zeta(rng);
      FitResult fit = fit_pmle(m_, pen_, gz, fo);
      if (!fit.converged) {
        std::ostringstream os;
        os << "risk_certificate: replicate " << i << " did not converge";
        throw NonConverged(os.str(), fit.grad_norm);
      }
      loss[i] = (q * (fit.upsilon_hat - ups_)).squaredNorm();
    });
    KahanSum s, s2;
    for (double v : loss) s.add(v);
    double mean = s.value() / mc_reps;
    for (double v : loss) s2.add((v - mean) * (v - mean));
    r.mc_reps = mc_reps;
    r.mc_risk = mean;
    r.mc_se = mc_reps > 1 ? std::sqrt(s2.value() / (mc_reps - 1) / mc_reps) : 0.0;
  }
  return r;
}

namespace {

// Randomised sup-estimate of |<f'''(u), z^3>| / ||D z||^3 and the quartic
// analogue over u in the D-ball of radius r around the population target.
ConditionConstants sampled_constants(const Certifier& cert, int dirs,
                                     std::uint64_t seed) {
  const SlsModel& m = cert.model();
  const Eigen::Index p = m.dim();
  Mat dinv = cert.D().inverse();
  Rng rng = make_stream(seed, 0, 0x7433);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ConditionConstants c;
  double r = cert.radius();
  for (int k = 0; k < dirs; ++k) {
    Vec w = standard_normal(rng, p);
    Vec u = cert.upsilon_star_g();
    if (k > 0) u += dinv * (r * std::pow(unif(rng), 1.0 / p) * w / w.norm());
    if (!m.in_domain(u)) continue;
    Vec v = standard_normal(rng, p);
    Vec z = dinv * (v / v.norm());
    c.tau3 = std::max(c.tau3, std::abs(m.third(u, z)));
    c.tau4 = std::max(c.tau4, std::abs(m.fourth(u, z)));
  }
  c.varkappa = cert.kappa_d();
  c.varkappa_conservative = c.varkappa;
  return c;
}

}  // namespace

ConditionConstants default_constants(const Certifier& cert, int tighten_dirs,
                                     std::uint64_t seed) {
  const SlsModel& m = cert.model();
  if (auto* lg = dynamic_cast<const LogisticModel*>(&m))
    return lg->conditions(cert.D(), cert.radius(), cert.upsilon_star_g(), tighten_dirs, seed);
  if (auto* pr = dynamic_cast<const PrecisionModel*>(&m)) return pr->constants(cert.radius());
  if (auto* ld = dynamic_cast<const LogDensityModel*>(&m))
    return ld->condition_constants(cert.radius() / std::sqrt(ld->sample_size()),
                                   std::max(tighten_dirs, 200), seed);
  if (dynamic_cast<const QuadraticModel*>(&m)) return ConditionConstants{};
  return sampled_constants(cert, std::max(tighten_dirs, 2000), seed);
}

ExpansionReport expansion_certificate(const SlsModel& m, const QuadPenalty& pen,
                                      const Vec& grad_zeta,
                                      const ConditionConstants& c,
                                      const Mat& d, double x) {
  CertifierOptions o;
  o.x = x;
  o.d = d;
  Certifier cert(m, pen, o);
  cert.set_constants(c);
  ExpansionReport r = cert.expansion(grad_zeta);
  if (!r.precondition_ok)
    throw CertificateInapplicable("expansion_certificate: tau3 kappa^2 r_D < 4/9 violated");
  return r;
}

BiasReport bias_expansion(const SlsModel& m, const QuadPenalty& pen,
                          const ConditionConstants& c, const Mat& d) {
  CertifierOptions o;
  o.d = d;
  Certifier cert(m, pen, o);
  cert.set_constants(c);
  return cert.bias();
}

FourthOrder fourth_order_correction(const SlsModel& m, const QuadPenalty& pen,
                                    const Vec& grad_zeta) {
  Certifier cert(m, pen);
  return cert.fourth_order(grad_zeta);
}

RiskReport risk_certificate(const SlsModel& m, const QuadPenalty& pen,
                            const Mat& q, double x, int mc_reps,
                            std::uint64_t seed, int threads) {
  CertifierOptions o;
  o.x = x;
  Certifier cert(m, pen, o);
  cert.set_constants(default_constants(cert, 0, seed));
  return cert.risk(q, mc_reps, seed, threads);
}

}  // namespace sls
