#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sls/common.hpp"
#include "sls/models.hpp"
#include "sls/tailbounds.hpp"

namespace sls {

// pen(u) = ||G u||^2 / 2. Projection and cut-off penalties are realised as a
// restriction of the parameter to the active coordinates.
struct QuadPenalty {
  enum class Kind { None, Dense, Diagonal, Ridge, Projection, Cutoff };

  Kind kind = Kind::None;
  Mat dense;
  Vec diag;
  double g2 = 0.0;
  std::vector<Eigen::Index> index;
  Eigen::Index cutoff_j = 0;

  static QuadPenalty none() { return {}; }
  static QuadPenalty from_dense(Mat g2m);
  static QuadPenalty from_diagonal(Vec d);
  static QuadPenalty ridge(double g2);
  static QuadPenalty projection(std::vector<Eigen::Index> idx);
  static QuadPenalty cutoff(Eigen::Index j);

  bool is_restriction() const {
    return kind == Kind::Projection || kind == Kind::Cutoff;
  }
  Mat matrix(Eigen::Index p) const;
  std::vector<Eigen::Index> active(Eigen::Index p) const;
  std::string describe() const;
};

struct FitOptions {
  int max_iter = 200;
  double tol_scale = 1e-9;
  double armijo = 1e-4;
  bool throw_on_failure = true;
};

struct FitResult {
  Vec upsilon_hat;
  int iters = 0;
  double grad_norm = 0.0;
  double objective = 0.0;
  Mat hess_g;
  bool converged = false;
};

// L_G(u) = f(u) + <grad_zeta, u> + ||G u||^2/2 (up to a data constant).
double penalized_objective(const SlsModel& m, const QuadPenalty& pen,
                           const Vec& grad_zeta, const Vec& u);

FitResult fit_pmle(const SlsModel& m, const QuadPenalty& pen,
                   const Vec& grad_zeta, const FitOptions& opts = {});
FitResult fit_population(const SlsModel& m, const QuadPenalty& pen,
                         const FitOptions& opts = {});

struct EffectiveDimension {
  double dim_g = 0.0;
  double r(double x) const { return std::sqrt(dim_g) + std::sqrt(2.0 * x); }
};

// tr(F_G^{-1} F), or tr(F_G^{-1} V2) when V2 is given.
EffectiveDimension effective_dimension(const Mat& f, const QuadPenalty& pen,
                                       const Mat& v2 = Mat());

struct ExpansionReport {
  double fisher_lhs = 0.0;
  double fisher_rhs = 0.0;
  double wilks_lhs = 0.0;
  double wilks_rhs = 0.0;
  double bias_lhs = 0.0;
  double bias_rhs = 0.0;
  bool on_omega = false;
  double norm_d_score = 0.0;  // ||D F_G^{-1} grad_zeta||
  double r_d = 0.0;
  double four_s_residual = 0.0;
  double four_s_bound = 0.0;
  double three_s_residual = 0.0;
  bool precondition_ok = false;
  bool converged = false;
};

struct BiasReport {
  Vec bias_vec;
  double lhs = 0.0;
  double rhs = 0.0;
  double b_d = 0.0;
  bool precondition_ok = false;
};

struct FourthOrder {
  Vec phi_g;
  Vec mu_g;
};

struct RiskReport {
  double dim_q = 0.0;
  double bias_q = 0.0;
  double R_Q = 0.0;
  double alpha_Q = 0.0;
  double sandwich_lo = 0.0;
  double sandwich_hi = 0.0;
  double dim_d = 0.0;
  double b_d = 0.0;
  double r_d = 0.0;
  double C4 = 0.0;
  bool binding = false;
  int mc_reps = 0;
  double mc_risk = std::numeric_limits<double>::quiet_NaN();
  double mc_se = std::numeric_limits<double>::quiet_NaN();
};

struct CertifierOptions {
  double x = 2.0;
  Mat d;                  // default F_G^{1/2}
  Mat v2;                 // default per model (see v2_convention)
  bool fg_at_truth = false;
  double C4 = std::numeric_limits<double>::quiet_NaN();  // default r_D/sqrt(dim_D)
  FitOptions fit;
};

// Population targets and all deterministic pieces shared by the Fisher,
// Wilks, bias, 4S and risk statements for one (model, penalty, D, x).
class Certifier {
 public:
  Certifier(const SlsModel& m, QuadPenalty pen, CertifierOptions opts = {});

  void set_constants(const ConditionConstants& c) { c_ = c; }
  const ConditionConstants& constants() const { return c_; }

  ExpansionReport expansion(const Vec& grad_zeta) const;
  BiasReport bias() const;
  FourthOrder fourth_order(const Vec& grad_zeta) const;
  RiskReport risk(const Mat& q, int mc_reps = 0, std::uint64_t seed = 0,
                  int threads = 1) const;

  // Radius used for the condition constants: (3/2) max(r_D, b_D).
  double radius() const { return 1.5 * std::max(r_d_, b_d_); }
  bool preconditions_ok() const;

  const SlsModel& model() const { return m_; }
  const QuadPenalty& penalty() const { return pen_; }
  const Vec& upsilon_star_g() const { return ups_g_; }
  const Mat& F_G() const { return fg_; }
  const Mat& D() const { return d_; }
  const Mat& V2() const { return v2_; }
  const Mat& G2() const { return g2_; }
  double fg_spectral_distance() const { return fg_dist_; }
  double kappa_d() const { return kappa_d_; }
  double r_d() const { return r_d_; }
  double dim_d() const { return dim_d_; }
  double b_d() const { return b_d_; }
  double x() const { return opts_.x; }
  bool var_le_v2() const { return var_le_v2_; }
  const std::string& v2_convention() const { return v2_conv_; }

 private:
  const SlsModel& m_;
  QuadPenalty pen_;
  CertifierOptions opts_;
  ConditionConstants c_;
  Mat g2_;
  Vec ups_;
  Vec ups_g_;
  Mat fg_;
  Mat fg_truth_;
  Eigen::LLT<Mat> fg_llt_;
  Eigen::LLT<Mat> fg_truth_llt_;
  Mat d_;
  Mat d_inv_;
  Mat v2_;
  Vec m_g_;
  double fg_dist_ = 0.0;
  double kappa_d_ = 1.0;
  double r_d_ = 0.0;
  double dim_d_ = 0.0;
  double b_d_ = 0.0;
  bool var_le_v2_ = true;
  std::string v2_conv_;
};

// Model-specific condition constants at the radius the certifier needs.
ConditionConstants default_constants(const Certifier& cert,
                                     int tighten_dirs = 0,
                                     std::uint64_t seed = 0);

// Free-function forms.
ExpansionReport expansion_certificate(const SlsModel& m, const QuadPenalty& pen,
                                      const Vec& grad_zeta,
                                      const ConditionConstants& c,
                                      const Mat& d, double x);
BiasReport bias_expansion(const SlsModel& m, const QuadPenalty& pen,
                          const ConditionConstants& c, const Mat& d);
FourthOrder fourth_order_correction(const SlsModel& m, const QuadPenalty& pen,
                                    const Vec& grad_zeta);
RiskReport risk_certificate(const SlsModel& m, const QuadPenalty& pen,
                            const Mat& q, double x, int mc_reps,
                            std::uint64_t seed, int threads = 1);

}  // namespace sls
