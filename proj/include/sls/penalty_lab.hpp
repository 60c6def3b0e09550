#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sls/common.hpp"

namespace sls {

// Diagonal sequence-space model: Fisher spectrum N (nonincreasing),
// smoothness weights w (nondecreasing) and the true coefficients.
struct SequenceModel {
  Vec N;
  Vec w;
  Vec upsilon_star;
  bool sobolev = false;
  double s = 0.0;
  double beta = 0.0;
  double C_w = 1.0;
  double N1 = 0.0;

  Eigen::Index size() const { return N.size(); }
  void validate() const;

  // N_j = N1 j^{-2s}, w_j^2 = C_w j^{2 beta}, u*_j = c j^{-beta-1/2-eps}
  // with c putting u* on the unit Sobolev sphere.
  static SequenceModel synthetic(double s, double beta, double C_w, double N1,
                                 Eigen::Index p, double eps = 0.01);
};

struct RidgeRisk {
  Eigen::Index J = 0;        // max{j : N_j >= g^2}, 0 if empty
  double var_bound = 0.0;
  double bias_bound = 0.0;   // 1 / w_{max(J,1)}^2
  double bias_bound_max = 0.0;  // max_j w_j^{-2} / (N_j/g^2 + 1)^2
  double exact_var = 0.0;
  double exact_bias = 0.0;
};
RidgeRisk ridge_risk_bound(const SequenceModel& m, double g2);

struct CutoffRisk {
  double var_term = 0.0;
  double bias_term = 0.0;
  double risk() const { return var_term + bias_term; }
};
CutoffRisk cutoff_risk(const SequenceModel& m, Eigen::Index J);

struct OracleCutoff {
  Eigen::Index J_star = 0;
  double risk = 0.0;
  CutoffRisk terms;
};
OracleCutoff oracle_cutoff(const SequenceModel& m);

// Smallest C1, C2 with sum_{j<=J} 1/N_j <= C1 J/N_J and
// sum_{j>J} N_j <= C2 J N_J for every J in 1..p.
struct RateConstants {
  double C1 = 0.0;
  double C2 = 0.0;
};
RateConstants empirical_rate_constants(const SequenceModel& m);

bool roughness_condition(const Vec& bsq, double C_B);
// Smallest C_B for which roughness_condition holds (0 when p = 1).
double roughness_min_cb(const Vec& bsq);

struct RoughnessDim {
  double bound = 0.0;   // (1 + C_B) M_G
  double exact = 0.0;   // sum (1 + b_j^2)^{-2}
  Eigen::Index M_g = 0;
  double C_B = 0.0;
  bool degenerate = false;  // M_G = 0
};
RoughnessDim roughness_effective_dim(const Vec& bsq);
RoughnessDim roughness_effective_dim(const Vec& bsq, double C_B);

struct TauOracle {
  double tau_star = 0.0;
  double J_tau = 0.0;
  double risk = 0.0;
};
double tau_family_risk(double n, double s0, double C1, double tau);
TauOracle tau_family_oracle(double n, double s0, double C1);

struct RateSpec {
  double s = 1.0;
  double beta = 1.0;
  double C_w = 1.0;
  double eps = 0.01;
  Eigen::Index p = 2000;
};

struct RateRow {
  double n = 0.0;
  Eigen::Index J_star = 0;
  double var_term = 0.0;
  double bias_term = 0.0;
  double risk = 0.0;
};

struct RateTable {
  std::vector<RateRow> rows;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

// N1 = n for every grid point; J by oracle_cutoff; slope of log risk on log n.
RateTable rate_sweep(const RateSpec& spec, const std::vector<double>& n_grid,
                     int threads = 1);

}  // namespace sls
