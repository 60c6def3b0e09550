// Finite-difference oracles shared by the unit tests and the acceptance run.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "sls/models.hpp"

namespace oracle {

using sls::Mat;
using sls::Vec;

inline double rel(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double rel(const Vec& a, const Vec& b, double floor = 1e-12) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

inline double rel(const Mat& a, const Mat& b, double floor = 1e-12) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

// Central difference of f along each coordinate.
inline Vec fd_gradient(const sls::SlsModel& m, const Vec& u) {
  double h = 1e-5 * (1.0 + u.norm());
  Vec g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    Vec a = u, b = u;
    a(i) += h;
    b(i) -= h;
    g(i) = (m.value(a) - m.value(b)) / (2 * h);
  }
  return g;
}

inline Mat fd_hessian(const sls::SlsModel& m, const Vec& u) {
  double h = 1e-5 * (1.0 + u.norm());
  Mat hm(u.size(), u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    Vec a = u, b = u;
    a(i) += h;
    b(i) -= h;
    hm.col(i) = (m.gradient(a) - m.gradient(b)) / (2 * h);
  }
  return 0.5 * (hm + hm.transpose());
}

inline double quad(const sls::SlsModel& m, const Vec& u, const Vec& z) { return z.dot(m.hessian(u) * z); }

// d/dt z^T H(u + t z) z.
inline double fd_third(const sls::SlsModel& m, const Vec& u, const Vec& z) {
  double h = 1e-4;
  return (quad(m, u + h * z, z) - quad(m, u - h * z, z)) / (2 * h);
}

// d^2/dt^2 z^T H(u + t z) z, fourth-order accurate stencil.
inline double fd_fourth(const sls::SlsModel& m, const Vec& u, const Vec& z) {
  double h = 2e-3;
  double q2p = quad(m, u + 2 * h * z, z), qp = quad(m, u + h * z, z), q0 = quad(m, u, z);
  double qm = quad(m, u - h * z, z), q2m = quad(m, u - 2 * h * z, z);
  return (-q2p + 16 * qp - 30 * q0 + 16 * qm - q2m) / (12 * h * h);
}

// d/dt z^T H(u + t w) z.
inline double fd_contract(const sls::SlsModel& m, const Vec& u, const Vec& w, const Vec& z) {
  double h = 1e-4;
  return (quad(m, u + h * w, z) - quad(m, u - h * w, z)) / (2 * h);
}

struct DerivErrors {
  double grad = 0, hess = 0, third = 0, fourth = 0, contract = 0;
};

// Worst relative errors over `points` random points u = centre + spread*N(0,I)
// and random unit directions.
inline DerivErrors check_derivatives(const sls::SlsModel& m, const Vec& centre, double spread,
                                     int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  auto rnd = [&](Eigen::Index k) {
    Vec v(k);
    for (Eigen::Index i = 0; i < k; ++i) v(i) = n(rng);
    return v;
  };
  DerivErrors e;
  const Eigen::Index p = m.dim();
  for (int t = 0; t < points; ++t) {
    Vec u = centre + spread * rnd(p);
    if (!m.in_domain(u)) {
      --t;
      continue;
    }
    Vec z = rnd(p).normalized();
    Vec w = rnd(p).normalized();
    double hs = m.hessian(u).norm();
    e.grad = std::max(e.grad, rel(fd_gradient(m, u), m.gradient(u), 1e-3 * hs));
    e.hess = std::max(e.hess, rel(fd_hessian(m, u), m.hessian(u)));
    // Floors keep near-zero odd derivatives from producing meaningless ratios.
    e.third = std::max(e.third, rel(fd_third(m, u, z), m.third(u, z), 1e-3 * hs));
    e.fourth = std::max(e.fourth, rel(fd_fourth(m, u, z), m.fourth(u, z), 1e-3 * hs));
    e.contract = std::max(e.contract, rel(fd_contract(m, u, w, z), w.dot(m.third_contract(u, z)), 1e-3 * hs));
  }
  return e;
}

}  // namespace oracle
