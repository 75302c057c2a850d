#pragma once

// Reference computations written independently of the library code.

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace oracle {

/// Adaptive Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol,
                      int depth = 50) {
  auto step = [&](auto&& self, double lo, double hi, double flo, double fmid, double fhi,
                  double whole, double eps, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
      return left + right + (left + right - whole) / 15.0;
    }
    return self(self, lo, mid, flo, flm, fmid, left, eps / 2.0, d - 1) +
           self(self, mid, hi, fmid, frm, fhi, right, eps / 2.0, d - 1);
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return step(step, a, b, fa, fm, fb, whole, tol, depth);
}

/// Bivariate normal density written out by hand.
inline double normal_pdf(const Eigen::Vector2d& x, const Eigen::Vector2d& mu,
                         const Eigen::Matrix2d& cov) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  Eigen::Matrix2d inv;
  inv << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
  inv /= det;
  const Eigen::Vector2d d = x - mu;
  return std::exp(-0.5 * d.dot(inv * d)) / (2.0 * std::numbers::pi * std::sqrt(det));
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Eigen::Matrix2d random_spd(std::mt19937_64& rng, double lo = 0.05, double hi = 3.0) {
  std::uniform_real_distribution<double> eig(lo, hi), ang(0.0, std::numbers::pi);
  const double a = ang(rng);
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r * Eigen::Vector2d(eig(rng), eig(rng)).asDiagonal() * r.transpose();
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trajkit_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
