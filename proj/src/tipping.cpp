#include "trajkit/tipping.hpp"

#include <Eigen/LU>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace trajkit {
namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kLog2Pi = 1.8378770664093454836;

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes{0.0, -0.5384693101056831, 0.5384693101056831,
                                         -0.9061798459386640, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.5688888888888889, 0.4786286704993665,
                                           0.4786286704993665, 0.2369268850561891,
                                           0.2369268850561891};

// ln of the integral of exp(-u^2) over [lo, hi], lo < hi.
double log_gauss_interval(double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double width = hi - lo;
  if (width * (std::abs(mid) + 1.0) < 0.05) {
    // Short interval: factor out exp(-mid^2) and integrate the slowly varying rest.
    const double half = 0.5 * width;
    double acc = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
      const double u = half * kGlNodes[i];
      acc += kGlWeights[i] * std::exp(-2.0 * mid * u - u * u);
    }
    return -mid * mid + std::log(half * acc);
  }
  if (lo >= 0.0) {
    // erfc(lo) - erfc(hi) with the exp(-lo^2) factor pulled out; lo^2 - hi^2 = -2 mid width.
    const double diff = erfcx(lo) - std::exp(-2.0 * mid * width) * erfcx(hi);
    return -lo * lo + std::log(0.5 * kSqrtPi * diff);
  }
  if (hi <= 0.0) return log_gauss_interval(-hi, -lo);
  return std::log(0.5 * kSqrtPi * (std::erf(hi) - std::erf(lo)));
}

}  // namespace

double erfcx(double x) {
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  const double inv2 = 1.0 / (x * x);
  const double series =
      1.0 + inv2 * (-0.5 + inv2 * (0.75 + inv2 * (-1.875 + inv2 * 6.5625)));
  return series / (x * kSqrtPi);
}

double log_segment_integral(const Point& mean, const Eigen::Matrix2d& cov, const Point& a,
                            const Point& b) {
  const Point d = b - a;
  const double length = d.norm();
  if (length == 0.0) return -std::numeric_limits<double>::infinity();
  const Eigen::Matrix2d prec = cov.inverse();
  const Point e = a - mean;
  // Along x(s) = a + s d the exponent is -(A s^2 + 2 B s + C) / 2.
  const double qa = d.dot(prec * d);
  const double qb = d.dot(prec * e);
  const double qc = e.dot(prec * e);
  const double r = std::sqrt(0.5 * qa);
  const double shift = qb / qa;
  const double lo = r * shift;
  const double hi = r * (1.0 + shift);
  const double offset = std::max(0.0, qc - qb * shift);
  return std::log(length) - kLog2Pi - 0.5 * std::log(cov.determinant()) - 0.5 * offset -
         std::log(r) + log_gauss_interval(lo, hi);
}

TippingResult tipping(const GmmModel& model, const Point& p) {
  const std::size_t k_count = model.num_components();
  const Point mu = mixture_mean(model);
  TippingResult out;
  out.weights.assign(k_count, 0.0);

  const bool at_mean = (p - mu).norm() <= 1e-12;
  std::vector<double> logw(k_count, -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    if (model.weights[k] <= 0.0) continue;
    logw[k] = std::log(model.weights[k]);
    if (!at_mean) logw[k] += log_segment_integral(model.means[k], model.covs[k], mu, p);
    top = std::max(top, logw[k]);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    out.weights[k] = std::isfinite(logw[k]) ? std::exp(logw[k] - top) : 0.0;
    total += out.weights[k];
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    out.weights[k] /= total;
    out.g += out.weights[k] * model.covs[k].inverse();
  }
  if (at_mean) return out;
  const Point diff = mu - p;
  out.distance = std::sqrt(std::max(0.0, diff.dot(out.g * diff)));
  return out;
}

double mahalanobis(const Point& mean, const Eigen::Matrix2d& cov, const Point& p) {
  const Point d = p - mean;
  return std::sqrt(std::max(0.0, d.dot(cov.inverse() * d)));
}

}  // namespace trajkit
