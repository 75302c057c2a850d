#pragma once

#include <vector>

#include <Eigen/Core>

#include "trajkit/gmm.hpp"

namespace trajkit {

/// ln of the line integral of N(x; mean, cov) along the straight segment
/// from `a` to `b` (arc-length measure). Closed form via the error function,
/// evaluated in log space so far-tail segments do not underflow.
double log_segment_integral(const Point& mean, const Eigen::Matrix2d& cov, const Point& a,
                            const Point& b);

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

struct TippingResult {
  double distance = 0.0;
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  std::vector<double> weights;  // normalised segment weights, sum to 1
};

/// Generalised Mahalanobis distance of `p` from a mixture: the precision is
/// the average of the component precisions weighted by pi_k times the mass
/// of component k along the segment from the mixture mean to p.
TippingResult tipping(const GmmModel& model, const Point& p);

inline double tipping_md(const GmmModel& model, const Point& p) {
  return tipping(model, p).distance;
}

/// Classical Mahalanobis distance sqrt((p - mu)^T cov^-1 (p - mu)).
double mahalanobis(const Point& mean, const Eigen::Matrix2d& cov, const Point& p);

}  // namespace trajkit
