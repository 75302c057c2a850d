#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "trajkit/types.hpp"

namespace trajkit {

/// A fitted 2-D Gaussian mixture plus the diagnostics of the fit.
struct GmmModel {
  std::vector<double> weights;
  std::vector<Point> means;
  std::vector<Eigen::Matrix2d> covs;
  double log_likelihood = 0.0;  // total over the fitted points, natural log
  double bic = 0.0;
  std::size_t n_points = 0;
  int iterations = 0;
  // Total log-likelihood after each EM iteration of the winning restart.
  std::vector<double> ll_trace;

  std::size_t num_components() const { return weights.size(); }
  /// (K - 1) weights + 2K mean coordinates + 3K covariance entries.
  std::size_t free_parameters() const { return 6 * num_components() - 1; }
};

struct FitConfig {
  std::vector<int> k_candidates{1, 2, 3, 4, 5};
  int max_em_iters = 200;
  double ll_tolerance = 1e-6;       // per point, nats
  double covariance_floor = 1e-6;   // m^2
  int n_restarts = 3;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// BIC of a fit with the given log-likelihood: m ln n - 2 ln L.
double bic_value(std::size_t free_params, std::size_t n_points, double log_likelihood);

/// Raises every covariance eigenvalue below `floor` by adding a multiple of I.
Eigen::Matrix2d apply_covariance_floor(const Eigen::Matrix2d& cov, double floor);

/// EM for a k-component full-covariance mixture, k-means++ seeding, best of
/// cfg.n_restarts restarts. Throws FitError when there are fewer points than k.
GmmModel em_fit(std::span<const Point> points, int k, const FitConfig& cfg);

/// Fits every k in cfg.k_candidates and keeps the lowest BIC (smaller K on ties).
GmmModel select_by_bic(std::span<const Point> points, const FitConfig& cfg);

Point mixture_mean(const GmmModel& model);

/// Total covariance: within-component spread plus spread of component means.
Eigen::Matrix2d mixture_covariance(const GmmModel& model);

/// Ancestral sampling; deterministic for a given seed.
std::vector<Point> sample(const GmmModel& model, std::size_t count, std::uint64_t rng_seed);

/// Log density of the mixture at p.
double log_density(const GmmModel& model, const Point& p);

/// Debug form: {K, weights, means, covs, bic}.
nlohmann::json to_json(const GmmModel& model);
GmmModel gmm_from_json(const nlohmann::json& doc);

/// Largest-magnitude eigenvalue of a symmetric 2x2 matrix.
double max_abs_eigenvalue(const Eigen::Matrix2d& m);

}  // namespace trajkit
