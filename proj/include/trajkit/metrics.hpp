#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "trajkit/gmm.hpp"
#include "trajkit/kde.hpp"
#include "trajkit/trajdata.hpp"
#include "trajkit/types.hpp"

namespace trajkit {

struct AdeFde {
  double ade = 0.0;
  double fde = 0.0;
};

/// Mean Euclidean error over agents and timesteps, and over agents at the last step.
AdeFde ade_fde(const TrackSet& pred, const TrackSet& truth);

enum class BonScope { agent, scene };

BonScope parse_bon_scope(const std::string& text);

struct BestOfN {
  double ade = 0.0;
  double fde = 0.0;
  std::vector<std::size_t> best_sample;  // per agent; identical entries for scene scope
};

/// Best-of-N: per agent (or per scene) keep the sample with the lowest ADE.
/// Ties go to the lowest sample index.
BestOfN best_of_n(const PredictionSet& preds, const TrackSet& truth,
                  BonScope scope = BonScope::agent);

struct KdeNll {
  double nll = 0.0;  // nats, mean over (agent, timestep)
  std::size_t cells = 0;
  std::size_t fallback_cells = 0;   // zero-spread clouds scored with the fallback bandwidth
  std::size_t underflow_cells = 0;  // densities below the floor
};

/// Needs S >= 2.
KdeNll kde_nll(const PredictionSet& preds, const TrackSet& truth, const KdeConfig& cfg);

/// One mixture fit per (agent, timestep) sample cloud.
struct CellFit {
  std::size_t agent = 0;
  std::size_t t = 0;
  std::optional<GmmModel> model;
  std::string error;  // set when the fit failed
};

struct CellFits {
  std::size_t num_agents = 0;
  std::size_t horizon = 0;
  std::vector<CellFit> cells;  // agent-major

  std::size_t failed() const;
};

/// Fits every cell with select_by_bic. Each cell gets its own seed derived
/// from (cfg.rng_seed, agent, t), so results do not depend on `threads`.
CellFits fit_cells(const PredictionSet& preds, const FitConfig& cfg, unsigned threads = 1);

struct CellAverage {
  double value = 0.0;  // NaN when no cell could be fitted
  std::size_t used_cells = 0;
  std::size_t excluded_cells = 0;
};

CellAverage amd_from_fits(const CellFits& fits, const TrackSet& truth);
CellAverage amv_from_fits(const CellFits& fits);

/// Mean Tipping distance from the truth to the per-cell fitted mixtures.
CellAverage amd(const PredictionSet& preds, const TrackSet& truth, const FitConfig& cfg);
/// Mean largest eigenvalue of the per-cell fitted mixture covariance (m^2).
CellAverage amv(const PredictionSet& preds, const FitConfig& cfg);

/// Per-(agent, timestep) ensemble mean and unbiased covariance, S >= 2.
struct EnsembleStats {
  TrackSet mean;
  std::vector<std::vector<Eigen::Matrix2d>> cov;  // [agent][t]
};

EnsembleStats ensemble_stats(const PredictionSet& preds);

/// Classical Mahalanobis distance averaged over (agent, timestep), without a
/// mixture fit. Covariances are floored as in the mixture fits.
double ensemble_md(const TrackSet& mean, const std::vector<std::vector<Eigen::Matrix2d>>& cov,
                   const TrackSet& truth, double covariance_floor = 1e-6);

struct EvalConfig {
  FitConfig fit;
  KdeConfig kde;
  BonScope bon_scope = BonScope::agent;
  std::size_t bon_samples = 20;  // first N samples used for best-of-N (0 = all)
  std::size_t dist_samples = 0;  // first N samples used for KDE/AMD/AMV (0 = all)
  unsigned threads = 1;
};

struct SceneMetrics {
  std::string scene_ref;
  std::size_t agents = 0;
  double ade = 0.0;
  double fde = 0.0;
  std::optional<double> kde_nll;
  double amd = 0.0;
  double amv = 0.0;
  std::size_t total_cells = 0;
  std::size_t excluded_cells = 0;
  std::size_t kde_fallback_cells = 0;
  std::size_t kde_underflow_cells = 0;
};

/// ade/fde are best-of-N. amd_amv_avg = (amd + amv) / 2 mixes standard-
/// deviation units with m^2, kept as the conventional single-number summary.
struct MetricReport {
  double ade = 0.0;
  double fde = 0.0;
  std::optional<double> kde_nll;
  double amd = 0.0;
  double amv = 0.0;
  double amd_amv_avg = 0.0;
  std::size_t total_cells = 0;
  std::size_t excluded_cells = 0;
  std::size_t kde_fallback_cells = 0;
  std::size_t kde_underflow_cells = 0;
  std::vector<SceneMetrics> per_scene;
};

MetricReport evaluate(const Scene& scene, const PredictionSet& preds, const EvalConfig& cfg);

/// Pools agents (ADE/FDE) and cells (KDE/AMD/AMV) over all scenes.
MetricReport evaluate(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                      const EvalConfig& cfg);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const EvalConfig& cfg);

/// Adds `offset` to every predicted point.
PredictionSet shifted(const PredictionSet& preds, const Point& offset);

}  // namespace trajkit
