#include "trajkit/metrics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "trajkit/errors.hpp"
#include "trajkit/tipping.hpp"

namespace trajkit {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t agent, std::size_t t) {
  return splitmix64(splitmix64(base ^ splitmix64(agent)) + t);
}

double agent_ade(const Track& pred, const Track& truth) {
  return (pred - truth).colwise().norm().mean();
}

std::vector<Point> cell_points(const PredictionSet& preds, std::size_t agent, std::size_t t) {
  std::vector<Point> pts;
  pts.reserve(preds.samples.size());
  for (const auto& s : preds.samples) pts.push_back(s[agent].col(static_cast<Eigen::Index>(t)));
  return pts;
}

// Sums kept so that several scenes can be pooled exactly.
struct ScenePartial {
  SceneMetrics m;
  double ade_sum = 0.0, fde_sum = 0.0;
  double kde_sum = 0.0;
  std::size_t kde_cells = 0;
  double amd_sum = 0.0, amv_sum = 0.0;
  std::size_t fit_cells = 0;
};

ScenePartial evaluate_partial(const Scene& scene, const PredictionSet& preds,
                              const EvalConfig& cfg) {
  require_consistent(preds, scene.future);
  ScenePartial out;
  out.m.scene_ref = preds.scene_ref;
  out.m.agents = scene.num_agents();

  const BestOfN bon = best_of_n(take_samples(preds, cfg.bon_samples), scene.future, cfg.bon_scope);
  out.m.ade = bon.ade;
  out.m.fde = bon.fde;
  out.ade_sum = bon.ade * static_cast<double>(out.m.agents);
  out.fde_sum = bon.fde * static_cast<double>(out.m.agents);

  const PredictionSet dist = take_samples(preds, cfg.dist_samples);
  if (dist.num_samples() >= 2) {
    const KdeNll k = kde_nll(dist, scene.future, cfg.kde);
    out.m.kde_nll = k.nll;
    out.m.kde_fallback_cells = k.fallback_cells;
    out.m.kde_underflow_cells = k.underflow_cells;
    out.kde_sum = k.nll * static_cast<double>(k.cells);
    out.kde_cells = k.cells;
  }

  const CellFits fits = fit_cells(dist, cfg.fit, cfg.threads);
  const CellAverage a = amd_from_fits(fits, scene.future);
  const CellAverage v = amv_from_fits(fits);
  out.m.amd = a.value;
  out.m.amv = v.value;
  out.m.total_cells = fits.cells.size();
  out.m.excluded_cells = a.excluded_cells;
  out.fit_cells = a.used_cells;
  if (a.used_cells > 0) {
    out.amd_sum = a.value * static_cast<double>(a.used_cells);
    out.amv_sum = v.value * static_cast<double>(v.used_cells);
  }
  return out;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

AdeFde ade_fde(const TrackSet& pred, const TrackSet& truth) {
  require_same_shape(pred, truth, "ade_fde");
  if (truth.empty()) throw ContractError("ade_fde: no agents");
  const std::size_t horizon = common_horizon(truth);
  if (horizon == 0) throw ContractError("ade_fde: empty horizon");
  AdeFde out;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const Eigen::RowVectorXd err = (pred[n] - truth[n]).colwise().norm();
    out.ade += err.sum();
    out.fde += err(err.size() - 1);
  }
  out.ade /= static_cast<double>(truth.size() * horizon);
  out.fde /= static_cast<double>(truth.size());
  return out;
}

BonScope parse_bon_scope(const std::string& text) {
  if (text == "agent") return BonScope::agent;
  if (text == "scene") return BonScope::scene;
  throw ContractError("bon scope must be 'agent' or 'scene', got '" + text + "'");
}

BestOfN best_of_n(const PredictionSet& preds, const TrackSet& truth, BonScope scope) {
  require_consistent(preds, truth);
  const std::size_t n_agents = truth.size();
  const std::size_t n_samples = preds.num_samples();
  BestOfN out;
  out.best_sample.assign(n_agents, 0);

  if (scope == BonScope::scene) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n_samples; ++s) {
      const double ade = ade_fde(preds.samples[s], truth).ade;
      if (ade < best) {
        best = ade;
        out.best_sample.assign(n_agents, s);
      }
    }
  } else {
    for (std::size_t n = 0; n < n_agents; ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < n_samples; ++s) {
        const double ade = agent_ade(preds.samples[s][n], truth[n]);
        if (ade < best) {
          best = ade;
          out.best_sample[n] = s;
        }
      }
    }
  }

  TrackSet chosen(n_agents);
  for (std::size_t n = 0; n < n_agents; ++n) chosen[n] = preds.samples[out.best_sample[n]][n];
  const AdeFde e = ade_fde(chosen, truth);
  out.ade = e.ade;
  out.fde = e.fde;
  return out;
}

KdeNll kde_nll(const PredictionSet& preds, const TrackSet& truth, const KdeConfig& cfg) {
  require_consistent(preds, truth);
  cfg.validate();
  if (preds.num_samples() < 2) throw ContractError("kde_nll needs at least two samples");
  const std::size_t horizon = common_horizon(truth);
  KdeNll out;
  double sum = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    for (std::size_t t = 0; t < horizon; ++t) {
      const auto pts = cell_points(preds, n, t);
      const KdeEstimate est = kde_density(pts, truth[n].col(static_cast<Eigen::Index>(t)), cfg);
      if (est.fallback) ++out.fallback_cells;
      double density = est.density;
      if (!(density >= kKdeDensityFloor)) {
        ++out.underflow_cells;
        density = kKdeDensityFloor;
      }
      sum -= std::log(density);
      ++out.cells;
    }
  }
  out.nll = sum / static_cast<double>(out.cells);
  return out;
}

std::size_t CellFits::failed() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.model ? 0 : 1;
  return n;
}

CellFits fit_cells(const PredictionSet& preds, const FitConfig& cfg, unsigned threads) {
  cfg.validate();
  CellFits out;
  out.num_agents = preds.num_agents();
  out.horizon = preds.horizon();
  out.cells.resize(out.num_agents * out.horizon);
  for (std::size_t n = 0; n < out.num_agents; ++n) {
    for (std::size_t t = 0; t < out.horizon; ++t) {
      out.cells[n * out.horizon + t].agent = n;
      out.cells[n * out.horizon + t].t = t;
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < out.cells.size(); i = next++) {
      CellFit& cell = out.cells[i];
      FitConfig local = cfg;
      local.rng_seed = cell_seed(cfg.rng_seed, cell.agent, cell.t);
      try {
        const auto pts = cell_points(preds, cell.agent, cell.t);
        cell.model = select_by_bic(pts, local);
      } catch (const FitError& e) {
        cell.error = e.what();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(out.cells.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

CellAverage amd_from_fits(const CellFits& fits, const TrackSet& truth) {
  CellAverage out;
  double sum = 0.0;
  for (const auto& cell : fits.cells) {
    if (!cell.model) {
      ++out.excluded_cells;
      continue;
    }
    sum += tipping_md(*cell.model, truth[cell.agent].col(static_cast<Eigen::Index>(cell.t)));
    ++out.used_cells;
  }
  out.value = out.used_cells > 0 ? sum / static_cast<double>(out.used_cells) : kNaN;
  return out;
}

CellAverage amv_from_fits(const CellFits& fits) {
  CellAverage out;
  double sum = 0.0;
  for (const auto& cell : fits.cells) {
    if (!cell.model) {
      ++out.excluded_cells;
      continue;
    }
    sum += max_abs_eigenvalue(mixture_covariance(*cell.model));
    ++out.used_cells;
  }
  out.value = out.used_cells > 0 ? sum / static_cast<double>(out.used_cells) : kNaN;
  return out;
}

CellAverage amd(const PredictionSet& preds, const TrackSet& truth, const FitConfig& cfg) {
  require_consistent(preds, truth);
  return amd_from_fits(fit_cells(preds, cfg), truth);
}

CellAverage amv(const PredictionSet& preds, const FitConfig& cfg) {
  if (preds.samples.empty()) throw ContractError("amv: prediction set has no samples");
  return amv_from_fits(fit_cells(preds, cfg));
}

EnsembleStats ensemble_stats(const PredictionSet& preds) {
  const std::size_t s_count = preds.num_samples();
  if (s_count < 2) throw ContractError("ensemble statistics need at least two members");
  const std::size_t n_agents = preds.num_agents();
  const std::size_t horizon = preds.horizon();
  EnsembleStats out;
  out.mean.assign(n_agents, Track::Zero(2, static_cast<Eigen::Index>(horizon)));
  out.cov.assign(n_agents, std::vector<Eigen::Matrix2d>(horizon, Eigen::Matrix2d::Zero()));
  for (const auto& s : preds.samples) {
    for (std::size_t n = 0; n < n_agents; ++n) out.mean[n] += s[n];
  }
  for (auto& m : out.mean) m /= static_cast<double>(s_count);
  for (const auto& s : preds.samples) {
    for (std::size_t n = 0; n < n_agents; ++n) {
      for (std::size_t t = 0; t < horizon; ++t) {
        const auto j = static_cast<Eigen::Index>(t);
        const Point d = s[n].col(j) - out.mean[n].col(j);
        out.cov[n][t] += d * d.transpose();
      }
    }
  }
  for (auto& row : out.cov) {
    for (auto& c : row) c /= static_cast<double>(s_count - 1);
  }
  return out;
}

double ensemble_md(const TrackSet& mean, const std::vector<std::vector<Eigen::Matrix2d>>& cov,
                   const TrackSet& truth, double covariance_floor) {
  require_same_shape(mean, truth, "ensemble_md");
  const std::size_t horizon = common_horizon(truth);
  if (cov.size() != truth.size()) throw ContractError("ensemble_md: covariance agent count mismatch");
  double sum = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (cov[n].size() != horizon) throw ContractError("ensemble_md: covariance horizon mismatch");
    for (std::size_t t = 0; t < horizon; ++t) {
      const auto j = static_cast<Eigen::Index>(t);
      sum += mahalanobis(mean[n].col(j), apply_covariance_floor(cov[n][t], covariance_floor),
                         truth[n].col(j));
    }
  }
  return sum / static_cast<double>(truth.size() * horizon);
}

MetricReport evaluate(const Scene& scene, const PredictionSet& preds, const EvalConfig& cfg) {
  return evaluate(std::span<const Scene>(&scene, 1), std::span<const PredictionSet>(&preds, 1), cfg);
}

MetricReport evaluate(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                      const EvalConfig& cfg) {
  if (scenes.size() != preds.size()) {
    throw ContractError("evaluate: " + std::to_string(scenes.size()) + " scenes but " +
                        std::to_string(preds.size()) + " prediction sets");
  }
  if (scenes.empty()) throw ContractError("evaluate: nothing to evaluate");
  MetricReport report;
  double ade = 0, fde = 0, kde = 0, amd_sum = 0, amv_sum = 0;
  std::size_t agents = 0, kde_cells = 0, fit_cells_used = 0;
  bool kde_everywhere = true;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    ScenePartial p = evaluate_partial(scenes[i], preds[i], cfg);
    if (p.m.scene_ref.empty()) p.m.scene_ref = std::to_string(i);
    ade += p.ade_sum;
    fde += p.fde_sum;
    agents += p.m.agents;
    kde += p.kde_sum;
    kde_cells += p.kde_cells;
    kde_everywhere = kde_everywhere && p.m.kde_nll.has_value();
    amd_sum += p.amd_sum;
    amv_sum += p.amv_sum;
    fit_cells_used += p.fit_cells;
    report.total_cells += p.m.total_cells;
    report.excluded_cells += p.m.excluded_cells;
    report.kde_fallback_cells += p.m.kde_fallback_cells;
    report.kde_underflow_cells += p.m.kde_underflow_cells;
    report.per_scene.push_back(std::move(p.m));
  }
  report.ade = ade / static_cast<double>(agents);
  report.fde = fde / static_cast<double>(agents);
  if (kde_everywhere) report.kde_nll = kde / static_cast<double>(kde_cells);
  report.amd = fit_cells_used > 0 ? amd_sum / static_cast<double>(fit_cells_used) : kNaN;
  report.amv = fit_cells_used > 0 ? amv_sum / static_cast<double>(fit_cells_used) : kNaN;
  report.amd_amv_avg = 0.5 * (report.amd + report.amv);
  return report;
}

nlohmann::json to_json(const MetricReport& r) {
  auto scenes = nlohmann::json::array();
  for (const auto& s : r.per_scene) {
    scenes.push_back({{"scene", s.scene_ref},
                      {"agents", s.agents},
                      {"ade", s.ade},
                      {"fde", s.fde},
                      {"kde_nll", optional_number(s.kde_nll)},
                      {"amd", s.amd},
                      {"amv", s.amv},
                      {"total_cells", s.total_cells},
                      {"excluded_cells", s.excluded_cells},
                      {"kde_fallback_cells", s.kde_fallback_cells},
                      {"kde_underflow_cells", s.kde_underflow_cells}});
  }
  return {{"ade", r.ade},
          {"fde", r.fde},
          {"kde_nll", optional_number(r.kde_nll)},
          {"amd", r.amd},
          {"amv", r.amv},
          {"amd_amv_avg", r.amd_amv_avg},
          {"total_cells", r.total_cells},
          {"excluded_cells", r.excluded_cells},
          {"kde_fallback_cells", r.kde_fallback_cells},
          {"kde_underflow_cells", r.kde_underflow_cells},
          {"per_scene", scenes}};
}

nlohmann::json to_json(const EvalConfig& cfg) {
  return {{"k_candidates", cfg.fit.k_candidates},
          {"max_em_iters", cfg.fit.max_em_iters},
          {"ll_tolerance", cfg.fit.ll_tolerance},
          {"covariance_floor", cfg.fit.covariance_floor},
          {"n_restarts", cfg.fit.n_restarts},
          {"fit_seed", cfg.fit.rng_seed},
          {"kernel", to_string(cfg.kde.kernel)},
          {"bandwidth", bandwidth_label(cfg.kde)},
          {"bon_scope", cfg.bon_scope == BonScope::agent ? "agent" : "scene"},
          {"bon_samples", cfg.bon_samples},
          {"dist_samples", cfg.dist_samples}};
}

PredictionSet shifted(const PredictionSet& preds, const Point& offset) {
  PredictionSet out = preds;
  for (auto& s : out.samples) {
    for (auto& t : s) t.colwise() += offset;
  }
  return out;
}

}  // namespace trajkit
