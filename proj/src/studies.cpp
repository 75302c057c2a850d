#include "trajkit/studies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "trajkit/errors.hpp"
#include "trajkit/format.hpp"
#include "trajkit/tipping.hpp"

namespace trajkit {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

}  // namespace

ShiftAxis parse_axis(const std::string& text) {
  if (text == "x") return ShiftAxis::x;
  if (text == "y") return ShiftAxis::y;
  if (text == "both") return ShiftAxis::both;
  throw ContractError("unknown shift axis '" + text + "' (expected x, y or both)");
}

std::string to_string(ShiftAxis axis) {
  switch (axis) {
    case ShiftAxis::x: return "x";
    case ShiftAxis::y: return "y";
    case ShiftAxis::both: return "both";
  }
  return "x";
}

Point shift_vector(double delta, ShiftAxis axis) {
  switch (axis) {
    case ShiftAxis::x: return {delta, 0.0};
    case ShiftAxis::y: return {0.0, delta};
    case ShiftAxis::both: return {delta, delta};
  }
  return {delta, 0.0};
}

std::vector<SensitivityRow> shift_sensitivity(std::span<const Scene> scenes,
                                              std::span<const PredictionSet> preds,
                                              std::span<const double> shifts, ShiftAxis axis,
                                              const EvalConfig& cfg) {
  std::vector<SensitivityRow> rows;
  const MetricReport base = evaluate(scenes, preds, cfg);
  rows.push_back({0.0, base, 0, 0, 0, 0, std::nullopt});
  if (base.kde_nll) rows.front().d_kde_nll = 0.0;
  for (double delta : shifts) {
    std::vector<PredictionSet> moved;
    moved.reserve(preds.size());
    for (const auto& p : preds) moved.push_back(shifted(p, shift_vector(delta, axis)));
    SensitivityRow row;
    row.shift = delta;
    row.report = evaluate(scenes, moved, cfg);
    row.d_ade = row.report.ade - base.ade;
    row.d_fde = row.report.fde - base.fde;
    row.d_amd = row.report.amd - base.amd;
    row.d_amv = row.report.amv - base.amv;
    if (row.report.kde_nll && base.kde_nll) row.d_kde_nll = *row.report.kde_nll - *base.kde_nll;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sensitivity_csv(std::ostream& out, std::span<const SensitivityRow> rows) {
  out << "shift,ade,fde,kde_nll,amd,amv,d_ade,d_fde,d_kde_nll,d_amd,d_amv,excluded_cells\n";
  for (const auto& r : rows) {
    out << format_real(r.shift) << ',' << format_real(r.report.ade) << ','
        << format_real(r.report.fde) << ',' << opt_real(r.report.kde_nll) << ','
        << format_real(r.report.amd) << ',' << format_real(r.report.amv) << ','
        << format_real(r.d_ade) << ',' << format_real(r.d_fde) << ',' << opt_real(r.d_kde_nll)
        << ',' << format_real(r.d_amd) << ',' << format_real(r.d_amv) << ','
        << r.report.excluded_cells << '\n';
  }
}

SyntheticCloud wide_cloud(std::size_t samples, double sigma, std::size_t agents, int horizon,
                          std::uint64_t seed) {
  if (samples < 2 || agents == 0 || horizon < 1) throw ContractError("wide_cloud: empty cloud");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  SyntheticCloud c;
  for (std::size_t n = 0; n < agents; ++n) {
    Track obs(2, 8), fut(2, horizon);
    const Point origin(3.0 * static_cast<double>(n), 0.0);
    const Point velocity(0.4, 0.1);
    for (int t = 0; t < 8; ++t) obs.col(t) = origin + velocity * (t - 7);
    for (int t = 0; t < horizon; ++t) fut.col(t) = origin + velocity * (t + 1);
    c.scene.observed.push_back(obs);
    c.scene.future.push_back(fut);
    c.scene.agent_ids.push_back(static_cast<std::int64_t>(n));
  }
  c.preds.samples.assign(samples, TrackSet(agents, Track(2, horizon)));
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t n = 0; n < agents; ++n) {
      for (int t = 0; t < horizon; ++t) {
        c.preds.samples[s][n].col(t) = Point(gauss(rng), gauss(rng));
      }
    }
  }
  for (std::size_t n = 0; n < agents; ++n) {
    for (int t = 0; t < horizon; ++t) {
      Point mean = Point::Zero();
      for (std::size_t s = 0; s < samples; ++s) mean += c.preds.samples[s][n].col(t);
      mean /= static_cast<double>(samples);
      for (std::size_t s = 0; s < samples; ++s) {
        c.preds.samples[s][n].col(t) += c.scene.future[n].col(t) - mean;
      }
    }
  }
  c.preds.scene_ref = "wide-cloud";
  return c;
}

const std::vector<std::string>& mixture_families() {
  static const std::vector<std::string> names{"gaussian", "gmm", "uniform", "point-mass", "ring"};
  return names;
}

Point draw_family(const std::string& family, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (family == "gaussian") return {0.5 * unit(rng), 0.5 * unit(rng)};
  if (family == "gmm") {
    const double cx = u01(rng) < 0.5 ? -0.6 : 0.6;
    return {cx + 0.2 * unit(rng), 0.2 * unit(rng)};
  }
  if (family == "uniform") return {2.0 * u01(rng) - 1.0, 2.0 * u01(rng) - 1.0};
  if (family == "point-mass") return {0.05 + 0.02 * unit(rng), 0.02 * unit(rng)};
  if (family == "ring") {
    const double a = 2.0 * std::numbers::pi * u01(rng);
    const double r = 0.8 + 0.05 * unit(rng);
    return {r * std::cos(a), r * std::sin(a)};
  }
  throw ContractError("unknown mixture family '" + family + "'");
}

std::vector<KernelSensitivityRow> kernel_sensitivity(const KernelSensitivityConfig& cfg) {
  if (cfg.samples < 2 || cfg.trials == 0) throw ContractError("kernel sensitivity needs S >= 2");
  const auto& families = mixture_families();
  // Every kernel scores the same clouds.
  std::vector<std::vector<std::vector<Point>>> clouds(families.size());
  for (std::size_t f = 0; f < families.size(); ++f) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(f + 1)));
    clouds[f].resize(cfg.trials);
    for (auto& cloud : clouds[f]) {
      cloud.reserve(cfg.samples);
      for (std::size_t s = 0; s < cfg.samples; ++s) cloud.push_back(draw_family(families[f], rng));
    }
  }
  std::vector<KernelSensitivityRow> rows;
  for (Kernel k : cfg.kernels) {
    KdeConfig kde{k, cfg.rule, cfg.fixed_bandwidth};
    const std::size_t first = rows.size();
    for (std::size_t f = 0; f < families.size(); ++f) {
      KernelSensitivityRow row{families[f], k, 0.0, 0, 0};
      for (const auto& cloud : clouds[f]) {
        double d = kde_density(cloud, Point::Zero(), kde).density;
        if (!(d >= kKdeDensityFloor)) {
          d = kKdeDensityFloor;
          ++row.underflow_trials;
        }
        row.nll -= std::log(d);
      }
      row.nll /= static_cast<double>(cfg.trials);
      rows.push_back(row);
    }
    for (std::size_t i = first; i < rows.size(); ++i) {
      int rank = 1;
      for (std::size_t j = first; j < rows.size(); ++j) {
        if (rows[j].nll < rows[i].nll || (rows[j].nll == rows[i].nll && j < i)) ++rank;
      }
      rows[i].rank = rank;
    }
  }
  return rows;
}

bool rankings_differ(std::span<const KernelSensitivityRow> rows, Kernel a, Kernel b) {
  for (const auto& ra : rows) {
    if (ra.kernel != a) continue;
    for (const auto& rb : rows) {
      if (rb.kernel == b && rb.family == ra.family && rb.rank != ra.rank) return true;
    }
  }
  return false;
}

void write_kernel_sensitivity_csv(std::ostream& out, std::span<const KernelSensitivityRow> rows) {
  out << "family,kernel,nll,rank,underflow_trials\n";
  for (const auto& r : rows) {
    out << r.family << ',' << to_string(r.kernel) << ',' << format_real(r.nll) << ',' << r.rank
        << ',' << r.underflow_trials << '\n';
  }
}

GmmModel convergence_reference() {
  GmmModel m;
  m.weights = {0.6, 0.4};
  m.means = {Point(0.0, 0.0), Point(3.0, 2.0)};
  Eigen::Matrix2d a, b;
  a << 1.0, 0.3, 0.3, 0.5;
  b << 0.6, -0.2, -0.2, 0.8;
  m.covs = {a, b};
  return m;
}

std::vector<ConvergenceRow> gmm_convergence(const ConvergenceConfig& cfg) {
  cfg.fit.validate();
  if (cfg.reps == 0) throw ContractError("gmm convergence needs at least one repetition");
  const GmmModel truth = convergence_reference();
  const Point true_mean = mixture_mean(truth);
  const Eigen::Matrix2d true_cov = mixture_covariance(truth);
  std::vector<ConvergenceRow> rows;
  for (std::size_t c = 0; c < cfg.counts.size(); ++c) {
    ConvergenceRow row;
    row.samples = cfg.counts[c];
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const std::uint64_t s = splitmix64(splitmix64(cfg.seed ^ splitmix64(c + 1)) + r);
      const std::vector<Point> pts = sample(truth, cfg.counts[c], s);
      FitConfig fit = cfg.fit;
      fit.rng_seed = splitmix64(s);
      const GmmModel m = select_by_bic(pts, fit);
      row.mean_error += (mixture_mean(m) - true_mean).norm();
      row.cov_error += (mixture_covariance(m) - true_cov).norm();
      row.md += tipping_md(m, cfg.test_point);
      row.mean_k += static_cast<double>(m.num_components());
    }
    const double inv = 1.0 / static_cast<double>(cfg.reps);
    row.mean_error *= inv;
    row.cov_error *= inv;
    row.md *= inv;
    row.mean_k *= inv;
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows,
                           double reference_md) {
  out << "samples,mean_error,cov_error,md,reference_md,mean_k\n";
  for (const auto& r : rows) {
    out << r.samples << ',' << format_real(r.mean_error) << ',' << format_real(r.cov_error) << ','
        << format_real(r.md) << ',' << format_real(reference_md) << ','
        << format_real(r.mean_k) << '\n';
  }
}

std::vector<Scene> bimodal_scenes(const BimodalConfig& cfg) {
  if (cfg.t_obs < 2 || cfg.t_pred < 1) throw ContractError("bimodal toy needs t_obs >= 2");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> offset(-5.0, 5.0);
  std::vector<Scene> scenes;
  scenes.reserve(cfg.scenes);
  for (std::size_t i = 0; i < cfg.scenes; ++i) {
    const Point start(offset(rng), offset(rng));
    Scene s;
    Track obs(2, cfg.t_obs);
    for (int t = 0; t < cfg.t_obs; ++t) obs.col(t) = start + Point(cfg.step * t, 0.0);
    s.observed.push_back(obs);
    s.agent_ids.push_back(0);
    s.future.push_back(bimodal_future(s, i % 2 == 0 ? 1 : -1, cfg));
    scenes.push_back(std::move(s));
  }
  return scenes;
}

Track bimodal_future(const Scene& scene, int sign, const BimodalConfig& cfg) {
  const Track& obs = scene.observed.at(0);
  const Point last = obs.col(obs.cols() - 1);
  Track fut(2, cfg.t_pred);
  for (int t = 0; t < cfg.t_pred; ++t) {
    fut.col(t) = last + Point(cfg.step * (t + 1), sign * cfg.lateral * (t + 1));
  }
  return fut;
}

}  // namespace trajkit
