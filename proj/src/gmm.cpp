#include "trajkit/gmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "trajkit/errors.hpp"

namespace trajkit {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)

struct Component {
  double log_weight;
  Point mean;
  Eigen::Matrix2d precision;
  double log_norm;  // -ln(2 pi) - 0.5 ln|cov|
};

Component prepare(double weight, const Point& mean, const Eigen::Matrix2d& cov) {
  const double det = cov.determinant();
  return {weight > 0.0 ? std::log(weight) : -std::numeric_limits<double>::infinity(), mean,
          cov.inverse(), -kLog2Pi - 0.5 * std::log(det)};
}

double component_log_pdf(const Component& c, const Point& x) {
  const Point d = x - c.mean;
  return c.log_weight + c.log_norm - 0.5 * d.dot(c.precision * d);
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Eigen::Matrix2d scatter(std::span<const Point> pts, const Point& mean) {
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) {
    const Point d = p - mean;
    s += d * d.transpose();
  }
  return s;
}

// k-means++ seeding followed by one hard assignment to build initial parameters.
void init_parameters(std::span<const Point> pts, int k, double floor, std::mt19937_64& rng,
                     std::vector<double>& weights, std::vector<Point>& means,
                     std::vector<Eigen::Matrix2d>& covs) {
  const std::size_t n = pts.size();
  std::vector<Point> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(pts[pick(rng)]);
  std::vector<double> d2(n);
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (pts[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(pts[pick(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0.0 && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(pts[chosen]);
  }

  Point global_mean = Point::Zero();
  for (const auto& p : pts) global_mean += p;
  global_mean /= static_cast<double>(n);
  const Eigen::Matrix2d global_cov = scatter(pts, global_mean) / static_cast<double>(n);

  std::vector<std::vector<Point>> members(static_cast<std::size_t>(k));
  for (const auto& p : pts) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = (p - centers[c]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    members[best].push_back(p);
  }

  weights.assign(static_cast<std::size_t>(k), 0.0);
  means.assign(static_cast<std::size_t>(k), Point::Zero());
  covs.assign(static_cast<std::size_t>(k), Eigen::Matrix2d::Identity());
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    weights[c] = (static_cast<double>(m.size()) + 1.0) / static_cast<double>(n + members.size());
    if (m.empty()) {
      means[c] = centers[c];
      covs[c] = apply_covariance_floor(global_cov, floor);
      continue;
    }
    Point mu = Point::Zero();
    for (const auto& p : m) mu += p;
    mu /= static_cast<double>(m.size());
    means[c] = mu;
    const Eigen::Matrix2d cov =
        m.size() >= 3 ? Eigen::Matrix2d(scatter(m, mu) / static_cast<double>(m.size())) : global_cov;
    covs[c] = apply_covariance_floor(cov, floor);
  }
}

GmmModel run_em(std::span<const Point> pts, int k, const FitConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  const auto kk = static_cast<std::size_t>(k);
  GmmModel model;
  init_parameters(pts, k, cfg.covariance_floor, rng, model.weights, model.means, model.covs);

  std::vector<double> resp(n * kk);
  std::vector<double> row(kk);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    // E step for the current parameters.
    std::vector<Component> comps;
    comps.reserve(kk);
    for (std::size_t c = 0; c < kk; ++c) {
      comps.push_back(prepare(model.weights[c], model.means[c], model.covs[c]));
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kk; ++c) row[c] = component_log_pdf(comps[c], pts[i]);
      const double lse = log_sum_exp(row);
      ll += lse;
      for (std::size_t c = 0; c < kk; ++c) resp[i * kk + c] = std::exp(row[c] - lse);
    }
    model.ll_trace.push_back(ll);
    model.log_likelihood = ll;
    model.iterations = iter;
    if (iter >= cfg.max_em_iters ||
        (ll - prev_ll) / static_cast<double>(n) < cfg.ll_tolerance) {
      break;
    }
    prev_ll = ll;

    // M step.
    for (std::size_t c = 0; c < kk; ++c) {
      double nk = 0.0;
      Point mu = Point::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * kk + c];
        mu += resp[i * kk + c] * pts[i];
      }
      model.weights[c] = nk / static_cast<double>(n);
      if (nk < 1e-12) continue;  // starved component keeps its shape
      mu /= nk;
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const Point d = pts[i] - mu;
        cov += resp[i * kk + c] * (d * d.transpose());
      }
      cov /= nk;
      cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
      model.means[c] = mu;
      model.covs[c] = apply_covariance_floor(cov, cfg.covariance_floor);
    }
  }
  return model;
}

}  // namespace

void FitConfig::validate() const {
  if (k_candidates.empty()) throw ContractError("k_candidates must not be empty");
  for (int k : k_candidates) {
    if (k < 1) throw ContractError("every k candidate must be >= 1");
  }
  if (!(ll_tolerance > 0.0)) throw ContractError("ll_tolerance must be positive");
  if (!(covariance_floor > 0.0)) throw ContractError("covariance_floor must be positive");
  if (max_em_iters < 0) throw ContractError("max_em_iters must be >= 0");
  if (n_restarts < 1) throw ContractError("n_restarts must be >= 1");
}

double bic_value(std::size_t free_params, std::size_t n_points, double log_likelihood) {
  return static_cast<double>(free_params) * std::log(static_cast<double>(n_points)) -
         2.0 * log_likelihood;
}

Eigen::Matrix2d apply_covariance_floor(const Eigen::Matrix2d& cov, double floor) {
  const double a = cov(0, 0);
  const double d = cov(1, 1);
  const double b = 0.5 * (cov(0, 1) + cov(1, 0));
  const double min_eig = 0.5 * (a + d) - std::hypot(0.5 * (a - d), b);
  Eigen::Matrix2d out;
  out << a, b, b, d;
  if (!(min_eig >= floor)) {
    out.diagonal().array() += floor - std::min(min_eig, 0.0);
  }
  return out;
}

GmmModel em_fit(std::span<const Point> points, int k, const FitConfig& cfg) {
  cfg.validate();
  if (k < 1) throw ContractError("k must be >= 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw FitError("cannot fit " + std::to_string(k) + " components to " +
                   std::to_string(points.size()) + " points");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw DataError("non-finite point passed to em_fit");
  }

  // Fit in centered coordinates; the likelihood is translation invariant.
  Point center = Point::Zero();
  for (const auto& p : points) center += p;
  center /= static_cast<double>(points.size());
  std::vector<Point> centered(points.begin(), points.end());
  for (auto& p : centered) p -= center;

  GmmModel best;
  bool have_best = false;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed),
                      static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    GmmModel candidate = run_em(centered, k, cfg, rng);
    if (!have_best || candidate.log_likelihood > best.log_likelihood) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  for (auto& m : best.means) m += center;
  best.n_points = points.size();
  best.bic = bic_value(best.free_parameters(), best.n_points, best.log_likelihood);
  return best;
}

GmmModel select_by_bic(std::span<const Point> points, const FitConfig& cfg) {
  cfg.validate();
  std::vector<int> ks = cfg.k_candidates;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  // An infeasible candidate fails the whole selection rather than being skipped.
  if (points.size() < static_cast<std::size_t>(ks.back())) {
    throw FitError("k=" + std::to_string(ks.back()) + " needs at least " +
                   std::to_string(ks.back()) + " points, got " + std::to_string(points.size()));
  }
  GmmModel best;
  bool have_best = false;
  for (int k : ks) {
    GmmModel m = em_fit(points, k, cfg);
    if (!have_best || m.bic < best.bic) {
      best = std::move(m);
      have_best = true;
    }
  }
  return best;
}

Point mixture_mean(const GmmModel& model) {
  Point mu = Point::Zero();
  for (std::size_t k = 0; k < model.num_components(); ++k) {
    mu += model.weights[k] * model.means[k];
  }
  return mu;
}

Eigen::Matrix2d mixture_covariance(const GmmModel& model) {
  const Point mu = mixture_mean(model);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < model.num_components(); ++k) {
    const Point d = model.means[k] - mu;
    cov += model.weights[k] * (model.covs[k] + d * d.transpose());
  }
  cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
  return cov;
}

std::vector<Point> sample(const GmmModel& model, std::size_t count, std::uint64_t rng_seed) {
  std::vector<Point> out;
  out.reserve(count);
  if (count == 0) return out;
  std::mt19937_64 rng(rng_seed);
  std::discrete_distribution<std::size_t> pick(model.weights.begin(), model.weights.end());
  std::normal_distribution<double> z;
  std::vector<Eigen::Matrix2d> chol;
  chol.reserve(model.num_components());
  for (const auto& c : model.covs) chol.push_back(c.llt().matrixL());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = pick(rng);
    const double z0 = z(rng);
    const double z1 = z(rng);
    out.push_back(model.means[k] + chol[k] * Point(z0, z1));
  }
  return out;
}

double log_density(const GmmModel& model, const Point& p) {
  std::vector<double> terms;
  terms.reserve(model.num_components());
  for (std::size_t k = 0; k < model.num_components(); ++k) {
    terms.push_back(component_log_pdf(prepare(model.weights[k], model.means[k], model.covs[k]), p));
  }
  return log_sum_exp(terms);
}

nlohmann::json to_json(const GmmModel& model) {
  auto means = nlohmann::json::array();
  auto covs = nlohmann::json::array();
  for (const auto& m : model.means) means.push_back({m.x(), m.y()});
  for (const auto& c : model.covs) covs.push_back({{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}});
  return {{"K", model.num_components()},
          {"weights", model.weights},
          {"means", means},
          {"covs", covs},
          {"bic", model.bic}};
}

GmmModel gmm_from_json(const nlohmann::json& doc) {
  GmmModel m;
  m.weights = doc.at("weights").get<std::vector<double>>();
  for (const auto& mu : doc.at("means")) m.means.emplace_back(mu[0].get<double>(), mu[1].get<double>());
  for (const auto& c : doc.at("covs")) {
    Eigen::Matrix2d cov;
    cov << c[0][0].get<double>(), c[0][1].get<double>(), c[1][0].get<double>(),
        c[1][1].get<double>();
    m.covs.push_back(cov);
  }
  m.bic = doc.value("bic", 0.0);
  if (m.means.size() != m.weights.size() || m.covs.size() != m.weights.size() ||
      static_cast<std::size_t>(doc.value("K", m.weights.size())) != m.weights.size()) {
    throw DataError("GMM document has inconsistent component counts");
  }
  return m;
}

double max_abs_eigenvalue(const Eigen::Matrix2d& m) {
  const double mid = 0.5 * (m(0, 0) + m(1, 1));
  const double rad = std::hypot(0.5 * (m(0, 0) - m(1, 1)), 0.5 * (m(0, 1) + m(1, 0)));
  return mid >= 0.0 ? mid + rad : mid - rad;
}

}  // namespace trajkit
