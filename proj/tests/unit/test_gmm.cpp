#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/gmm.hpp"

using namespace trajkit;

namespace {

std::vector<Point> gaussian_points(std::size_t n, Point mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(mu.x() + g(rng), mu.y() + g(rng));
  return pts;
}

std::vector<Point> two_clusters(std::uint64_t seed) {
  auto a = gaussian_points(200, Point(-5.0, 0.0), 0.1, seed);
  auto b = gaussian_points(200, Point(5.0, 0.0), 0.1, seed + 1);
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

FitConfig config(std::vector<int> ks = {1, 2, 3, 4, 5}) {
  FitConfig cfg;
  cfg.k_candidates = std::move(ks);
  cfg.rng_seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("em_fit recovers a standard normal") {
  const auto pts = gaussian_points(1000, Point::Zero(), 1.0, 5);
  const GmmModel m = em_fit(pts, 1, config());
  CHECK(m.means[0].norm() < 0.1);
  CHECK((m.covs[0] - Eigen::Matrix2d::Identity()).norm() < 0.15);
  CHECK(m.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("em_fit on identical points floors the covariance") {
  const std::vector<Point> pts(50, Point(2.0, 3.0));
  const FitConfig cfg = config();
  const GmmModel m = em_fit(pts, 1, cfg);
  CHECK((m.means[0] - Point(2.0, 3.0)).norm() < 1e-12);
  CHECK((m.covs[0] - cfg.covariance_floor * Eigen::Matrix2d::Identity()).norm() < 1e-15);

  const GmmModel m3 = em_fit(pts, 3, cfg);
  CHECK(std::isfinite(m3.log_likelihood));
  CHECK((mixture_mean(m3) - Point(2.0, 3.0)).norm() < 1e-9);
}

TEST_CASE("em_fit separates two tight clusters") {
  const GmmModel m = em_fit(two_clusters(3), 2, config());
  REQUIRE(m.num_components() == 2);
  const bool first_left = m.means[0].x() < 0.0;
  const Point left = first_left ? m.means[0] : m.means[1];
  const Point right = first_left ? m.means[1] : m.means[0];
  CHECK((left - Point(-5.0, 0.0)).norm() < 0.05);
  CHECK((right - Point(5.0, 0.0)).norm() < 0.05);
}

TEST_CASE("em_fit needs at least k points") {
  const std::vector<Point> pts{Point(0, 0), Point(1, 1)};
  CHECK_THROWS_AS(em_fit(pts, 3, config()), FitError);
}

TEST_CASE("select_by_bic picks the generating component count") {
  CHECK(select_by_bic(gaussian_points(1000, Point(1, 2), 0.7, 8), config({1, 2, 3}))
            .num_components() == 1);
  CHECK(select_by_bic(two_clusters(4), config()).num_components() == 2);

  const std::vector<Point> one{Point(4.0, -1.0)};
  const GmmModel m = select_by_bic(one, config({1}));
  CHECK(m.num_components() == 1);
  CHECK((m.means[0] - Point(4.0, -1.0)).norm() < 1e-12);
}

TEST_CASE("select_by_bic fails when any candidate is infeasible") {
  const std::vector<Point> pts{Point(0, 0), Point(1, 0), Point(0, 1)};
  CHECK(select_by_bic(pts, config({1, 3})).num_components() >= 1);
  CHECK_THROWS_AS(select_by_bic(pts, config({1, 5})), FitError);
  CHECK_THROWS_AS(select_by_bic(pts, config({4, 5})), FitError);
}

TEST_CASE("stored BIC matches its definition") {
  const auto pts = two_clusters(9);
  for (int k = 1; k <= 3; ++k) {
    const GmmModel m = em_fit(pts, k, config());
    const double expect = static_cast<double>(6 * k - 1) * std::log(static_cast<double>(pts.size())) -
                          2.0 * m.log_likelihood;
    CHECK(m.bic == expect);
    CHECK(bic_value(m.free_parameters(), m.n_points, m.log_likelihood) == m.bic);
  }
}

TEST_CASE("EM log-likelihood never decreases") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = gaussian_points(150, Point(0, 0), 1.0, 100 + static_cast<std::uint64_t>(trial));
    auto more = gaussian_points(80, Point(2.5, 1.0), 0.5, 200 + static_cast<std::uint64_t>(trial));
    pts.insert(pts.end(), more.begin(), more.end());
    const GmmModel m = em_fit(pts, 1 + trial % 4, config());
    for (std::size_t i = 1; i < m.ll_trace.size(); ++i) {
      CHECK(m.ll_trace[i] >= m.ll_trace[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("fitted weights sum to one and covariances respect the floor") {
  const auto pts = two_clusters(12);
  const FitConfig cfg = config();
  for (int k = 1; k <= 5; ++k) {
    const GmmModel m = em_fit(pts, k, cfg);
    double sum = 0.0;
    for (double w : m.weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    for (const auto& c : m.covs) {
      CHECK(c(0, 1) == c(1, 0));
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
      CHECK(es.eigenvalues().minCoeff() >= cfg.covariance_floor * (1.0 - 1e-9));
    }
  }
}

TEST_CASE("fits are translation equivariant") {
  const auto pts = two_clusters(15);
  const Point v(12.5, -7.25);
  std::vector<Point> moved;
  for (const auto& p : pts) moved.push_back(p + v);
  const FitConfig cfg = config({2});
  const GmmModel a = em_fit(pts, 2, cfg);
  const GmmModel b = em_fit(moved, 2, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    // Match components by proximity to undo any relabeling.
    const std::size_t j = ((b.means[0] - v) - a.means[i]).norm() < ((b.means[1] - v) - a.means[i]).norm() ? 0 : 1;
    CHECK(((b.means[j] - v) - a.means[i]).norm() < 1e-6);
    CHECK((b.covs[j] - a.covs[i]).norm() < 1e-6);
    CHECK(std::abs(b.weights[j] - a.weights[i]) < 1e-6);
  }
}

TEST_CASE("mixture_mean examples") {
  GmmModel m;
  m.weights = {1.0};
  m.means = {Point(3, -2)};
  m.covs = {Eigen::Matrix2d::Identity()};
  CHECK(mixture_mean(m).isApprox(Point(3, -2)));
  m.weights = {0.5, 0.5};
  m.means = {Point(0, 0), Point(2, 0)};
  m.covs = {Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()};
  CHECK(mixture_mean(m).isApprox(Point(1, 0)));
  m.weights = {0.25, 0.75};
  m.means = {Point(0, 0), Point(4, 4)};
  CHECK(mixture_mean(m).isApprox(Point(3, 3)));
}

TEST_CASE("mixture_covariance examples") {
  GmmModel m;
  Eigen::Matrix2d c;
  c << 2.0, 0.3, 0.3, 1.0;
  m.weights = {1.0};
  m.means = {Point(1, 1)};
  m.covs = {c};
  CHECK(mixture_covariance(m).isApprox(c));

  m.weights = {0.5, 0.5};
  m.means = {Point(-1, 0), Point(1, 0)};
  m.covs = {Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()};
  Eigen::Matrix2d expect = Eigen::Matrix2d::Identity();
  expect(0, 0) += 1.0;
  CHECK(mixture_covariance(m).isApprox(expect));
}

TEST_CASE("sampling matches the mixture moments") {
  GmmModel m;
  m.weights = {0.3, 0.7};
  m.means = {Point(-1.0, 2.0), Point(2.0, 0.5)};
  Eigen::Matrix2d a, b;
  a << 0.5, 0.2, 0.2, 0.4;
  b << 1.0, -0.3, -0.3, 0.6;
  m.covs = {a, b};

  CHECK(sample(m, 0, 1).empty());

  const auto small = sample(m, 100000, 2);
  Point mean = Point::Zero();
  for (const auto& p : small) mean += p;
  mean /= static_cast<double>(small.size());
  const Eigen::Matrix2d cov = mixture_covariance(m);
  for (int d = 0; d < 2; ++d) {
    const double se = std::sqrt(cov(d, d) / static_cast<double>(small.size()));
    CHECK(std::abs(mean(d) - mixture_mean(m)(d)) < 3.0 * se);
  }

  const auto big = sample(m, 1000000, 3);
  Point mu = Point::Zero();
  for (const auto& p : big) mu += p;
  mu /= static_cast<double>(big.size());
  Eigen::Matrix2d emp = Eigen::Matrix2d::Zero();
  for (const auto& p : big) emp += (p - mu) * (p - mu).transpose();
  emp /= static_cast<double>(big.size() - 1);
  CHECK((emp - cov).norm() / cov.norm() < 0.01);

  const auto again = sample(m, 50, 9);
  const auto twice = sample(m, 50, 9);
  for (std::size_t i = 0; i < 50; ++i) CHECK(again[i] == twice[i]);
}

TEST_CASE("sampling a floored point mass stays near its mean") {
  GmmModel m;
  m.weights = {1.0};
  m.means = {Point(1, 1)};
  m.covs = {1e-6 * Eigen::Matrix2d::Identity()};
  for (const auto& p : sample(m, 3, 4)) CHECK((p - Point(1, 1)).norm() < 1e-2);
}

TEST_CASE("log_density matches the hand-written normal density") {
  GmmModel m;
  m.weights = {0.4, 0.6};
  m.means = {Point(0, 0), Point(1, -1)};
  std::mt19937_64 rng(1);
  m.covs = {oracle::random_spd(rng), oracle::random_spd(rng)};
  const Point p(0.3, -0.2);
  const double expect = std::log(0.4 * oracle::normal_pdf(p, m.means[0], m.covs[0]) +
                                 0.6 * oracle::normal_pdf(p, m.means[1], m.covs[1]));
  CHECK(log_density(m, p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("JSON round trip") {
  const GmmModel m = em_fit(two_clusters(2), 2, config());
  const GmmModel r = gmm_from_json(to_json(m));
  CHECK(r.num_components() == 2);
  CHECK(r.bic == m.bic);
  CHECK(r.means[1] == m.means[1]);
  CHECK(r.covs[0] == m.covs[0]);
  CHECK(to_json(m).at("K") == 2);
}

TEST_CASE("max_abs_eigenvalue") {
  CHECK(max_abs_eigenvalue(Eigen::Vector2d(4.0, 1.0).asDiagonal()) == doctest::Approx(4.0));
  CHECK(max_abs_eigenvalue(0.25 * Eigen::Matrix2d::Identity()) == doctest::Approx(0.25));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix2d c = oracle::random_spd(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
    CHECK(max_abs_eigenvalue(c) == doctest::Approx(es.eigenvalues().cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("FitConfig validation") {
  FitConfig cfg;
  cfg.k_candidates.clear();
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg.k_candidates = {0};
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg.k_candidates = {1};
  cfg.ll_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}
