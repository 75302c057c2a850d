#include <doctest.h>

#include <sstream>

#include "trajkit/errors.hpp"
#include "trajkit/studies.hpp"

using namespace trajkit;

TEST_CASE("shift axes") {
  CHECK(shift_vector(0.1, parse_axis("x")) == Point(0.1, 0.0));
  CHECK(shift_vector(0.1, parse_axis("y")) == Point(0.0, 0.1));
  CHECK(shift_vector(0.1, parse_axis("both")) == Point(0.1, 0.1));
  CHECK_THROWS_AS(parse_axis("z"), ContractError);
}

TEST_CASE("wide cloud is centred on the truth") {
  const SyntheticCloud c = wide_cloud(20, 1.0, 2, 12, 4);
  for (std::size_t n = 0; n < 2; ++n) {
    for (int t = 0; t < 12; ++t) {
      Point mean = Point::Zero();
      for (const auto& s : c.preds.samples) mean += s[n].col(t);
      CHECK((mean / 20.0 - c.scene.future[n].col(t)).norm() < 1e-12);
    }
  }
  c.scene.validate();
}

TEST_CASE("sensitivity table on a wide cloud") {
  const SyntheticCloud c = wide_cloud(20, 1.0, 1, 12, 0);
  const std::vector<Scene> scenes{c.scene};
  const std::vector<PredictionSet> preds{c.preds};
  const std::vector<double> shifts{0.0, -0.10, -0.01, 0.01, 0.10};
  const auto rows = shift_sensitivity(scenes, preds, shifts, ShiftAxis::x, EvalConfig{});
  REQUIRE(rows.size() == 6);
  // An explicit zero shift reproduces the baseline exactly.
  CHECK(to_json(rows[1].report) == to_json(rows[0].report));
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(std::abs(rows[i].d_ade) < 0.05);
    CHECK(rows[i].d_amd > 0.0);
    CHECK(std::abs(rows[i].d_amv) < 1e-9);
    REQUIRE(rows[i].d_kde_nll.has_value());
  }
  std::ostringstream os;
  write_sensitivity_csv(os, rows);
  CHECK(os.str().rfind("shift,ade,fde,kde_nll,amd,amv,d_ade", 0) == 0);
}

TEST_CASE("kernel sensitivity: gaussian and tophat rank families differently") {
  KernelSensitivityConfig cfg;
  cfg.kernels = {Kernel::gaussian, Kernel::tophat};
  cfg.trials = 100;
  const auto rows = kernel_sensitivity(cfg);
  CHECK(rows.size() == 2 * mixture_families().size());
  CHECK(rankings_differ(rows, Kernel::gaussian, Kernel::tophat));
  bool column_differs = false;
  for (std::size_t f = 0; f < mixture_families().size(); ++f) {
    column_differs = column_differs || rows[f].nll != rows[f + mixture_families().size()].nll;
  }
  CHECK(column_differs);
  CHECK_FALSE(rankings_differ(rows, Kernel::gaussian, Kernel::gaussian));
}

TEST_CASE("kernel sensitivity is reproducible") {
  KernelSensitivityConfig cfg;
  cfg.trials = 20;
  std::ostringstream a, b;
  write_kernel_sensitivity_csv(a, kernel_sensitivity(cfg));
  write_kernel_sensitivity_csv(b, kernel_sensitivity(cfg));
  CHECK(a.str() == b.str());
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(draw_family("cauchy", rng), ContractError);
}

TEST_CASE("gmm convergence improves with more samples") {
  ConvergenceConfig cfg;
  cfg.reps = 10;
  cfg.counts = {10, 300, 3000};
  const auto rows = gmm_convergence(cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].mean_error < rows[0].mean_error);
  CHECK(rows[2].cov_error < rows[0].cov_error);
  CHECK(rows[2].mean_k == doctest::Approx(2.0));
}

TEST_CASE("bimodal toy") {
  BimodalConfig cfg;
  cfg.scenes = 6;
  const auto scenes = bimodal_scenes(cfg);
  REQUIRE(scenes.size() == 6);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    scenes[i].validate();
    const Track d0 = scenes[0].observed[0].colwise() - scenes[0].observed[0].col(0);
    const Track di = scenes[i].observed[0].colwise() - scenes[i].observed[0].col(0);
    CHECK((d0 - di).norm() < 1e-12);
    const double lateral = scenes[i].future[0](1, 11) - scenes[i].observed[0](1, 7);
    CHECK(lateral == doctest::Approx(i % 2 == 0 ? 12 * cfg.lateral : -12 * cfg.lateral));
  }
  const Track right = bimodal_future(scenes[0], -1, cfg);
  const Track expect = (scenes[1].future[0].colwise() - scenes[1].observed[0].col(7)).colwise() +
                       scenes[0].observed[0].col(7);
  CHECK((right - expect).norm() < 1e-12);
}
