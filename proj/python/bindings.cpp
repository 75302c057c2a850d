#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "../tools/commands.hpp"
#include "trajkit/checkpoint.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/gmm.hpp"
#include "trajkit/metrics.hpp"
#include "trajkit/scene_io.hpp"
#include "trajkit/tipping.hpp"

namespace py = pybind11;
using namespace trajkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Point> points_from(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw ContractError("expected an (n, 2) array");
  auto v = a.unchecked<2>();
  std::vector<Point> out;
  for (py::ssize_t i = 0; i < v.shape(0); ++i) out.emplace_back(v(i, 0), v(i, 1));
  return out;
}

// (N, T, 2) -> TrackSet
TrackSet tracks_from(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 2) throw ContractError("expected an (agents, steps, 2) array");
  auto v = a.unchecked<3>();
  TrackSet out;
  for (py::ssize_t n = 0; n < v.shape(0); ++n) {
    Track t(2, v.shape(1));
    for (py::ssize_t k = 0; k < v.shape(1); ++k) t.col(k) = Point(v(n, k, 0), v(n, k, 1));
    out.push_back(t);
  }
  return out;
}

GmmModel mixture_from(const std::vector<double>& weights, const Array& means, const Array& covs) {
  GmmModel m;
  m.weights = weights;
  m.means = points_from(means);
  if (covs.ndim() != 3 || covs.shape(1) != 2 || covs.shape(2) != 2) {
    throw ContractError("covs must be (k, 2, 2)");
  }
  auto c = covs.unchecked<3>();
  for (py::ssize_t k = 0; k < c.shape(0); ++k) {
    Eigen::Matrix2d s;
    s << c(k, 0, 0), c(k, 0, 1), c(k, 1, 0), c(k, 1, 1);
    m.covs.push_back(s);
  }
  if (m.means.size() != m.weights.size() || m.covs.size() != m.weights.size()) {
    throw ContractError("weights, means and covs disagree on K");
  }
  return m;
}

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "trajkit native core";
  py::register_exception<Error>(m, "TrajkitError");
  m.attr("__version__") = TRAJKIT_VERSION;

  m.def("run_cli", &cli::run, py::arg("args"),
        "Run one trajkit command line (without the program name); returns the exit code.");

  m.def(
      "fit_gmm",
      [](const Array& points, std::vector<int> k_candidates, std::uint64_t seed) {
        FitConfig cfg;
        cfg.k_candidates = std::move(k_candidates);
        cfg.rng_seed = seed;
        const auto pts = points_from(points);
        return to_py(to_json(select_by_bic(pts, cfg)));
      },
      py::arg("points"), py::arg("k_candidates") = std::vector<int>{1, 2, 3, 4, 5},
      py::arg("seed") = 0);

  m.def(
      "mahalanobis_gmm",
      [](const std::vector<double>& weights, const Array& means, const Array& covs,
         std::pair<double, double> p) {
        return tipping_md(mixture_from(weights, means, covs), Point(p.first, p.second));
      },
      py::arg("weights"), py::arg("means"), py::arg("covs"), py::arg("point"));

  m.def(
      "evaluate",
      [](const Array& truth, const Array& samples, int bon_samples) {
        // samples: (S, N, T, 2)
        if (samples.ndim() != 4) throw ContractError("samples must be (S, agents, steps, 2)");
        Scene scene;
        scene.future = tracks_from(truth);
        PredictionSet preds;
        auto v = samples.unchecked<4>();
        for (py::ssize_t s = 0; s < v.shape(0); ++s) {
          TrackSet ts;
          for (py::ssize_t n = 0; n < v.shape(1); ++n) {
            Track t(2, v.shape(2));
            for (py::ssize_t k = 0; k < v.shape(2); ++k) t.col(k) = Point(v(s, n, k, 0), v(s, n, k, 1));
            ts.push_back(t);
          }
          preds.samples.push_back(ts);
        }
        // Only the future horizon is scored; give the scene a stationary two-step past.
        for (const auto& f : scene.future) {
          Track o(2, 2);
          o.colwise() = f.col(0);
          scene.observed.push_back(o);
          scene.agent_ids.push_back(static_cast<std::int64_t>(scene.agent_ids.size()));
        }
        EvalConfig cfg;
        cfg.bon_samples = static_cast<std::size_t>(bon_samples);
        return to_py(to_json(evaluate(scene, preds, cfg)));
      },
      py::arg("truth"), py::arg("samples"), py::arg("bon_samples") = 20);

  m.def(
      "load_scenes",
      [](const std::string& path) { return to_py(scenes_to_json(load_scenes(path))); },
      py::arg("path"));

  m.def(
      "checkpoint_param_count",
      [](const std::string& path) { return load_checkpoint(path).num_params(); },
      py::arg("path"));

  m.def("default_param_count", [] { return SocialImplicit().num_params(); });
}
