#include "trajkit/social_model.hpp"

#include <cmath>

#include "trajkit/errors.hpp"

namespace trajkit {

ZoneConfig ZoneConfig::eth() {
  ZoneConfig cfg;
  cfg.noise_sigma = {0.175, 1.5, 4.0, 8.0};
  return cfg;
}

void ZoneConfig::validate() const {
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (!(boundaries[i] >= 0.0)) throw ContractError("zone boundaries must be non-negative");
    if (i > 0 && !(boundaries[i] > boundaries[i - 1])) {
      throw ContractError("zone boundaries must be strictly increasing");
    }
  }
  for (double s : noise_sigma) {
    if (!(s >= 0.0)) throw ContractError("zone noise sigma must be non-negative");
  }
}

int ZoneConfig::zone_of(double speed) const {
  int z = 0;
  while (z < kNumZones - 1 && speed >= boundaries[static_cast<std::size_t>(z)]) ++z;
  return z;
}

double max_observed_speed(const Track& observed, double dt) {
  double best = 0.0;
  for (Eigen::Index t = 1; t < observed.cols(); ++t) {
    best = std::max(best, (observed.col(t) - observed.col(t - 1)).norm() / dt);
  }
  return best;
}

std::vector<int> assign_zones(const Scene& scene, const ZoneConfig& cfg) {
  if (scene.t_obs() < 2) throw ContractError("zone assignment needs two observed steps");
  std::vector<int> zones;
  zones.reserve(scene.num_agents());
  for (const auto& obs : scene.observed) {
    zones.push_back(cfg.zone_of(max_observed_speed(obs, scene.frame_stride_seconds)));
  }
  return zones;
}

std::array<std::vector<std::size_t>, kNumZones> zone_groups(const std::vector<int>& zones) {
  std::array<std::vector<std::size_t>, kNumZones> groups;
  for (std::size_t n = 0; n < zones.size(); ++n) {
    groups[static_cast<std::size_t>(zones[n])].push_back(n);
  }
  return groups;
}

SocialImplicit::SocialImplicit(int to, int tp, ZoneConfig zone_cfg, std::uint64_t init_seed)
    : t_obs(to), t_pred(tp), zones(zone_cfg),
      cells{CellParams(2, to, tp), CellParams(2, to, tp), CellParams(2, to, tp),
            CellParams(2, to, tp)} {
  zones.validate();
  std::mt19937_64 rng(init_seed);
  for (auto& c : cells) c.init(rng);
}

std::size_t SocialImplicit::num_params() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.num_params();
  return n;
}

void SocialImplicit::zero_grad() {
  for (auto& c : cells) c.zero_grad();
}

std::vector<ParamRef> SocialImplicit::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t z = 0; z < cells.size(); ++z) {
    auto p = cells[z].parameters("zone" + std::to_string(z + 1) + ".");
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Tensor3 encode_observed(const Scene& scene, const std::vector<std::size_t>& agents, int t_obs) {
  Tensor3 x(2, t_obs, static_cast<int>(agents.size()));
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const Track& obs = scene.observed[agents[k]];
    for (int t = 1; t < t_obs; ++t) {
      const Point d = obs.col(t) - obs.col(t - 1);
      x(0, t, static_cast<int>(k)) = d.x();
      x(1, t, static_cast<int>(k)) = d.y();
    }
  }
  return x;
}

TrackSet model_forward(const SocialImplicit& model, const Scene& scene, std::mt19937_64& rng,
                       ForwardCache* cache) {
  scene.validate();
  if (static_cast<int>(scene.t_obs()) != model.t_obs) {
    throw ContractError("scene has " + std::to_string(scene.t_obs()) +
                        " observed steps, model expects " + std::to_string(model.t_obs));
  }
  const std::vector<int> zones = assign_zones(scene, model.zones);
  const auto groups = zone_groups(zones);

  TrackSet out(scene.num_agents(), Track::Zero(2, model.t_pred));
  for (std::size_t z = 0; z < groups.size(); ++z) {
    const auto& agents = groups[z];
    if (agents.empty()) continue;
    const Tensor3 x = encode_observed(scene, agents, model.t_obs);
    Tensor3 noise(x.c, x.h, x.w);
    std::normal_distribution<double> gauss(0.0, model.zones.noise_sigma[z]);
    for (auto& v : noise.v) v = gauss(rng);
    const Tensor3 disp =
        cell_forward(model.cells[z], x, noise, cache ? &cache->cells[z] : nullptr);
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const Track& obs = scene.observed[agents[k]];
      Point pos = obs.col(obs.cols() - 1);
      Track& pred = out[agents[k]];
      for (int t = 0; t < model.t_pred; ++t) {
        pos += Point(disp(0, t, static_cast<int>(k)), disp(1, t, static_cast<int>(k)));
        pred.col(t) = pos;
      }
    }
  }
  if (cache) {
    cache->zones = zones;
    cache->groups = groups;
  }
  return out;
}

TrackSet model_forward(const SocialImplicit& model, const Scene& scene, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return model_forward(model, scene, rng);
}

void model_backward(SocialImplicit& model, const ForwardCache& cache, const TrackSet& grad) {
  for (std::size_t z = 0; z < cache.groups.size(); ++z) {
    const auto& agents = cache.groups[z];
    if (agents.empty()) continue;
    Tensor3 g_disp(2, model.t_pred, static_cast<int>(agents.size()));
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const Track& g = grad[agents[k]];
      // Position t sums displacements 0..t, so displacement t collects grads t..T_p-1.
      Point acc = Point::Zero();
      for (int t = model.t_pred - 1; t >= 0; --t) {
        acc += g.col(t);
        g_disp(0, t, static_cast<int>(k)) = acc.x();
        g_disp(1, t, static_cast<int>(k)) = acc.y();
      }
    }
    cell_backward(model.cells[z], cache.cells[z], g_disp);
  }
}

PredictionSet sample_predictions(const SocialImplicit& model, const Scene& scene,
                                 std::size_t count, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  PredictionSet preds;
  preds.samples.reserve(count);
  for (std::size_t s = 0; s < count; ++s) preds.samples.push_back(model_forward(model, scene, rng));
  return preds;
}

}  // namespace trajkit
