#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "trajkit/social_cell.hpp"
#include "trajkit/trajdata.hpp"

namespace trajkit {

inline constexpr int kNumZones = 4;

/// Speed bands (m/s) and per-zone input noise.
struct ZoneConfig {
  // Zone z covers [boundaries[z-1], boundaries[z]); the last zone is open-ended.
  std::array<double, kNumZones - 1> boundaries{0.01, 0.1, 1.2};
  std::array<double, kNumZones> noise_sigma{0.05, 1.0, 4.0, 8.0};

  /// Noise levels used for the ETH split.
  static ZoneConfig eth();
  void validate() const;
  /// Zero-based zone index of a maximum observed speed.
  int zone_of(double speed) const;
};

/// Largest step speed |p[t] - p[t-1]| / dt over the observed steps.
double max_observed_speed(const Track& observed, double dt);

/// Zero-based zone index per agent.
std::vector<int> assign_zones(const Scene& scene, const ZoneConfig& cfg);

/// Agent indices per zone, in original order. Every agent appears exactly once.
std::array<std::vector<std::size_t>, kNumZones> zone_groups(const std::vector<int>& zones);

/// Four Social-Cells, one per speed zone.
struct SocialImplicit {
  explicit SocialImplicit(int t_obs = 8, int t_pred = 12, ZoneConfig zones = {},
                          std::uint64_t init_seed = 0);

  int t_obs, t_pred;
  ZoneConfig zones;
  std::array<CellParams, kNumZones> cells;

  std::size_t num_params() const;
  void zero_grad();
  /// Names follow `zone{1-4}.{local|global}.{layer}.{weight|bias}` and
  /// `zone{1-4}.{noise|global|local}_weight`.
  std::vector<ParamRef> parameters();
};

struct ForwardCache {
  std::vector<int> zones;
  std::array<std::vector<std::size_t>, kNumZones> groups;
  std::array<CellCache, kNumZones> cells;
};

/// Displacement encoding of the observed steps: column 0 is zero, column t is p[t] - p[t-1].
Tensor3 encode_observed(const Scene& scene, const std::vector<std::size_t>& agents, int t_obs);

/// One predicted future per agent in absolute coordinates (2 x T_p each).
/// Zone noise is drawn from `rng` zone by zone, for non-empty zones only.
TrackSet model_forward(const SocialImplicit& model, const Scene& scene, std::mt19937_64& rng,
                       ForwardCache* cache = nullptr);
TrackSet model_forward(const SocialImplicit& model, const Scene& scene, std::uint64_t rng_seed);

/// Backpropagates d(loss)/d(absolute prediction) into the model's gradient buffers.
void model_backward(SocialImplicit& model, const ForwardCache& cache, const TrackSet& grad);

/// Draws `count` samples for a scene with a single seeded generator.
PredictionSet sample_predictions(const SocialImplicit& model, const Scene& scene,
                                 std::size_t count, std::uint64_t rng_seed);

}  // namespace trajkit
