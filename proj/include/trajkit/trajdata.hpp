#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "trajkit/types.hpp"

namespace trajkit {

/// One line of an ETH/UCY track file: `frame_id agent_id x y`.
struct RawTrack {
  std::int64_t frame_id = 0;
  std::int64_t agent_id = 0;
  Point position = Point::Zero();
};

/// One observation/future window. Every agent is present at all timesteps.
struct Scene {
  TrackSet observed;  // N x (2 x T_o)
  TrackSet future;    // N x (2 x T_p)
  std::vector<std::int64_t> agent_ids;
  double frame_stride_seconds = 0.4;

  std::size_t num_agents() const { return observed.size(); }
  std::size_t t_obs() const { return common_horizon(observed); }
  std::size_t t_pred() const { return common_horizon(future); }

  /// Throws ContractError when the scene breaks its shape invariants.
  void validate() const;
};

struct WindowConfig {
  int t_obs = 8;
  int t_pred = 12;
  int stride = 1;
  // ETH/UCY annotations are sampled at 2.5 Hz.
  double seconds_per_step = 0.4;

  void validate() const;
};

/// Parses whitespace separated `frame agent x y` lines. Blank lines are skipped.
std::vector<RawTrack> parse_tracks(std::istream& in);

/// Slides a (t_obs + t_pred)-frame window over the sorted distinct frame ids.
/// Agents missing from any frame of a window are left out of that window;
/// windows with no complete agent are dropped.
std::vector<Scene> make_scenes(const std::vector<RawTrack>& tracks, const WindowConfig& cfg);

struct AugmentOps {
  std::optional<double> rotation_rad;
  bool reverse = false;
  bool flip_xy = false;
  std::optional<double> jitter_half_width;  // meters, uniform noise
  std::optional<double> speed_factor;
  const Scene* merge_with = nullptr;
};

inline constexpr double kDefaultJitter = 0.01;

/// Applies the selected augmentations in the order merge, reverse, speed,
/// rotation, flip, jitter. The rng seed only matters for jitter.
Scene augment(const Scene& scene, const AugmentOps& ops, std::uint64_t rng_seed);

}  // namespace trajkit
