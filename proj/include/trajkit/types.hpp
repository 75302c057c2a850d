#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace trajkit {

/// A 2-D location in world coordinates (meters).
using Point = Eigen::Vector2d;

/// One agent's positions over time, one column per timestep (2 x T).
using Track = Eigen::Matrix2Xd;

/// One track per agent, all on the same time grid.
using TrackSet = std::vector<Track>;

/// S stochastic futures for the agents of one scene.
struct PredictionSet {
  std::vector<TrackSet> samples;  // [S][N] -> 2 x T_p
  std::string scene_ref;

  std::size_t num_samples() const { return samples.size(); }
  std::size_t num_agents() const { return samples.empty() ? 0 : samples.front().size(); }
  std::size_t horizon() const;
};

/// Number of timesteps shared by every track; throws ContractError when ragged.
std::size_t common_horizon(const TrackSet& tracks);

/// Throws ContractError unless both sets have the same agent count and horizon.
void require_same_shape(const TrackSet& a, const TrackSet& b, const char* what);

/// Throws ContractError unless every sample matches the truth shape and S >= 1.
void require_consistent(const PredictionSet& preds, const TrackSet& truth);

/// Returns the first `count` samples (all of them when count is 0 or too large).
PredictionSet take_samples(const PredictionSet& preds, std::size_t count);

}  // namespace trajkit
