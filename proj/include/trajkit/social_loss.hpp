#pragma once

#include <array>
#include <span>
#include <vector>

#include "trajkit/types.hpp"

namespace trajkit {

struct LossWeights {
  double triplet = 1e-4;     // alpha_1
  double g_distance = 1e-4;  // alpha_2 (1e-5 is the other published setting)
  double g_angle = 1e-4;     // alpha_3
};

/// Indices of the closest, second closest and farthest sample by L1 distance.
/// Ties go to the lowest index.
struct TripletIndex {
  std::size_t closest = 0;
  std::size_t second = 0;
  std::size_t farthest = 0;
};

/// Scene-level L1 distance: sum over agents, steps and coordinates.
double l1_distance(const TrackSet& a, const TrackSet& b);

TripletIndex select_triplet(std::span<const double> distances);

/// Mean over agents and step pairs (t < j) of | |p_t - p_j| - |q_t - q_j| |.
double geometric_distance_loss(const TrackSet& pred, const TrackSet& truth,
                               TrackSet* grad = nullptr);
/// Same over headings atan2 between step pairs, differences wrapped to (-pi, pi].
double geometric_angle_loss(const TrackSet& pred, const TrackSet& truth, TrackSet* grad = nullptr);

double wrap_angle(double a);

struct SocialLossResult {
  double total = 0.0;
  double recon = 0.0;
  double triplet = 0.0;
  double g_distance = 0.0;
  double g_angle = 0.0;
  TripletIndex index;
  std::vector<double> distances;  // L1 distance of every sample to the truth
  // Gradients w.r.t. the closest, second and farthest samples (in that order).
  std::array<TrackSet, 3> grads;
};

/// recon + a1 * triplet + a2 * G-distance + a3 * G-angle. L1 norms are summed
/// over steps and coordinates and averaged over agents. Needs m >= 3 samples.
SocialLossResult social_loss(std::span<const TrackSet> samples, const TrackSet& truth,
                             const LossWeights& weights);

}  // namespace trajkit
