#include "trajkit/social_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "trajkit/errors.hpp"

namespace trajkit {
namespace {

constexpr double kTinySquared = 1e-24;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

TrackSet zeros_like(const TrackSet& t) {
  TrackSet out;
  out.reserve(t.size());
  for (const auto& tr : t) out.push_back(Track::Zero(2, tr.cols()));
  return out;
}

// Adds scale * sign(a - b) to grad; returns the agent-averaged L1 norm of a - b.
double l1_agent_mean(const TrackSet& a, const TrackSet& b, TrackSet* grad_a, double scale) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const Track d = a[n] - b[n];
    s += d.cwiseAbs().sum();
    if (grad_a) (*grad_a)[n] += scale * d.unaryExpr([](double v) { return sign(v); });
  }
  return s / static_cast<double>(a.size());
}

std::size_t pair_count(Eigen::Index horizon) {
  return static_cast<std::size_t>(horizon * (horizon - 1) / 2);
}

}  // namespace

double l1_distance(const TrackSet& a, const TrackSet& b) {
  require_same_shape(a, b, "l1_distance");
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += (a[n] - b[n]).cwiseAbs().sum();
  return s;
}

TripletIndex select_triplet(std::span<const double> distances) {
  if (distances.size() < 3) throw ContractError("triplet selection needs at least 3 samples");
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
  // The farthest is the lowest index among the maximal distances.
  std::size_t far = order.back();
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] == distances[far] && i != order[0] && i != order[1]) {
      far = i;
      break;
    }
  }
  return {order[0], order[1], far};
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  r -= std::numbers::pi;
  return r == -std::numbers::pi ? std::numbers::pi : r;
}

double geometric_distance_loss(const TrackSet& pred, const TrackSet& truth, TrackSet* grad) {
  require_same_shape(pred, truth, "geometric_distance_loss");
  const Eigen::Index horizon = static_cast<Eigen::Index>(common_horizon(truth));
  const std::size_t pairs = pair_count(horizon);
  if (pairs == 0 || truth.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(pairs * truth.size());
  double total = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    for (Eigen::Index t = 0; t < horizon; ++t) {
      for (Eigen::Index j = t + 1; j < horizon; ++j) {
        const double dt = (truth[n].col(t) - truth[n].col(j)).norm();
        const Point v = pred[n].col(t) - pred[n].col(j);
        const double dp = v.norm();
        const double e = dt - dp;
        total += std::abs(e);
        if (grad && dp * dp > kTinySquared) {
          const Point g = -sign(e) * scale * v / dp;
          (*grad)[n].col(t) += g;
          (*grad)[n].col(j) -= g;
        }
      }
    }
  }
  return total * scale;
}

double geometric_angle_loss(const TrackSet& pred, const TrackSet& truth, TrackSet* grad) {
  require_same_shape(pred, truth, "geometric_angle_loss");
  const Eigen::Index horizon = static_cast<Eigen::Index>(common_horizon(truth));
  const std::size_t pairs = pair_count(horizon);
  if (pairs == 0 || truth.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(pairs * truth.size());
  double total = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    for (Eigen::Index t = 0; t < horizon; ++t) {
      for (Eigen::Index j = t + 1; j < horizon; ++j) {
        const Point u = truth[n].col(j) - truth[n].col(t);
        const Point v = pred[n].col(j) - pred[n].col(t);
        const double diff = wrap_angle(std::atan2(u.y(), u.x()) - std::atan2(v.y(), v.x()));
        total += std::abs(diff);
        const double r2 = v.squaredNorm();
        if (grad && r2 > kTinySquared) {
          // d|diff|/d(heading) = -sign(diff); d(heading)/d(p_j) = (-v_y, v_x) / |v|^2.
          const Point dh(-v.y() / r2, v.x() / r2);
          const Point g = -sign(diff) * scale * dh;
          (*grad)[n].col(j) += g;
          (*grad)[n].col(t) -= g;
        }
      }
    }
  }
  return total * scale;
}

SocialLossResult social_loss(std::span<const TrackSet> samples, const TrackSet& truth,
                             const LossWeights& weights) {
  if (samples.size() < 3) throw ContractError("social_loss needs at least 3 samples");
  if (truth.empty()) throw ContractError("social_loss: no agents");
  SocialLossResult r;
  r.distances.reserve(samples.size());
  for (const auto& s : samples) r.distances.push_back(l1_distance(s, truth));
  r.index = select_triplet(r.distances);

  const TrackSet& anchor = samples[r.index.closest];
  const TrackSet& positive = samples[r.index.second];
  const TrackSet& negative = samples[r.index.farthest];
  for (auto& g : r.grads) g = zeros_like(truth);
  const double inv_n = 1.0 / static_cast<double>(truth.size());

  r.recon = l1_agent_mean(anchor, truth, &r.grads[0], inv_n);

  // ||a - p||_1 - ||a - q||_1
  TrackSet g_ap = zeros_like(truth), g_aq = zeros_like(truth);
  const double ap = l1_agent_mean(anchor, positive, &g_ap, inv_n);
  const double aq = l1_agent_mean(anchor, negative, &g_aq, inv_n);
  r.triplet = ap - aq;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    r.grads[0][n] += weights.triplet * (g_ap[n] - g_aq[n]);
    r.grads[1][n] -= weights.triplet * g_ap[n];
    r.grads[2][n] += weights.triplet * g_aq[n];
  }

  TrackSet g_dist = zeros_like(truth), g_ang = zeros_like(truth);
  r.g_distance = geometric_distance_loss(anchor, truth, &g_dist);
  r.g_angle = geometric_angle_loss(anchor, truth, &g_ang);
  for (std::size_t n = 0; n < truth.size(); ++n) {
    r.grads[0][n] += weights.g_distance * g_dist[n] + weights.g_angle * g_ang[n];
  }

  r.total = r.recon + weights.triplet * r.triplet + weights.g_distance * r.g_distance +
            weights.g_angle * r.g_angle;
  return r;
}

}  // namespace trajkit
