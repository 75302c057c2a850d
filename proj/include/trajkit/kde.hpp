#pragma once

#include <optional>
#include <span>
#include <string>

#include "trajkit/types.hpp"

namespace trajkit {

enum class Kernel { gaussian, tophat, epanechnikov, exponential, linear, cosine };
enum class BandwidthRule { scott, silverman, fixed };

struct KdeConfig {
  Kernel kernel = Kernel::gaussian;
  BandwidthRule rule = BandwidthRule::scott;
  double fixed_bandwidth = 0.0;  // used when rule == fixed

  void validate() const;
};

inline constexpr double kKdeFallbackBandwidth = 1e-3;  // m
inline constexpr double kKdeDensityFloor = 1e-300;

Kernel parse_kernel(const std::string& name);
std::string to_string(Kernel k);
/// Accepts "scott", "silverman" or a positive number (fixed bandwidth).
KdeConfig parse_bandwidth(const std::string& text, KdeConfig base = {});
std::string bandwidth_label(const KdeConfig& cfg);

/// Radially symmetric kernel profile k(r/h) normalised to integrate to one in 2-D.
double kernel_density_2d(Kernel kernel, double r, double h);

/// Isotropic bandwidth: rule factor n^(-1/6) times a pooled scale of the
/// samples. Scott pools the per-axis standard deviations; Silverman uses the
/// robust min(sd, IQR / 1.349) per axis. Returns nullopt for a zero-spread cloud.
std::optional<double> select_bandwidth(std::span<const Point> samples, const KdeConfig& cfg);

struct KdeEstimate {
  double density = 0.0;
  double bandwidth = 0.0;
  bool fallback = false;  // zero-spread cloud forced the fixed fallback bandwidth
};

KdeEstimate kde_density(std::span<const Point> samples, const Point& at, const KdeConfig& cfg);

}  // namespace trajkit
