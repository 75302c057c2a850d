#include "trajkit/kde.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "trajkit/errors.hpp"
#include "trajkit/format.hpp"

namespace trajkit {
namespace {

using std::numbers::pi;

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double axis_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void KdeConfig::validate() const {
  if (rule == BandwidthRule::fixed && !(fixed_bandwidth > 0.0)) {
    throw ContractError("fixed KDE bandwidth must be positive");
  }
}

Kernel parse_kernel(const std::string& name) {
  if (name == "gaussian") return Kernel::gaussian;
  if (name == "tophat") return Kernel::tophat;
  if (name == "epanechnikov") return Kernel::epanechnikov;
  if (name == "exponential") return Kernel::exponential;
  if (name == "linear") return Kernel::linear;
  if (name == "cosine") return Kernel::cosine;
  throw ContractError("unknown kernel '" + name + "'");
}

std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::gaussian: return "gaussian";
    case Kernel::tophat: return "tophat";
    case Kernel::epanechnikov: return "epanechnikov";
    case Kernel::exponential: return "exponential";
    case Kernel::linear: return "linear";
    case Kernel::cosine: return "cosine";
  }
  return "unknown";
}

KdeConfig parse_bandwidth(const std::string& text, KdeConfig base) {
  if (text == "scott") {
    base.rule = BandwidthRule::scott;
  } else if (text == "silverman") {
    base.rule = BandwidthRule::silverman;
  } else {
    double h = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), h);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ContractError("bandwidth must be 'scott', 'silverman' or a number, got '" + text + "'");
    }
    base.rule = BandwidthRule::fixed;
    base.fixed_bandwidth = h;
  }
  base.validate();
  return base;
}

std::string bandwidth_label(const KdeConfig& cfg) {
  switch (cfg.rule) {
    case BandwidthRule::scott: return "scott";
    case BandwidthRule::silverman: return "silverman";
    case BandwidthRule::fixed: return format_real(cfg.fixed_bandwidth);
  }
  return "unknown";
}

double kernel_density_2d(Kernel kernel, double r, double h) {
  const double u = r / h;
  const double h2 = h * h;
  switch (kernel) {
    case Kernel::gaussian: return std::exp(-0.5 * u * u) / (2.0 * pi * h2);
    case Kernel::tophat: return u < 1.0 ? 1.0 / (pi * h2) : 0.0;
    case Kernel::epanechnikov: return u < 1.0 ? (1.0 - u * u) / (0.5 * pi * h2) : 0.0;
    case Kernel::exponential: return std::exp(-u) / (2.0 * pi * h2);
    case Kernel::linear: return u < 1.0 ? (1.0 - u) / (pi * h2 / 3.0) : 0.0;
    case Kernel::cosine:
      return u < 1.0 ? std::cos(0.5 * pi * u) / ((4.0 - 8.0 / pi) * h2) : 0.0;
  }
  return 0.0;
}

std::optional<double> select_bandwidth(std::span<const Point> samples, const KdeConfig& cfg) {
  if (cfg.rule == BandwidthRule::fixed) return cfg.fixed_bandwidth;
  if (samples.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(samples.size());
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& p : samples) {
    xs.push_back(p.x());
    ys.push_back(p.y());
  }
  double sx = axis_sd(xs);
  double sy = axis_sd(ys);
  if (cfg.rule == BandwidthRule::silverman) {
    const auto robust = [](const std::vector<double>& v, double sd) {
      const double iqr = (quantile(v, 0.75) - quantile(v, 0.25)) / 1.349;
      return iqr > 0.0 ? std::min(sd, iqr) : sd;
    };
    sx = robust(xs, sx);
    sy = robust(ys, sy);
  }
  const double scale = std::sqrt(0.5 * (sx * sx + sy * sy));
  if (!(scale > 0.0)) return std::nullopt;
  // (d + 4) = 6 for planar data.
  return scale * std::pow(n, -1.0 / 6.0);
}

KdeEstimate kde_density(std::span<const Point> samples, const Point& at, const KdeConfig& cfg) {
  if (samples.empty()) throw ContractError("KDE needs at least one sample");
  KdeEstimate est;
  if (auto h = select_bandwidth(samples, cfg)) {
    est.bandwidth = *h;
  } else {
    est.bandwidth = kKdeFallbackBandwidth;
    est.fallback = true;
  }
  double sum = 0.0;
  for (const auto& p : samples) sum += kernel_density_2d(cfg.kernel, (p - at).norm(), est.bandwidth);
  est.density = sum / static_cast<double>(samples.size());
  return est;
}

}  // namespace trajkit
