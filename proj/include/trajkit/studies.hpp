#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trajkit/gmm.hpp"
#include "trajkit/kde.hpp"
#include "trajkit/metrics.hpp"
#include "trajkit/trajdata.hpp"

namespace trajkit {

// ---- shift sensitivity -------------------------------------------------

enum class ShiftAxis { x, y, both };

ShiftAxis parse_axis(const std::string& text);
std::string to_string(ShiftAxis axis);
Point shift_vector(double delta, ShiftAxis axis);

inline const std::vector<double> kDefaultShifts{-0.10, -0.01, 0.01, 0.10};

struct SensitivityRow {
  double shift = 0.0;
  MetricReport report;
  // Differences against the unshifted baseline (first row).
  double d_ade = 0.0, d_fde = 0.0, d_amd = 0.0, d_amv = 0.0;
  std::optional<double> d_kde_nll;
};

/// First row is the unshifted baseline (shift 0), then one row per shift.
std::vector<SensitivityRow> shift_sensitivity(std::span<const Scene> scenes,
                                              std::span<const PredictionSet> preds,
                                              std::span<const double> shifts, ShiftAxis axis,
                                              const EvalConfig& cfg);

void write_sensitivity_csv(std::ostream& out, std::span<const SensitivityRow> rows);

/// Straight-line truth with S i.i.d. N(truth, sigma^2 I) samples per point.
/// Each (agent, t) cloud is re-centred so its sample mean equals the truth.
struct SyntheticCloud {
  Scene scene;
  PredictionSet preds;
};

SyntheticCloud wide_cloud(std::size_t samples = 20, double sigma = 1.0, std::size_t agents = 1,
                          int horizon = 12, std::uint64_t seed = 0);

// ---- kernel sensitivity ------------------------------------------------

// Prediction clouds scored against a truth at the origin:
//   gaussian     N(0, 0.5^2 I)
//   gmm          equal mix of N((+-0.6, 0), 0.2^2 I)
//   uniform      uniform on [-1, 1]^2
//   point-mass   N((0.05, 0), 0.02^2 I)
//   ring         radius 0.8 + N(0, 0.05^2), uniform angle
const std::vector<std::string>& mixture_families();
Point draw_family(const std::string& family, std::mt19937_64& rng);

struct KernelSensitivityConfig {
  std::size_t samples = 20;
  std::size_t trials = 200;
  BandwidthRule rule = BandwidthRule::scott;
  double fixed_bandwidth = 0.0;
  std::uint64_t seed = 0;
  std::vector<Kernel> kernels{Kernel::gaussian,    Kernel::tophat, Kernel::epanechnikov,
                              Kernel::exponential, Kernel::linear, Kernel::cosine};
};

struct KernelSensitivityRow {
  std::string family;
  Kernel kernel = Kernel::gaussian;
  double nll = 0.0;  // mean over trials
  int rank = 0;      // 1 = lowest NLL among families for this kernel
  std::size_t underflow_trials = 0;
};

std::vector<KernelSensitivityRow> kernel_sensitivity(const KernelSensitivityConfig& cfg);

/// True when the two kernels rank at least one family differently.
bool rankings_differ(std::span<const KernelSensitivityRow> rows, Kernel a, Kernel b);

void write_kernel_sensitivity_csv(std::ostream& out, std::span<const KernelSensitivityRow> rows);

// ---- GMM convergence ---------------------------------------------------

/// Two-component reference mixture the convergence study samples from.
GmmModel convergence_reference();

struct ConvergenceConfig {
  std::vector<std::size_t> counts{10, 30, 100, 300, 1000, 3000};
  std::size_t reps = 20;
  FitConfig fit;
  Point test_point{2.0, 1.5};
  std::uint64_t seed = 0;
};

struct ConvergenceRow {
  std::size_t samples = 0;
  double mean_error = 0.0;  // |fitted mixture mean - true mean|, averaged over reps
  double cov_error = 0.0;   // Frobenius norm of the total-covariance error
  double md = 0.0;          // Tipping distance of test_point under the fit
  double mean_k = 0.0;      // average number of selected components
};

std::vector<ConvergenceRow> gmm_convergence(const ConvergenceConfig& cfg);

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows,
                           double reference_md);

// ---- two-mode toy ------------------------------------------------------

/// One agent walking along +x at `step` m per frame, then veering left or
/// right by `lateral` * (t + 1) m. All observations share the same shape up
/// to a random translation; even scenes turn left, odd scenes turn right.
struct BimodalConfig {
  std::size_t scenes = 64;
  double step = 0.2;
  double lateral = 0.1;
  int t_obs = 8;
  int t_pred = 12;
  std::uint64_t seed = 0;
};

std::vector<Scene> bimodal_scenes(const BimodalConfig& cfg);

/// Future of the given scene's observation under mode +1 (left) or -1 (right).
Track bimodal_future(const Scene& scene, int sign, const BimodalConfig& cfg);

}  // namespace trajkit
