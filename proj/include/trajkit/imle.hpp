#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "trajkit/metrics.hpp"
#include "trajkit/social_loss.hpp"
#include "trajkit/social_model.hpp"

namespace trajkit {

struct TrainerConfig {
  int epochs = 50;
  double lr = 1.0;
  int lr_drop_epoch = 45;  // zero-based epochs >= this use lr_after_drop
  double lr_after_drop = 0.1;
  std::size_t batch_size = 128;  // scenes per SGD step
  std::size_t m_samples = 20;
  std::uint64_t seed = 0;
  LossWeights weights;
  bool shuffle = true;
  bool record_selections = false;

  void validate() const;
  double lr_at(int epoch) const;
};

struct Selection {
  std::size_t scene = 0;  // index into the dataset
  std::size_t closest = 0;
  std::vector<double> distances;
};

/// One CSV log row; loss terms are means over the scenes of the batch.
struct TrainLogRow {
  int epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
  double recon = 0.0;
  double triplet = 0.0;
  double gdist = 0.0;
  double gangle = 0.0;
  double lr = 0.0;
  std::vector<Selection> selections;  // filled when record_selections is set
};

struct TrainState {
  int epoch = 0;  // completed epochs
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  int best_epoch = -1;
  double best_loss = 0.0;
  std::vector<TrainLogRow> log;
};

struct TrainHooks {
  std::function<void(int epoch, SocialImplicit& model, const TrainState& state)> on_epoch_end;
};

/// Gradients of the batch loss (mean over scenes) accumulated into the model.
/// Returns the mean loss terms. Noise for scene i of the batch comes from
/// a generator seeded with noise_seeds[i].
TrainLogRow accumulate_batch(SocialImplicit& model, std::span<const Scene> scenes,
                             std::span<const std::size_t> batch,
                             std::span<const std::uint64_t> noise_seeds, const TrainerConfig& cfg);

/// theta <- theta - lr * grad.
void sgd_step(SocialImplicit& model, double lr);

/// IMLE with plain SGD. Deterministic for a given (dataset, cfg). Throws
/// TrainingError on a non-finite loss or gradient.
TrainState train(SocialImplicit& model, std::span<const Scene> dataset, const TrainerConfig& cfg,
                 const TrainHooks& hooks = {});

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const TrainLogRow& row);

// Futures drawn per scene when a checkpoint is evaluated; the mixture fits
// behind AMD/AMV settle around this many samples.
inline constexpr std::size_t kDefaultDistributionSamples = 1000;

/// Draws `sample_count` futures per scene and scores them. Best-of-N uses the
/// first cfg.bon_samples samples.
MetricReport evaluate_checkpoint(const SocialImplicit& model, std::span<const Scene> scenes,
                                 const EvalConfig& cfg,
                                 std::size_t sample_count = kDefaultDistributionSamples,
                                 std::uint64_t seed = 0);

/// Seed for the k-th draw stream of a run; mixes all three with splitmix64.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace trajkit
