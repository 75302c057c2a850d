#include "trajkit/imle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "trajkit/errors.hpp"
#include "trajkit/format.hpp"

namespace trajkit {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string breakdown(const TrainLogRow& r) {
  std::ostringstream os;
  os << "epoch " << r.epoch << ", batch " << r.batch << ": loss=" << r.loss
     << " recon=" << r.recon << " triplet=" << r.triplet << " gdist=" << r.gdist
     << " gangle=" << r.gangle;
  return os.str();
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(base ^ splitmix64(a)) + b);
}

void TrainerConfig::validate() const {
  if (epochs < 0) throw ContractError("epochs must be non-negative");
  if (!(lr > 0.0) || !(lr_after_drop > 0.0)) throw ContractError("learning rates must be positive");
  if (batch_size == 0) throw ContractError("batch size must be positive");
  if (m_samples < 3) throw ContractError("IMLE needs m >= 3 samples");
}

double TrainerConfig::lr_at(int epoch) const { return epoch >= lr_drop_epoch ? lr_after_drop : lr; }

TrainLogRow accumulate_batch(SocialImplicit& model, std::span<const Scene> scenes,
                             std::span<const std::size_t> batch,
                             std::span<const std::uint64_t> noise_seeds, const TrainerConfig& cfg) {
  if (batch.empty()) throw ContractError("empty batch");
  if (noise_seeds.size() != batch.size()) throw ContractError("one noise seed per batch scene");
  TrainLogRow row;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<TrackSet> samples(cfg.m_samples);
  std::vector<ForwardCache> caches(cfg.m_samples);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Scene& scene = scenes[batch[i]];
    std::mt19937_64 rng(noise_seeds[i]);
    for (std::size_t s = 0; s < cfg.m_samples; ++s) {
      samples[s] = model_forward(model, scene, rng, &caches[s]);
    }
    SocialLossResult r = social_loss(samples, scene.future, cfg.weights);
    row.loss += r.total * inv_b;
    row.recon += r.recon * inv_b;
    row.triplet += r.triplet * inv_b;
    row.gdist += r.g_distance * inv_b;
    row.gangle += r.g_angle * inv_b;
    const std::size_t roles[3] = {r.index.closest, r.index.second, r.index.farthest};
    for (int k = 0; k < 3; ++k) {
      for (auto& g : r.grads[static_cast<std::size_t>(k)]) g *= inv_b;
      model_backward(model, caches[roles[k]], r.grads[static_cast<std::size_t>(k)]);
    }
    if (cfg.record_selections) {
      row.selections.push_back({batch[i], r.index.closest, std::move(r.distances)});
    }
  }
  return row;
}

void sgd_step(SocialImplicit& model, double lr) {
  for (const ParamRef& p : model.parameters()) {
    for (std::size_t i = 0; i < p.size; ++i) p.data[i] -= lr * p.grad[i];
  }
}

TrainState train(SocialImplicit& model, std::span<const Scene> dataset, const TrainerConfig& cfg,
                 const TrainHooks& hooks) {
  cfg.validate();
  if (dataset.empty()) throw ContractError("training set is empty");
  for (const Scene& s : dataset) s.validate();

  TrainState state;
  std::mt19937_64 shuffler(stream_seed(cfg.seed, 0x5eed, 0));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffler);
    const double lr = cfg.lr_at(epoch);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      std::vector<std::uint64_t> seeds(batch.size());
      for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = stream_seed(cfg.seed, step, i);
      ++step;

      model.zero_grad();
      TrainLogRow row = accumulate_batch(model, dataset, batch, seeds, cfg);
      row.epoch = epoch;
      row.batch = batches;
      row.lr = lr;
      if (!std::isfinite(row.loss)) throw TrainingError("non-finite loss at " + breakdown(row));
      for (const ParamRef& p : model.parameters()) {
        for (std::size_t i = 0; i < p.size; ++i) {
          if (!std::isfinite(p.grad[i])) {
            throw TrainingError("non-finite gradient in " + p.name + " at " + breakdown(row));
          }
        }
      }
      sgd_step(model, lr);
      loss_sum += row.loss;
      ++batches;
      state.log.push_back(std::move(row));
    }
    const double mean = loss_sum / static_cast<double>(batches);
    state.epoch_loss.push_back(mean);
    state.epoch = epoch + 1;
    if (state.best_epoch < 0 || mean < state.best_loss) {
      state.best_epoch = epoch;
      state.best_loss = mean;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model, state);
  }
  return state;
}

void write_log_header(std::ostream& out) { out << "epoch,batch,loss,recon,triplet,gdist,gangle,lr\n"; }

void write_log_row(std::ostream& out, const TrainLogRow& r) {
  out << r.epoch << ',' << r.batch << ',' << format_real(r.loss) << ',' << format_real(r.recon)
      << ',' << format_real(r.triplet) << ',' << format_real(r.gdist) << ','
      << format_real(r.gangle) << ',' << format_real(r.lr) << '\n';
}

MetricReport evaluate_checkpoint(const SocialImplicit& model, std::span<const Scene> scenes,
                                 const EvalConfig& cfg, std::size_t sample_count,
                                 std::uint64_t seed) {
  std::vector<PredictionSet> preds;
  preds.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    preds.push_back(sample_predictions(model, scenes[i], sample_count, stream_seed(seed, i, 0)));
    preds.back().scene_ref = std::to_string(i);
  }
  return evaluate(scenes, preds, cfg);
}

}  // namespace trajkit
