#include "trajkit/types.hpp"

#include <algorithm>

#include "trajkit/errors.hpp"

namespace trajkit {

std::size_t PredictionSet::horizon() const {
  if (samples.empty()) return 0;
  return common_horizon(samples.front());
}

std::size_t common_horizon(const TrackSet& tracks) {
  if (tracks.empty()) return 0;
  const auto t = static_cast<std::size_t>(tracks.front().cols());
  for (const auto& track : tracks) {
    if (static_cast<std::size_t>(track.cols()) != t) {
      throw ContractError("tracks have different lengths");
    }
  }
  return t;
}

void require_same_shape(const TrackSet& a, const TrackSet& b, const char* what) {
  if (a.size() != b.size()) {
    throw ContractError(std::string(what) + ": agent count mismatch (" +
                        std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].cols() != b[n].cols()) {
      throw ContractError(std::string(what) + ": horizon mismatch for agent " +
                          std::to_string(n));
    }
  }
}

void require_consistent(const PredictionSet& preds, const TrackSet& truth) {
  if (preds.samples.empty()) throw ContractError("prediction set has no samples");
  for (const auto& sample : preds.samples) {
    require_same_shape(sample, truth, "prediction vs truth");
    for (const auto& track : sample) {
      if (!track.allFinite()) throw DataError("prediction set contains non-finite values");
    }
  }
}

PredictionSet take_samples(const PredictionSet& preds, std::size_t count) {
  if (count == 0 || count >= preds.samples.size()) return preds;
  PredictionSet out;
  out.scene_ref = preds.scene_ref;
  out.samples.assign(preds.samples.begin(),
                     preds.samples.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

}  // namespace trajkit
