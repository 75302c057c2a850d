#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trajkit/conv.hpp"

namespace trajkit {

/// Mutable view of one learnable tensor and its gradient buffer.
struct ParamRef {
  std::string name;
  std::vector<int> shape;
  double* data;
  double* grad;
  std::size_t size;
};

/// Learnable tensors of one Social-Cell.
///
/// Inputs are laid out as (P coordinates) x (T_o steps) x (N agents). The local
/// stream uses (k x 1) kernels, so each agent is convolved on its own; the
/// global stream uses (k x k) kernels that also mix neighbouring agents.
struct CellParams {
  CellParams(int coords = 2, int t_obs = 8, int t_pred = 12);

  int coords, t_obs, t_pred;

  Conv2d local_spatial;       // P -> P, kernel 3 along time
  Conv2d local_spatial_res;   // P -> P, kernel 1
  Conv2d local_temporal;      // T_o -> T_p, kernel 3 along coordinates
  Conv2d local_temporal_res;  // T_o -> T_p, kernel 1
  Conv2d global_spatial;      // P -> P, 3 x 3
  Conv2d global_spatial_res;
  Conv2d global_temporal;     // T_o -> T_p, 3 x 3
  Conv2d global_temporal_res;

  // All three start at zero, so a fresh cell outputs zeros.
  double noise_weight = 0.0;
  double global_weight = 0.0;
  double local_weight = 0.0;
  double grad_noise_weight = 0.0;
  double grad_global_weight = 0.0;
  double grad_local_weight = 0.0;

  void init(std::mt19937_64& rng);
  void zero_grad();
  std::size_t num_params() const;
  /// Views are invalidated if the CellParams moves.
  std::vector<ParamRef> parameters(const std::string& prefix);
};

/// Intermediate activations kept by cell_forward for cell_backward.
struct CellCache {
  Tensor3 noise;
  Tensor3 input;  // observed + noise_weight * noise
  Tensor3 local_pre, local_hidden, local_hidden_t, local_out;
  Tensor3 global_pre, global_hidden, global_hidden_t, global_out;
};

/// observed, noise: P x T_o x N. Returns P x T_p x N.
Tensor3 cell_forward(const CellParams& params, const Tensor3& observed, const Tensor3& noise,
                     CellCache* cache = nullptr);

/// Accumulates parameter gradients into `params` and returns d(loss)/d(observed).
Tensor3 cell_backward(CellParams& params, const CellCache& cache, const Tensor3& grad_out);

}  // namespace trajkit
