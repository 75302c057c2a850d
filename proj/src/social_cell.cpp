#include "trajkit/social_cell.hpp"

#include "trajkit/errors.hpp"

namespace trajkit {
namespace {

struct StreamOut {
  Tensor3 pre, hidden, hidden_t, out;
};

// spatial conv + ReLU + 1x1 residual, then move time to channels and apply
// the temporal conv + 1x1 residual; output is moved back to P x T_p x N.
StreamOut run_stream(const Conv2d& spatial, const Conv2d& spatial_res, const Conv2d& temporal,
                     const Conv2d& temporal_res, const Tensor3& x) {
  StreamOut s;
  s.pre = spatial.forward(x);
  s.hidden = spatial_res.forward(x);
  for (std::size_t i = 0; i < s.hidden.size(); ++i) {
    s.hidden.v[i] += s.pre.v[i] > 0.0 ? s.pre.v[i] : 0.0;
  }
  s.hidden_t = s.hidden.swap_ch();
  Tensor3 y = temporal.forward(s.hidden_t);
  y += temporal_res.forward(s.hidden_t);
  s.out = y.swap_ch();
  return s;
}

Tensor3 stream_backward(Conv2d& spatial, Conv2d& spatial_res, Conv2d& temporal,
                        Conv2d& temporal_res, const Tensor3& x, const Tensor3& pre,
                        const Tensor3& hidden_t, const Tensor3& grad_out) {
  const Tensor3 gy = grad_out.swap_ch();
  Tensor3 g_hidden_t = temporal.backward(hidden_t, gy);
  g_hidden_t += temporal_res.backward(hidden_t, gy);
  const Tensor3 g_hidden = g_hidden_t.swap_ch();
  Tensor3 g_pre = g_hidden;
  for (std::size_t i = 0; i < g_pre.size(); ++i) {
    if (!(pre.v[i] > 0.0)) g_pre.v[i] = 0.0;
  }
  Tensor3 gx = spatial.backward(x, g_pre);
  gx += spatial_res.backward(x, g_hidden);
  return gx;
}

}  // namespace

CellParams::CellParams(int p, int to, int tp)
    : coords(p), t_obs(to), t_pred(tp),
      local_spatial(p, p, 3, 1, 1, 0),
      local_spatial_res(p, p, 1, 1, 0, 0),
      local_temporal(to, tp, 3, 1, 1, 0),
      local_temporal_res(to, tp, 1, 1, 0, 0),
      global_spatial(p, p, 3, 3, 1, 1),
      global_spatial_res(p, p, 1, 1, 0, 0),
      global_temporal(to, tp, 3, 3, 1, 1),
      global_temporal_res(to, tp, 1, 1, 0, 0) {}

void CellParams::init(std::mt19937_64& rng) {
  for (Conv2d* c : {&local_spatial, &local_spatial_res, &local_temporal, &local_temporal_res,
                    &global_spatial, &global_spatial_res, &global_temporal, &global_temporal_res}) {
    c->init_uniform(rng);
  }
  noise_weight = global_weight = local_weight = 0.0;
}

void CellParams::zero_grad() {
  for (Conv2d* c : {&local_spatial, &local_spatial_res, &local_temporal, &local_temporal_res,
                    &global_spatial, &global_spatial_res, &global_temporal, &global_temporal_res}) {
    c->zero_grad();
  }
  grad_noise_weight = grad_global_weight = grad_local_weight = 0.0;
}

std::size_t CellParams::num_params() const {
  std::size_t n = 3;
  for (const Conv2d* c : {&local_spatial, &local_spatial_res, &local_temporal, &local_temporal_res,
                          &global_spatial, &global_spatial_res, &global_temporal,
                          &global_temporal_res}) {
    n += c->num_params();
  }
  return n;
}

std::vector<ParamRef> CellParams::parameters(const std::string& prefix) {
  std::vector<ParamRef> out;
  auto add_conv = [&](const std::string& name, Conv2d& c) {
    out.push_back({prefix + name + ".weight", c.weight_shape(), c.weight.data(),
                   c.grad_weight.data(), c.weight.size()});
    out.push_back({prefix + name + ".bias", {c.out_ch}, c.bias.data(), c.grad_bias.data(),
                   c.bias.size()});
  };
  add_conv("local.spatial", local_spatial);
  add_conv("local.spatial_res", local_spatial_res);
  add_conv("local.temporal", local_temporal);
  add_conv("local.temporal_res", local_temporal_res);
  add_conv("global.spatial", global_spatial);
  add_conv("global.spatial_res", global_spatial_res);
  add_conv("global.temporal", global_temporal);
  add_conv("global.temporal_res", global_temporal_res);
  out.push_back({prefix + "noise_weight", {1}, &noise_weight, &grad_noise_weight, 1});
  out.push_back({prefix + "global_weight", {1}, &global_weight, &grad_global_weight, 1});
  out.push_back({prefix + "local_weight", {1}, &local_weight, &grad_local_weight, 1});
  return out;
}

Tensor3 cell_forward(const CellParams& params, const Tensor3& observed, const Tensor3& noise,
                     CellCache* cache) {
  if (observed.c != params.coords || observed.h != params.t_obs) {
    throw ContractError("cell input must be P x T_o x N");
  }
  if (noise.c != observed.c || noise.h != observed.h || noise.w != observed.w) {
    throw ContractError("noise must match the cell input shape");
  }
  Tensor3 input = observed;
  for (std::size_t i = 0; i < input.size(); ++i) input.v[i] += params.noise_weight * noise.v[i];

  StreamOut local = run_stream(params.local_spatial, params.local_spatial_res,
                               params.local_temporal, params.local_temporal_res, input);
  StreamOut global = run_stream(params.global_spatial, params.global_spatial_res,
                                params.global_temporal, params.global_temporal_res, input);

  Tensor3 out(params.coords, params.t_pred, observed.w);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.v[i] = params.local_weight * local.out.v[i] + params.global_weight * global.out.v[i];
  }
  if (cache != nullptr) {
    cache->noise = noise;
    cache->input = std::move(input);
    cache->local_pre = std::move(local.pre);
    cache->local_hidden = std::move(local.hidden);
    cache->local_hidden_t = std::move(local.hidden_t);
    cache->local_out = std::move(local.out);
    cache->global_pre = std::move(global.pre);
    cache->global_hidden = std::move(global.hidden);
    cache->global_hidden_t = std::move(global.hidden_t);
    cache->global_out = std::move(global.out);
  }
  return out;
}

Tensor3 cell_backward(CellParams& params, const CellCache& cache, const Tensor3& grad_out) {
  params.grad_local_weight += grad_out.dot(cache.local_out);
  params.grad_global_weight += grad_out.dot(cache.global_out);

  Tensor3 g_local = grad_out;
  Tensor3 g_global = grad_out;
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    g_local.v[i] *= params.local_weight;
    g_global.v[i] *= params.global_weight;
  }
  Tensor3 g_input =
      stream_backward(params.local_spatial, params.local_spatial_res, params.local_temporal,
                      params.local_temporal_res, cache.input, cache.local_pre,
                      cache.local_hidden_t, g_local);
  g_input += stream_backward(params.global_spatial, params.global_spatial_res,
                             params.global_temporal, params.global_temporal_res, cache.input,
                             cache.global_pre, cache.global_hidden_t, g_global);
  params.grad_noise_weight += g_input.dot(cache.noise);
  return g_input;
}

}  // namespace trajkit
