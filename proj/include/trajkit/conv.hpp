#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace trajkit {

/// Dense channels-first 3-D tensor (channels x height x width).
struct Tensor3 {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int channels, int height, int width, double fill = 0.0)
      : c(channels), h(height), w(width),
        v(static_cast<std::size_t>(channels * height * width), fill) {}

  double& operator()(int ci, int hi, int wi) {
    return v[static_cast<std::size_t>((ci * h + hi) * w + wi)];
  }
  double operator()(int ci, int hi, int wi) const {
    return v[static_cast<std::size_t>((ci * h + hi) * w + wi)];
  }
  std::size_t size() const { return v.size(); }

  /// Swaps the channel and height axes.
  Tensor3 swap_ch() const;
  Tensor3& operator+=(const Tensor3& other);
  double dot(const Tensor3& other) const;
};

/// Stride-1 2-D convolution with zero padding. A (k x 1) kernel acts as a
/// 1-D convolution along the height axis applied independently per column.
class Conv2d {
 public:
  Conv2d(int in_channels, int out_channels, int kernel_h, int kernel_w, int pad_h, int pad_w);

  Tensor3 forward(const Tensor3& x) const;
  /// Accumulates weight/bias gradients and returns the gradient w.r.t. `x`.
  Tensor3 backward(const Tensor3& x, const Tensor3& grad_out);

  void zero_grad();
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(std::mt19937_64& rng);
  std::size_t num_params() const { return weight.size() + bias.size(); }
  std::vector<int> weight_shape() const { return {out_ch, in_ch, kh, kw}; }

  int in_ch, out_ch, kh, kw, ph, pw;
  std::vector<double> weight;  // [out][in][kh][kw]
  std::vector<double> bias;    // [out]
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;

 private:
  double& w_at(int o, int i, int a, int b) {
    return weight[static_cast<std::size_t>(((o * in_ch + i) * kh + a) * kw + b)];
  }
  double w_at(int o, int i, int a, int b) const {
    return weight[static_cast<std::size_t>(((o * in_ch + i) * kh + a) * kw + b)];
  }
};

}  // namespace trajkit
