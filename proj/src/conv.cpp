#include "trajkit/conv.hpp"

#include <cmath>

#include "trajkit/errors.hpp"

namespace trajkit {

Tensor3 Tensor3::swap_ch() const {
  Tensor3 out(h, c, w);
  for (int ci = 0; ci < c; ++ci)
    for (int hi = 0; hi < h; ++hi)
      for (int wi = 0; wi < w; ++wi) out(hi, ci, wi) = (*this)(ci, hi, wi);
  return out;
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  if (other.c != c || other.h != h || other.w != w) throw ContractError("tensor shape mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.v[i];
  return *this;
}

double Tensor3::dot(const Tensor3& other) const {
  if (other.size() != size()) throw ContractError("tensor shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * other.v[i];
  return s;
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel_h, int kernel_w, int pad_h, int pad_w)
    : in_ch(in_channels), out_ch(out_channels), kh(kernel_h), kw(kernel_w), ph(pad_h), pw(pad_w),
      weight(static_cast<std::size_t>(out_channels * in_channels * kernel_h * kernel_w), 0.0),
      bias(static_cast<std::size_t>(out_channels), 0.0),
      grad_weight(weight.size(), 0.0),
      grad_bias(bias.size(), 0.0) {}

Tensor3 Conv2d::forward(const Tensor3& x) const {
  if (x.c != in_ch) throw ContractError("conv input has wrong channel count");
  const int oh = x.h + 2 * ph - kh + 1;
  const int ow = x.w + 2 * pw - kw + 1;
  Tensor3 y(out_ch, oh, ow);
  for (int o = 0; o < out_ch; ++o) {
    for (int r = 0; r < oh; ++r) {
      for (int q = 0; q < ow; ++q) {
        double acc = bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < in_ch; ++i) {
          for (int a = 0; a < kh; ++a) {
            const int xr = r + a - ph;
            if (xr < 0 || xr >= x.h) continue;
            for (int b = 0; b < kw; ++b) {
              const int xq = q + b - pw;
              if (xq < 0 || xq >= x.w) continue;
              acc += w_at(o, i, a, b) * x(i, xr, xq);
            }
          }
        }
        y(o, r, q) = acc;
      }
    }
  }
  return y;
}

Tensor3 Conv2d::backward(const Tensor3& x, const Tensor3& grad_out) {
  Tensor3 gx(x.c, x.h, x.w);
  for (int o = 0; o < out_ch; ++o) {
    for (int r = 0; r < grad_out.h; ++r) {
      for (int q = 0; q < grad_out.w; ++q) {
        const double g = grad_out(o, r, q);
        if (g == 0.0) continue;
        grad_bias[static_cast<std::size_t>(o)] += g;
        for (int i = 0; i < in_ch; ++i) {
          for (int a = 0; a < kh; ++a) {
            const int xr = r + a - ph;
            if (xr < 0 || xr >= x.h) continue;
            for (int b = 0; b < kw; ++b) {
              const int xq = q + b - pw;
              if (xq < 0 || xq >= x.w) continue;
              grad_weight[static_cast<std::size_t>(((o * in_ch + i) * kh + a) * kw + b)] +=
                  g * x(i, xr, xq);
              gx(i, xr, xq) += g * w_at(o, i, a, b);
            }
          }
        }
      }
    }
  }
  return gx;
}

void Conv2d::zero_grad() {
  std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

void Conv2d::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kh * kw));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& w : weight) w = u(rng);
  for (auto& b : bias) b = u(rng);
}

}  // namespace trajkit
