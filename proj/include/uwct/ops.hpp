#pragma once

#include <initializer_list>
#include <span>

#include "uwct/rng.hpp"
#include "uwct/tensor.hpp"

namespace uwct {

enum class PadMode { Zero, Reflect };

// All ops are differentiable unless noted. Image tensors are NCHW; conv
// weights are OIKK (out channels, in channels, kernel h, kernel w) and
// transpose-conv weights are IOKK.

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s);
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T s);
template <typename T>
Tensor<T> neg(const Tensor<T>& x);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T negative_slope);
template <typename T>
Tensor<T> tanh_op(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> abs_op(const Tensor<T>& x);
template <typename T>
Tensor<T> square(const Tensor<T>& x);
// Natural log; all inputs must be > 0.
template <typename T>
Tensor<T> log_op(const Tensor<T>& x);
// Gradient is passed through only strictly inside [lo, hi].
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

// Mean over the given axes (duplicates rejected); the reduced axes are
// dropped. An empty axis set is the identity. Reducing every axis yields a
// scalar of shape [1].
template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::span<const int> axes);
template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::initializer_list<int> axes);
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);
template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);

// Reflect padding without edge repetition; requires pad <= extent-1.
template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& x, int pad);

// Cross-correlation. Output extent = floor((H + 2*pad - K)/stride) + 1.
// PadMode::Reflect applies reflect padding before an unpadded convolution.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, int stride,
                 int pad, PadMode mode = PadMode::Zero);

// Fractionally strided convolution. Output extent =
// (H-1)*stride - 2*pad + K + output_pad.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight,
                           int stride, int pad, int output_pad = 0);

// Per-sample, per-channel standardization followed by the affine map
// gamma * xhat + beta. gamma and beta have shape [C].
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                        const Tensor<T>& beta, T epsilon);

// Adds bias[c] to every pixel of channel c. bias has shape [C].
template <typename T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> channel_slice(const Tensor<T>& x, int64_t first, int64_t count);
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts);

// BT.601 luminance of an NCHW tensor with 1 or 3 channels; returns N1HW.
template <typename T>
Tensor<T> luminance(const Tensor<T>& x);

// Closed-form conv arithmetic used by shape checks and tests.
int64_t conv_out_extent(int64_t in, int64_t kernel, int64_t stride, int64_t pad);
int64_t conv_transpose_out_extent(int64_t in, int64_t kernel, int64_t stride,
                                  int64_t pad, int64_t output_pad);

// Fills a leaf tensor with draws from N(mean, stddev^2).
template <typename T>
void normal_init(Tensor<T>& tensor, Rng& rng, T mean, T stddev);

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <typename T>
Tensor<T> operator*(T s, const Tensor<T>& x) { return mul_scalar(x, s); }

}  // namespace uwct
