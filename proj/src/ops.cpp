#include "uwct/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwct {

namespace {

template <typename T>
void expect_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void expect_rank(const Tensor<T>& t, size_t rank, const char* op) {
  if (t.shape().size() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " +
                                std::to_string(rank) + " tensor, got shape " +
                                shape_str(t.shape()));
  }
}

// Elementwise unary op. grad_coeff(x, y) is the local derivative dy/dx.
template <typename T, typename Fwd, typename Coeff>
Tensor<T> unary_op(const Tensor<T>& x, Fwd fwd, Coeff grad_coeff) {
  const auto xv = x.values();
  std::vector<T> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return make_op<T>(x.shape(), std::move(out), {x},
                    [grad_coeff](TensorNode<T>& self) {
                      auto& parent = *self.parents[0];
                      if (!parent.needs_grad) return;
                      auto g = parent.grad_acc();
                      const auto& xv = parent.values;
                      const auto& yv = self.values;
                      const auto& gy = self.grad;
                      for (size_t i = 0; i < g.size(); ++i) {
                        g[i] += gy[i] * grad_coeff(xv[i], yv[i]);
                      }
                    });
}

// -------------------------------------------------------------------------
// Raw convolution kernels shared by conv2d / conv_transpose2d and their
// gradients. Activations are dense NCHW planes; weights are dense A*B*K*K
// with the first index named in the signature. All kernels accumulate into
// pre-zeroed outputs so they can also serve as gradient scatters.
// -------------------------------------------------------------------------

// out[n,a,oy,ox] += sum_{b,ky,kx} in[n,b,oy*s-p+ky, ox*s-p+kx] * w[a,b,ky,kx]
template <typename T>
void conv_gather_raw(const T* in, int64_t N, int64_t B, int64_t H, int64_t W,
                     const T* w, int64_t A, int64_t KH, int64_t KW, int64_t s,
                     int64_t p, T* out, int64_t Ho, int64_t Wo) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t a = 0; a < A; ++a) {
      T* out_plane = out + (n * A + a) * Ho * Wo;
      const T* w_a = w + a * B * KH * KW;
      for (int64_t oy = 0; oy < Ho; ++oy) {
        T* out_row = out_plane + oy * Wo;
        const int64_t iy0 = oy * s - p;
        for (int64_t b = 0; b < B; ++b) {
          const T* in_plane = in + (n * B + b) * H * W;
          const T* w_ab = w_a + b * KH * KW;
          for (int64_t ky = 0; ky < KH; ++ky) {
            const int64_t iy = iy0 + ky;
            if (iy < 0 || iy >= H) continue;
            const T* in_row = in_plane + iy * W;
            for (int64_t kx = 0; kx < KW; ++kx) {
              const T wv = w_ab[ky * KW + kx];
              const int64_t off = kx - p;
              // valid ox: 0 <= ox*s + off < W
              int64_t lo = off < 0 ? (-off + s - 1) / s : 0;
              int64_t hi = (W - 1 - off) / s;
              if (hi > Wo - 1) hi = Wo - 1;
              if (lo > hi) continue;
              if (s == 1) {
                const T* xr = in_row + off;
                for (int64_t ox = lo; ox <= hi; ++ox) out_row[ox] += wv * xr[ox];
              } else {
                for (int64_t ox = lo; ox <= hi; ++ox) {
                  out_row[ox] += wv * in_row[ox * s + off];
                }
              }
            }
          }
        }
      }
    }
  }
}

// out[n,a,iy*s-p+ky, ix*s-p+kx] += sum_b in[n,b,iy,ix] * w[b,a,ky,kx]
template <typename T>
void conv_scatter_raw(const T* in, int64_t N, int64_t B, int64_t H, int64_t W,
                      const T* w, int64_t A, int64_t KH, int64_t KW, int64_t s,
                      int64_t p, T* out, int64_t Ho, int64_t Wo) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t a = 0; a < A; ++a) {
      T* out_plane = out + (n * A + a) * Ho * Wo;
      for (int64_t b = 0; b < B; ++b) {
        const T* in_plane = in + (n * B + b) * H * W;
        const T* w_ba = w + (b * A + a) * KH * KW;
        for (int64_t iy = 0; iy < H; ++iy) {
          const T* in_row = in_plane + iy * W;
          const int64_t oy0 = iy * s - p;
          for (int64_t ky = 0; ky < KH; ++ky) {
            const int64_t oy = oy0 + ky;
            if (oy < 0 || oy >= Ho) continue;
            T* out_row = out_plane + oy * Wo;
            for (int64_t kx = 0; kx < KW; ++kx) {
              const T wv = w_ba[ky * KW + kx];
              const int64_t off = kx - p;
              // valid ix: 0 <= ix*s + off < Wo
              int64_t lo = off < 0 ? (-off + s - 1) / s : 0;
              int64_t hi = (Wo - 1 - off) / s;
              if (hi > W - 1) hi = W - 1;
              if (lo > hi) continue;
              if (s == 1) {
                T* orow = out_row + off;
                for (int64_t ix = lo; ix <= hi; ++ix) orow[ix] += wv * in_row[ix];
              } else {
                for (int64_t ix = lo; ix <= hi; ++ix) {
                  out_row[ix * s + off] += wv * in_row[ix];
                }
              }
            }
          }
        }
      }
    }
  }
}

// gw[a,b,ky,kx] += sum_{n,oy,ox} act_a[n,a,oy,ox] * act_b[n,b,oy*s-p+ky, ox*s-p+kx]
template <typename T>
void conv_weight_grad_raw(const T* act_a, int64_t N, int64_t A, int64_t Ho,
                          int64_t Wo, const T* act_b, int64_t B, int64_t H,
                          int64_t W, int64_t KH, int64_t KW, int64_t s, int64_t p,
                          T* gw) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t a = 0; a < A; ++a) {
      const T* a_plane = act_a + (n * A + a) * Ho * Wo;
      for (int64_t b = 0; b < B; ++b) {
        const T* b_plane = act_b + (n * B + b) * H * W;
        T* gw_ab = gw + (a * B + b) * KH * KW;
        for (int64_t ky = 0; ky < KH; ++ky) {
          for (int64_t kx = 0; kx < KW; ++kx) {
            const int64_t off = kx - p;
            int64_t lo = off < 0 ? (-off + s - 1) / s : 0;
            int64_t hi = (W - 1 - off) / s;
            if (hi > Wo - 1) hi = Wo - 1;
            if (lo > hi) continue;
            T acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
            for (int64_t oy = 0; oy < Ho; ++oy) {
              const int64_t iy = oy * s - p + ky;
              if (iy < 0 || iy >= H) continue;
              const T* ar = a_plane + oy * Wo;
              const T* br = b_plane + iy * W + off;
              int64_t ox = lo;
              if (s == 1) {
                for (; ox + 3 <= hi; ox += 4) {
                  acc0 += ar[ox] * br[ox];
                  acc1 += ar[ox + 1] * br[ox + 1];
                  acc2 += ar[ox + 2] * br[ox + 2];
                  acc3 += ar[ox + 3] * br[ox + 3];
                }
                for (; ox <= hi; ++ox) acc0 += ar[ox] * br[ox];
              } else {
                for (; ox <= hi; ++ox) acc0 += ar[ox] * br[ox * s];
              }
            }
            gw_ab[ky * KW + kx] += ((acc0 + acc1) + (acc2 + acc3));
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv2d_zero_pad(const Tensor<T>& input, const Tensor<T>& weight,
                          int stride, int pad) {
  expect_rank(input, 4, "conv2d");
  expect_rank(weight, 4, "conv2d");
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (pad < 0) throw std::invalid_argument("conv2d: pad must be >= 0");
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (xs[1] != ws[1]) {
    throw std::invalid_argument("conv2d: input channels of " + shape_str(xs) +
                                " do not match weight " + shape_str(ws));
  }
  const int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  const int64_t Co = ws[0], KH = ws[2], KW = ws[3];
  const int64_t Ho = conv_out_extent(H, KH, stride, pad);
  const int64_t Wo = conv_out_extent(W, KW, stride, pad);
  if (Ho < 1 || Wo < 1) {
    throw std::invalid_argument("conv2d: kernel " + shape_str(ws) +
                                " does not fit padded input " + shape_str(xs) +
                                " (stride " + std::to_string(stride) + ", pad " +
                                std::to_string(pad) + ")");
  }
  std::vector<T> out(static_cast<size_t>(N * Co * Ho * Wo), T(0));
  conv_gather_raw(input.values().data(), N, Ci, H, W, weight.values().data(), Co,
                  KH, KW, stride, pad, out.data(), Ho, Wo);
  const int64_t s = stride, p = pad;
  return make_op<T>({N, Co, Ho, Wo}, std::move(out), {input, weight},
                    [=](TensorNode<T>& self) {
                      auto& x = *self.parents[0];
                      auto& w = *self.parents[1];
                      const auto gy = self.grad_acc();
                      if (x.needs_grad) {
                        auto gx = x.grad_acc();
                        conv_scatter_raw(gy.data(), N, Co, Ho, Wo, w.values.data(),
                                         Ci, KH, KW, s, p, gx.data(), H, W);
                      }
                      if (w.needs_grad) {
                        auto gw = w.grad_acc();
                        conv_weight_grad_raw(gy.data(), N, Co, Ho, Wo,
                                             x.values.data(), Ci, H, W, KH, KW, s,
                                             p, gw.data());
                      }
                    });
}

}  // namespace

int64_t conv_out_extent(int64_t in, int64_t kernel, int64_t stride, int64_t pad) {
  const int64_t span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

int64_t conv_transpose_out_extent(int64_t in, int64_t kernel, int64_t stride,
                                  int64_t pad, int64_t output_pad) {
  return (in - 1) * stride - 2 * pad + kernel + output_pad;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  expect_same_shape(a, b, "add");
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return make_op<T>(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    const auto& gy = self.grad;
    for (int k = 0; k < 2; ++k) {
      auto& p = *self.parents[k];
      if (!p.needs_grad) continue;
      auto g = p.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  expect_same_shape(a, b, "sub");
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return make_op<T>(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    const auto& gy = self.grad;
    auto& pa = *self.parents[0];
    if (pa.needs_grad) {
      auto g = pa.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
    }
    auto& pb = *self.parents[1];
    if (pb.needs_grad) {
      auto g = pb.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= gy[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  expect_same_shape(a, b, "mul");
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return make_op<T>(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    const auto& gy = self.grad;
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.needs_grad) {
      auto g = pa.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * pb.values[i];
    }
    if (pb.needs_grad) {
      auto g = pb.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * pa.values[i];
    }
  });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  expect_same_shape(a, b, "div");
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[i];
  return make_op<T>(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    const auto& gy = self.grad;
    const auto& yv = self.values;
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.needs_grad) {
      auto g = pa.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i] / pb.values[i];
    }
    if (pb.needs_grad) {
      auto g = pb.grad_acc();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= gy[i] * yv[i] / pb.values[i];
    }
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s) {
  return unary_op(
      x, [s](T v) { return v + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T s) {
  return unary_op(
      x, [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
  return mul_scalar(x, T(-1));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary_op(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T negative_slope) {
  return unary_op(
      x, [negative_slope](T v) { return v > T(0) ? v : negative_slope * v; },
      [negative_slope](T v, T) { return v > T(0) ? T(1) : negative_slope; });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& x) {
  return unary_op(
      x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary_op(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> abs_op(const Tensor<T>& x) {
  return unary_op(
      x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return unary_op(
      x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& x) {
  for (T v : x.values()) {
    if (!(v > T(0))) {
      throw std::domain_error("log: inputs must be > 0");
    }
  }
  return unary_op(
      x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must be <= hi");
  return unary_op(
      x, [lo, hi](T v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](T v, T) { return (v > lo && v < hi) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::span<const int> axes) {
  if (axes.empty()) return x;
  const Shape& shape = x.shape();
  const int rank = static_cast<int>(shape.size());
  std::vector<bool> reduced(rank, false);
  for (int axis : axes) {
    if (axis < 0 || axis >= rank) {
      throw std::invalid_argument("mean: axis " + std::to_string(axis) +
                                  " out of range for shape " + shape_str(shape));
    }
    if (reduced[axis]) {
      throw std::invalid_argument("mean: duplicate axis " + std::to_string(axis));
    }
    reduced[axis] = true;
  }
  Shape out_shape;
  int64_t reduce_count = 1;
  for (int d = 0; d < rank; ++d) {
    if (reduced[d]) {
      reduce_count *= shape[d];
    } else {
      out_shape.push_back(shape[d]);
    }
  }
  if (out_shape.empty()) out_shape.push_back(1);
  if (reduce_count == 0) {
    throw std::invalid_argument("mean: cannot reduce over an empty extent in " +
                                shape_str(shape));
  }

  // map_stride[d] is the output stride for kept axes and 0 for reduced ones,
  // so out_index = sum(coord[d] * map_stride[d]).
  std::vector<int64_t> map_stride(rank, 0);
  int64_t run = 1;
  for (int d = rank - 1; d >= 0; --d) {
    if (!reduced[d]) {
      map_stride[d] = run;
      run *= shape[d];
    }
  }

  const auto xv = x.values();
  std::vector<T> out(static_cast<size_t>(numel_of(out_shape)), T(0));
  std::vector<int64_t> coord(rank, 0);
  int64_t out_idx = 0;
  for (size_t i = 0; i < xv.size(); ++i) {
    out[out_idx] += xv[i];
    for (int d = rank - 1; d >= 0; --d) {
      out_idx += map_stride[d];
      if (++coord[d] < shape[d]) break;
      coord[d] = 0;
      out_idx -= map_stride[d] * shape[d];
    }
  }
  const T inv = T(1) / static_cast<T>(reduce_count);
  for (T& v : out) v *= inv;

  return make_op<T>(out_shape, std::move(out), {x},
                    [map_stride, shape, inv](TensorNode<T>& self) {
                      auto& p = *self.parents[0];
                      if (!p.needs_grad) return;
                      auto g = p.grad_acc();
                      const auto& gy = self.grad;
                      const int rank = static_cast<int>(shape.size());
                      std::vector<int64_t> coord(rank, 0);
                      int64_t out_idx = 0;
                      for (size_t i = 0; i < g.size(); ++i) {
                        g[i] += gy[out_idx] * inv;
                        for (int d = rank - 1; d >= 0; --d) {
                          out_idx += map_stride[d];
                          if (++coord[d] < shape[d]) break;
                          coord[d] = 0;
                          out_idx -= map_stride[d] * shape[d];
                        }
                      }
                    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::initializer_list<int> axes) {
  std::vector<int> v(axes);
  return mean(x, std::span<const int>(v));
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  std::vector<int> axes(x.shape().size());
  for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
  if (axes.empty()) return x;
  return mean(x, std::span<const int>(axes));
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  const auto xv = x.values();
  T total = 0;
  for (T v : xv) total += v;
  return make_op<T>({1}, {total}, {x}, [](TensorNode<T>& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    auto g = p.grad_acc();
    const T gy = self.grad[0];
    for (size_t i = 0; i < g.size(); ++i) g[i] += gy;
  });
}

namespace {

inline int64_t reflect_index(int64_t i, int64_t extent) {
  if (i < 0) return -i;
  if (i >= extent) return 2 * extent - 2 - i;
  return i;
}

}  // namespace

template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& x, int pad) {
  expect_rank(x, 4, "pad_reflect");
  if (pad < 0) throw std::invalid_argument("pad_reflect: pad must be >= 0");
  if (pad == 0) return x;
  const Shape& s = x.shape();
  const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  if (pad > H - 1 || pad > W - 1) {
    throw std::invalid_argument("pad_reflect: pad " + std::to_string(pad) +
                                " too large for shape " + shape_str(s));
  }
  const int64_t Ho = H + 2 * pad, Wo = W + 2 * pad;
  const auto xv = x.values();
  std::vector<T> out(static_cast<size_t>(N * C * Ho * Wo));
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const T* in_plane = xv.data() + nc * H * W;
    T* out_plane = out.data() + nc * Ho * Wo;
    for (int64_t oy = 0; oy < Ho; ++oy) {
      const T* in_row = in_plane + reflect_index(oy - pad, H) * W;
      T* out_row = out_plane + oy * Wo;
      for (int64_t ox = 0; ox < Wo; ++ox) {
        out_row[ox] = in_row[reflect_index(ox - pad, W)];
      }
    }
  }
  return make_op<T>({N, C, Ho, Wo}, std::move(out), {x},
                    [pad, N, C, H, W, Ho, Wo](TensorNode<T>& self) {
                      auto& p = *self.parents[0];
                      if (!p.needs_grad) return;
                      auto g = p.grad_acc();
                      const auto& gy = self.grad;
                      for (int64_t nc = 0; nc < N * C; ++nc) {
                        T* g_plane = g.data() + nc * H * W;
                        const T* gy_plane = gy.data() + nc * Ho * Wo;
                        for (int64_t oy = 0; oy < Ho; ++oy) {
                          T* g_row = g_plane + reflect_index(oy - pad, H) * W;
                          const T* gy_row = gy_plane + oy * Wo;
                          for (int64_t ox = 0; ox < Wo; ++ox) {
                            g_row[reflect_index(ox - pad, W)] += gy_row[ox];
                          }
                        }
                      }
                    });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, int stride,
                 int pad, PadMode mode) {
  if (mode == PadMode::Reflect && pad > 0) {
    return conv2d_zero_pad(pad_reflect(input, pad), weight, stride, 0);
  }
  return conv2d_zero_pad(input, weight, stride, pad);
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight,
                           int stride, int pad, int output_pad) {
  expect_rank(input, 4, "conv_transpose2d");
  expect_rank(weight, 4, "conv_transpose2d");
  if (stride < 1) throw std::invalid_argument("conv_transpose2d: stride must be >= 1");
  if (pad < 0) throw std::invalid_argument("conv_transpose2d: pad must be >= 0");
  if (output_pad < 0 || output_pad >= stride) {
    throw std::invalid_argument("conv_transpose2d: output_pad must be in [0, stride)");
  }
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (xs[1] != ws[0]) {
    throw std::invalid_argument("conv_transpose2d: input channels of " +
                                shape_str(xs) + " do not match weight " +
                                shape_str(ws));
  }
  const int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  const int64_t Co = ws[1], KH = ws[2], KW = ws[3];
  const int64_t Ho = conv_transpose_out_extent(H, KH, stride, pad, output_pad);
  const int64_t Wo = conv_transpose_out_extent(W, KW, stride, pad, output_pad);
  if (Ho < 1 || Wo < 1) {
    throw std::invalid_argument("conv_transpose2d: output extent is empty for input " +
                                shape_str(xs) + " and weight " + shape_str(ws));
  }
  std::vector<T> out(static_cast<size_t>(N * Co * Ho * Wo), T(0));
  conv_scatter_raw(input.values().data(), N, Ci, H, W, weight.values().data(), Co,
                   KH, KW, stride, pad, out.data(), Ho, Wo);
  const int64_t s = stride, p = pad;
  return make_op<T>({N, Co, Ho, Wo}, std::move(out), {input, weight},
                    [=](TensorNode<T>& self) {
                      auto& x = *self.parents[0];
                      auto& w = *self.parents[1];
                      const auto gy = self.grad_acc();
                      if (x.needs_grad) {
                        auto gx = x.grad_acc();
                        conv_gather_raw(gy.data(), N, Co, Ho, Wo, w.values.data(),
                                        Ci, KH, KW, s, p, gx.data(), H, W);
                      }
                      if (w.needs_grad) {
                        auto gw = w.grad_acc();
                        conv_weight_grad_raw(x.values.data(), N, Ci, H, W,
                                             gy.data(), Co, Ho, Wo, KH, KW, s, p,
                                             gw.data());
                      }
                    });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                        const Tensor<T>& beta, T epsilon) {
  expect_rank(x, 4, "instance_norm");
  const Shape& s = x.shape();
  const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
    throw std::invalid_argument("instance_norm: gamma " + shape_str(gamma.shape()) +
                                " / beta " + shape_str(beta.shape()) +
                                " must have shape [" + std::to_string(C) + "]");
  }
  if (H * W < 1) throw std::invalid_argument("instance_norm: empty spatial extent");
  if (!(epsilon > T(0))) throw std::invalid_argument("instance_norm: epsilon must be > 0");

  const int64_t plane = H * W;
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<T> out(xv.size());
  std::vector<T> mean_nc(static_cast<size_t>(N * C));
  std::vector<T> inv_std_nc(static_cast<size_t>(N * C));
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const T* xp = xv.data() + nc * plane;
    T sum = 0, sum_sq = 0;
    for (int64_t i = 0; i < plane; ++i) {
      sum += xp[i];
      sum_sq += xp[i] * xp[i];
    }
    const T mu = sum / static_cast<T>(plane);
    T var = sum_sq / static_cast<T>(plane) - mu * mu;
    if (var < T(0)) var = T(0);
    mean_nc[nc] = mu;
    inv_std_nc[nc] = T(1) / std::sqrt(var + epsilon);
    const T g = gv[nc % C], b = bv[nc % C];
    const T scale = g * inv_std_nc[nc];
    T* op = out.data() + nc * plane;
    for (int64_t i = 0; i < plane; ++i) op[i] = scale * (xp[i] - mu) + b;
  }

  return make_op<T>(
      s, std::move(out), {x, gamma, beta},
      [N, C, plane, mean_nc = std::move(mean_nc),
       inv_std_nc = std::move(inv_std_nc)](TensorNode<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto& gy = self.grad;
        const auto& xv = px.values;
        const auto& gv = pg.values;
        const T inv_n = T(1) / static_cast<T>(plane);
        for (int64_t nc = 0; nc < N * C; ++nc) {
          const int64_t c = nc % C;
          const T* xp = xv.data() + nc * plane;
          const T* gp = gy.data() + nc * plane;
          const T mu = mean_nc[nc];
          const T inv_std = inv_std_nc[nc];
          T sum_g = 0, sum_gx = 0;
          for (int64_t i = 0; i < plane; ++i) {
            sum_g += gp[i];
            sum_gx += gp[i] * (xp[i] - mu) * inv_std;
          }
          if (pb.needs_grad) pb.grad_acc()[c] += sum_g;
          if (pg.needs_grad) pg.grad_acc()[c] += sum_gx;
          if (px.needs_grad) {
            auto gx = px.grad_acc();
            T* gxp = gx.data() + nc * plane;
            const T scale = gv[c] * inv_std;
            const T mean_g = sum_g * inv_n;
            const T mean_gx = sum_gx * inv_n;
            for (int64_t i = 0; i < plane; ++i) {
              const T xhat = (xp[i] - mu) * inv_std;
              gxp[i] += scale * (gp[i] - mean_g - xhat * mean_gx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  expect_rank(x, 4, "add_channel_bias");
  const Shape& s = x.shape();
  const int64_t N = s[0], C = s[1], plane = s[2] * s[3];
  if (bias.shape() != Shape{C}) {
    throw std::invalid_argument("add_channel_bias: bias " + shape_str(bias.shape()) +
                                " must have shape [" + std::to_string(C) + "]");
  }
  const auto xv = x.values();
  const auto bv = bias.values();
  std::vector<T> out(xv.size());
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const T b = bv[nc % C];
    const T* xp = xv.data() + nc * plane;
    T* op = out.data() + nc * plane;
    for (int64_t i = 0; i < plane; ++i) op[i] = xp[i] + b;
  }
  return make_op<T>(s, std::move(out), {x, bias},
                    [N, C, plane](TensorNode<T>& self) {
                      auto& px = *self.parents[0];
                      auto& pb = *self.parents[1];
                      const auto& gy = self.grad;
                      if (px.needs_grad) {
                        auto g = px.grad_acc();
                        for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
                      }
                      if (pb.needs_grad) {
                        auto g = pb.grad_acc();
                        for (int64_t nc = 0; nc < N * C; ++nc) {
                          const T* gp = gy.data() + nc * plane;
                          T acc = 0;
                          for (int64_t i = 0; i < plane; ++i) acc += gp[i];
                          g[nc % C] += acc;
                        }
                      }
                    });
}

template <typename T>
Tensor<T> channel_slice(const Tensor<T>& x, int64_t first, int64_t count) {
  expect_rank(x, 4, "channel_slice");
  const Shape& s = x.shape();
  const int64_t N = s[0], C = s[1], plane = s[2] * s[3];
  if (first < 0 || count < 1 || first + count > C) {
    throw std::invalid_argument("channel_slice: range [" + std::to_string(first) +
                                ", " + std::to_string(first + count) +
                                ") invalid for shape " + shape_str(s));
  }
  const auto xv = x.values();
  std::vector<T> out(static_cast<size_t>(N * count * plane));
  for (int64_t n = 0; n < N; ++n) {
    const T* src = xv.data() + (n * C + first) * plane;
    T* dst = out.data() + n * count * plane;
    std::copy(src, src + count * plane, dst);
  }
  return make_op<T>({N, count, s[2], s[3]}, std::move(out), {x},
                    [N, C, first, count, plane](TensorNode<T>& self) {
                      auto& p = *self.parents[0];
                      if (!p.needs_grad) return;
                      auto g = p.grad_acc();
                      const auto& gy = self.grad;
                      for (int64_t n = 0; n < N; ++n) {
                        T* dst = g.data() + (n * C + first) * plane;
                        const T* src = gy.data() + n * count * plane;
                        for (int64_t i = 0; i < count * plane; ++i) dst[i] += src[i];
                      }
                    });
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  expect_rank(parts[0], 4, "concat_channels");
  const Shape& s0 = parts[0].shape();
  const int64_t N = s0[0], plane = s0[2] * s0[3];
  int64_t total_c = 0;
  for (const auto& p : parts) {
    expect_rank(p, 4, "concat_channels");
    const Shape& s = p.shape();
    if (s[0] != N || s[2] != s0[2] || s[3] != s0[3]) {
      throw std::invalid_argument("concat_channels: shape mismatch " + shape_str(s0) +
                                  " vs " + shape_str(s));
    }
    total_c += s[1];
  }
  std::vector<T> out(static_cast<size_t>(N * total_c * plane));
  std::vector<int64_t> channels;
  for (const auto& p : parts) channels.push_back(p.shape()[1]);
  int64_t c_off = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    const int64_t ck = channels[k];
    for (int64_t n = 0; n < N; ++n) {
      std::copy(pv.data() + n * ck * plane, pv.data() + (n + 1) * ck * plane,
                out.data() + (n * total_c + c_off) * plane);
    }
    c_off += ck;
  }
  std::vector<Tensor<T>> parents(parts.begin(), parts.end());
  return make_op<T>({N, total_c, s0[2], s0[3]}, std::move(out), std::move(parents),
                    [N, total_c, plane, channels](TensorNode<T>& self) {
                      const auto& gy = self.grad;
                      int64_t c_off = 0;
                      for (size_t k = 0; k < self.parents.size(); ++k) {
                        auto& p = *self.parents[k];
                        const int64_t ck = channels[k];
                        if (p.needs_grad) {
                          auto g = p.grad_acc();
                          for (int64_t n = 0; n < N; ++n) {
                            const T* src = gy.data() + (n * total_c + c_off) * plane;
                            T* dst = g.data() + n * ck * plane;
                            for (int64_t i = 0; i < ck * plane; ++i) dst[i] += src[i];
                          }
                        }
                        c_off += ck;
                      }
                    });
}

template <typename T>
Tensor<T> luminance(const Tensor<T>& x) {
  expect_rank(x, 4, "luminance");
  const int64_t C = x.shape()[1];
  if (C == 1) return x;
  if (C != 3) {
    throw std::invalid_argument("luminance: expected 1 or 3 channels, got shape " +
                                shape_str(x.shape()));
  }
  const Tensor<T> r = mul_scalar(channel_slice(x, 0, 1), T(0.299));
  const Tensor<T> g = mul_scalar(channel_slice(x, 1, 1), T(0.587));
  const Tensor<T> b = mul_scalar(channel_slice(x, 2, 1), T(0.114));
  return add(add(r, g), b);
}

template <typename T>
void normal_init(Tensor<T>& tensor, Rng& rng, T mean, T stddev) {
  auto values = tensor.mutable_values();
  for (T& v : values) {
    v = mean + stddev * static_cast<T>(rng.next_normal());
  }
}

#define UWCT_INSTANTIATE_OPS(T)                                                       \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> div<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                              \
  template Tensor<T> mul_scalar<T>(const Tensor<T>&, T);                              \
  template Tensor<T> neg<T>(const Tensor<T>&);                                        \
  template Tensor<T> relu<T>(const Tensor<T>&);                                       \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                              \
  template Tensor<T> tanh_op<T>(const Tensor<T>&);                                    \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                    \
  template Tensor<T> abs_op<T>(const Tensor<T>&);                                     \
  template Tensor<T> square<T>(const Tensor<T>&);                                     \
  template Tensor<T> log_op<T>(const Tensor<T>&);                                     \
  template Tensor<T> clamp<T>(const Tensor<T>&, T, T);                                \
  template Tensor<T> mean<T>(const Tensor<T>&, std::span<const int>);                 \
  template Tensor<T> mean<T>(const Tensor<T>&, std::initializer_list<int>);           \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                                   \
  template Tensor<T> sum_all<T>(const Tensor<T>&);                                    \
  template Tensor<T> pad_reflect<T>(const Tensor<T>&, int);                           \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, int, int, PadMode); \
  template Tensor<T> conv_transpose2d<T>(const Tensor<T>&, const Tensor<T>&, int,     \
                                         int, int);                                   \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, const Tensor<T>&,             \
                                      const Tensor<T>&, T);                           \
  template Tensor<T> add_channel_bias<T>(const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> channel_slice<T>(const Tensor<T>&, int64_t, int64_t);            \
  template Tensor<T> concat_channels<T>(std::span<const Tensor<T>>);                  \
  template Tensor<T> luminance<T>(const Tensor<T>&);                                  \
  template void normal_init<T>(Tensor<T>&, Rng&, T, T);

UWCT_INSTANTIATE_OPS(float)
UWCT_INSTANTIATE_OPS(double)

#undef UWCT_INSTANTIATE_OPS

}  // namespace uwct
