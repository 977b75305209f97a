#include "uwct/nets.hpp"

#include <stdexcept>

namespace uwct {

namespace {

constexpr double kNormEpsilon = 1e-5;
constexpr double kLeakySlope = 0.2;
constexpr double kInitStddev = 0.02;

template <typename T>
Tensor<T> make_conv_weight(int64_t out_c, int64_t in_c, int64_t k, Rng& rng) {
  Tensor<T> w = Tensor<T>::zeros({out_c, in_c, k, k}, true);
  normal_init(w, rng, T(0), T(kInitStddev));
  return w;
}

template <typename T>
Tensor<T> make_transpose_weight(int64_t in_c, int64_t out_c, int64_t k, Rng& rng) {
  Tensor<T> w = Tensor<T>::zeros({in_c, out_c, k, k}, true);
  normal_init(w, rng, T(0), T(kInitStddev));
  return w;
}

}  // namespace

ArchConfig make_arch_config(const std::string& preset, int image_size) {
  ArchConfig arch;
  arch.preset = preset;
  if (preset == "default") {
    arch.base_width = 64;
    arch.disc_base_width = 64;
    arch.n_res_blocks = image_size >= 256 ? 9 : 6;
  } else if (preset == "toy") {
    arch.base_width = 16;
    arch.disc_base_width = 8;
    arch.n_res_blocks = 1;
  } else {
    throw std::invalid_argument("unknown arch preset '" + preset +
                                "' (expected 'default' or 'toy')");
  }
  return arch;
}

int receptive_field(std::span<const LayerSpec> layers) {
  int r = 1;
  int jump = 1;
  for (const LayerSpec& layer : layers) {
    r += (layer.kernel - 1) * jump;
    jump *= layer.stride;
  }
  return r;
}

template <typename T>
GeneratorNet<T> GeneratorNet<T>::build(const ArchConfig& arch, Rng& init_rng) {
  if (arch.base_width < 1 || arch.n_res_blocks < 0) {
    throw std::invalid_argument("generator: base_width must be >= 1 and n_res_blocks >= 0");
  }
  GeneratorNet<T> net;
  net.width_ = arch.base_width;
  net.n_res_ = arch.n_res_blocks;
  const int64_t w = arch.base_width;

  auto add_param = [&net](const std::string& name, Tensor<T> t) {
    net.params_.push_back({name, t});
    return t;
  };
  auto norm_block = [&](Block& block, const std::string& prefix, int64_t channels) {
    block.gamma = add_param(prefix + ".norm.gamma", Tensor<T>::full({channels}, T(1), true));
    block.beta = add_param(prefix + ".norm.beta", Tensor<T>::zeros({channels}, true));
  };

  net.stem_.w = add_param("stem.conv.w", make_conv_weight<T>(w, 3, 7, init_rng));
  norm_block(net.stem_, "stem", w);
  net.down1_.w = add_param("down1.conv.w", make_conv_weight<T>(2 * w, w, 3, init_rng));
  norm_block(net.down1_, "down1", 2 * w);
  net.down2_.w = add_param("down2.conv.w", make_conv_weight<T>(4 * w, 2 * w, 3, init_rng));
  norm_block(net.down2_, "down2", 4 * w);
  for (int i = 0; i < arch.n_res_blocks; ++i) {
    const std::string prefix = "res" + std::to_string(i);
    Block c1, c2;
    c1.w = add_param(prefix + ".conv1.w", make_conv_weight<T>(4 * w, 4 * w, 3, init_rng));
    c1.gamma = add_param(prefix + ".norm1.gamma", Tensor<T>::full({4 * w}, T(1), true));
    c1.beta = add_param(prefix + ".norm1.beta", Tensor<T>::zeros({4 * w}, true));
    c2.w = add_param(prefix + ".conv2.w", make_conv_weight<T>(4 * w, 4 * w, 3, init_rng));
    c2.gamma = add_param(prefix + ".norm2.gamma", Tensor<T>::full({4 * w}, T(1), true));
    c2.beta = add_param(prefix + ".norm2.beta", Tensor<T>::zeros({4 * w}, true));
    net.res_.push_back(c1);
    net.res_.push_back(c2);
  }
  net.up1_.w = add_param("up1.conv.w", make_transpose_weight<T>(4 * w, 2 * w, 3, init_rng));
  norm_block(net.up1_, "up1", 2 * w);
  net.up2_.w = add_param("up2.conv.w", make_transpose_weight<T>(2 * w, w, 3, init_rng));
  norm_block(net.up2_, "up2", w);
  net.out_.w = add_param("out.conv.w", make_conv_weight<T>(3, w, 7, init_rng));
  net.out_.bias = add_param("out.conv.b", Tensor<T>::zeros({3}, true));
  return net;
}

template <typename T>
Tensor<T> GeneratorNet<T>::forward(const Tensor<T>& x) const {
  if (x.shape().size() != 4 || x.shape()[1] != 3) {
    throw std::invalid_argument("generator: expected N3HW input, got " +
                                shape_str(x.shape()));
  }
  const int64_t h = x.shape()[2], w = x.shape()[3];
  if (h % 4 != 0 || w % 4 != 0 || h < 8 || w < 8) {
    throw std::invalid_argument("generator: spatial extents of " + shape_str(x.shape()) +
                                " must be divisible by 4 and >= 8");
  }
  const T eps = T(kNormEpsilon);
  auto conv_in_relu = [eps](const Tensor<T>& in, const Block& b, int stride, int pad,
                            PadMode mode) {
    return relu(instance_norm(conv2d(in, b.w, stride, pad, mode), b.gamma, b.beta, eps));
  };

  Tensor<T> y = conv_in_relu(x, stem_, 1, 3, PadMode::Reflect);
  y = conv_in_relu(y, down1_, 2, 1, PadMode::Zero);
  y = conv_in_relu(y, down2_, 2, 1, PadMode::Zero);
  for (size_t i = 0; i + 1 < res_.size(); i += 2) {
    const Block& c1 = res_[i];
    const Block& c2 = res_[i + 1];
    Tensor<T> t = relu(instance_norm(conv2d(y, c1.w, 1, 1, PadMode::Reflect), c1.gamma,
                                     c1.beta, eps));
    t = instance_norm(conv2d(t, c2.w, 1, 1, PadMode::Reflect), c2.gamma, c2.beta, eps);
    y = add(y, t);
  }
  y = relu(instance_norm(conv_transpose2d(y, up1_.w, 2, 1, 1), up1_.gamma, up1_.beta, eps));
  y = relu(instance_norm(conv_transpose2d(y, up2_.w, 2, 1, 1), up2_.gamma, up2_.beta, eps));
  y = tanh_op(add_channel_bias(conv2d(y, out_.w, 1, 3, PadMode::Reflect), out_.bias));
  return y;
}

template <typename T>
std::vector<Tensor<T>> GeneratorNet<T>::param_tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

template <typename T>
DiscriminatorNet<T> DiscriminatorNet<T>::build(const ArchConfig& arch, Rng& init_rng) {
  if (arch.disc_base_width < 1) {
    throw std::invalid_argument("discriminator: disc_base_width must be >= 1");
  }
  DiscriminatorNet<T> net;
  net.width_ = arch.disc_base_width;
  const int64_t w = arch.disc_base_width;

  auto add_param = [&net](const std::string& name, Tensor<T> t) {
    net.params_.push_back({name, t});
    return t;
  };

  net.c1_.w = add_param("c1.conv.w", make_conv_weight<T>(w, 3, 4, init_rng));
  net.c1_.bias = add_param("c1.conv.b", Tensor<T>::zeros({w}, true));
  net.c2_.w = add_param("c2.conv.w", make_conv_weight<T>(2 * w, w, 4, init_rng));
  net.c2_.gamma = add_param("c2.norm.gamma", Tensor<T>::full({2 * w}, T(1), true));
  net.c2_.beta = add_param("c2.norm.beta", Tensor<T>::zeros({2 * w}, true));
  net.c3_.w = add_param("c3.conv.w", make_conv_weight<T>(4 * w, 2 * w, 4, init_rng));
  net.c3_.gamma = add_param("c3.norm.gamma", Tensor<T>::full({4 * w}, T(1), true));
  net.c3_.beta = add_param("c3.norm.beta", Tensor<T>::zeros({4 * w}, true));
  net.c4_.w = add_param("c4.conv.w", make_conv_weight<T>(8 * w, 4 * w, 4, init_rng));
  net.c4_.gamma = add_param("c4.norm.gamma", Tensor<T>::full({8 * w}, T(1), true));
  net.c4_.beta = add_param("c4.norm.beta", Tensor<T>::zeros({8 * w}, true));
  net.proj_.w = add_param("proj.conv.w", make_conv_weight<T>(1, 8 * w, 4, init_rng));
  net.proj_.bias = add_param("proj.conv.b", Tensor<T>::zeros({1}, true));
  return net;
}

std::vector<LayerSpec> layer_specs_impl() {
  return {{4, 2}, {4, 2}, {4, 2}, {4, 1}, {4, 1}};
}

template <typename T>
std::vector<LayerSpec> DiscriminatorNet<T>::layer_specs() {
  return layer_specs_impl();
}

template <typename T>
int DiscriminatorNet<T>::min_input_extent() {
  for (int extent = 4; extent <= 1024; ++extent) {
    int64_t e = extent;
    bool ok = true;
    for (const LayerSpec& layer : layer_specs_impl()) {
      e = conv_out_extent(e, layer.kernel, layer.stride, 1);
      if (e < 1) {
        ok = false;
        break;
      }
    }
    if (ok) return extent;
  }
  throw std::logic_error("discriminator: no feasible input extent found");
}

template <typename T>
Tensor<T> DiscriminatorNet<T>::forward(const Tensor<T>& x) const {
  if (x.shape().size() != 4 || x.shape()[1] != 3) {
    throw std::invalid_argument("discriminator: expected N3HW input, got " +
                                shape_str(x.shape()));
  }
  const int min_extent = min_input_extent();
  if (x.shape()[2] < min_extent || x.shape()[3] < min_extent) {
    throw std::invalid_argument("discriminator: input " + shape_str(x.shape()) +
                                " below minimum spatial extent " +
                                std::to_string(min_extent));
  }
  const T eps = T(kNormEpsilon);
  const T slope = T(kLeakySlope);
  Tensor<T> y = leaky_relu(add_channel_bias(conv2d(x, c1_.w, 2, 1), c1_.bias), slope);
  y = leaky_relu(instance_norm(conv2d(y, c2_.w, 2, 1), c2_.gamma, c2_.beta, eps), slope);
  y = leaky_relu(instance_norm(conv2d(y, c3_.w, 2, 1), c3_.gamma, c3_.beta, eps), slope);
  y = leaky_relu(instance_norm(conv2d(y, c4_.w, 1, 1), c4_.gamma, c4_.beta, eps), slope);
  return add_channel_bias(conv2d(y, proj_.w, 1, 1), proj_.bias);
}

template <typename T>
std::vector<Tensor<T>> DiscriminatorNet<T>::param_tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

template class GeneratorNet<float>;
template class GeneratorNet<double>;
template class DiscriminatorNet<float>;
template class DiscriminatorNet<double>;

}  // namespace uwct
