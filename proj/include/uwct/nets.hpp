#pragma once

#include <span>
#include <string>
#include <vector>

#include "uwct/ops.hpp"
#include "uwct/rng.hpp"
#include "uwct/tensor.hpp"

namespace uwct {

struct ArchConfig {
  std::string preset = "default";
  int base_width = 64;       // generator stem width
  int disc_base_width = 64;  // discriminator first-layer width
  int n_res_blocks = 9;
};

// "default": width 64/64, 9 residual blocks at >=256 px, 6 below.
// "toy": width 16/8, 1 residual block.
ArchConfig make_arch_config(const std::string& preset, int image_size);

struct LayerSpec {
  int kernel;
  int stride;
};

// Closed-form receptive field of a stack of conv layers:
// r <- r + (k-1)*jump, jump <- jump*stride, applied input-to-output.
int receptive_field(std::span<const LayerSpec> layers);

template <typename T>
struct Param {
  std::string name;
  Tensor<T> tensor;
};

// Residual encoder-transformer-decoder generator: 7x7 reflect-padded stem,
// two stride-2 downsamplings, n residual blocks, two stride-2 upsamplings
// (output padding 1 so spatial extents round-trip exactly), 7x7 output conv
// with tanh. Instance norm everywhere except the output layer.
template <typename T>
class GeneratorNet {
 public:
  GeneratorNet() = default;
  static GeneratorNet build(const ArchConfig& arch, Rng& init_rng);

  // x is N3HW in [-1, 1] with H, W divisible by 4; output has the same shape.
  Tensor<T> forward(const Tensor<T>& x) const;

  std::span<const Param<T>> params() const { return params_; }
  std::vector<Tensor<T>> param_tensors() const;
  int base_width() const { return width_; }
  int n_res_blocks() const { return n_res_; }

 private:
  struct Block {
    Tensor<T> w;
    Tensor<T> bias;   // output layer only
    Tensor<T> gamma;  // undefined when the block has no norm
    Tensor<T> beta;
  };

  int width_ = 64;
  int n_res_ = 9;
  Block stem_, down1_, down2_, up1_, up2_, out_;
  std::vector<Block> res_;  // two entries per residual block: conv1, conv2
  std::vector<Param<T>> params_;
};

// 70x70 patch discriminator: 4x4 kernels with stride pattern (2,2,2,1) and a
// final stride-1 projection to one logit channel. No squashing on the output;
// the least-squares objective consumes raw logits.
template <typename T>
class DiscriminatorNet {
 public:
  DiscriminatorNet() = default;
  static DiscriminatorNet build(const ArchConfig& arch, Rng& init_rng);

  // Returns an N1hw logit map. Inputs below the minimum spatial extent for
  // the stack are rejected with the computed minimum.
  Tensor<T> forward(const Tensor<T>& x) const;

  std::span<const Param<T>> params() const { return params_; }
  std::vector<Tensor<T>> param_tensors() const;
  int base_width() const { return width_; }

  static std::vector<LayerSpec> layer_specs();
  // Smallest input extent whose logit map is non-empty.
  static int min_input_extent();

 private:
  struct Block {
    Tensor<T> w;
    Tensor<T> bias;
    Tensor<T> gamma;
    Tensor<T> beta;
  };

  int width_ = 64;
  Block c1_, c2_, c3_, c4_, proj_;
  std::vector<Param<T>> params_;
};

extern template class GeneratorNet<float>;
extern template class GeneratorNet<double>;
extern template class DiscriminatorNet<float>;
extern template class DiscriminatorNet<double>;

}  // namespace uwct
