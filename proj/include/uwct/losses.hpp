#pragma once

#include <string>

#include "uwct/ops.hpp"
#include "uwct/tensor.hpp"

namespace uwct {

enum class SsimChannelMode { Luminance, PerChannelMean };

SsimChannelMode ssim_channel_mode_from_string(const std::string& name);
std::string to_string(SsimChannelMode mode);

struct SsimParams {
  int window = 13;
  double c1 = 0.02;
  double c2 = 0.03;
  SsimChannelMode channel_mode = SsimChannelMode::Luminance;

  void validate() const;
};

struct LossWeights {
  double lambda_adv = 1.0;
  double lambda_cyc = 1.0;
  double lambda_ssim = 10.0;

  void validate() const;
};

// Per-step loss values for all four networks. total_* must equal the
// weighted sum of (adv, cyc, ssim) to 1e-6 relative.
struct LossReport {
  uint64_t step = 0;
  double adv_g_fwd = 0, adv_g_bwd = 0;
  double adv_d_x = 0, adv_d_y = 0;
  double cyc = 0;
  double ssim_fwd = 0, ssim_bwd = 0;
  double total_g_fwd = 0, total_g_bwd = 0;
};

bool loss_report_consistent(const LossReport& report, const LossWeights& weights,
                            double rel_tol = 1e-6);

// Per-pixel structural similarity over window x window patches with uniform
// (box) statistics and reflect-padded borders, so the map has full image
// extent. Inputs are NCHW in [0, 1]; the result is N1HW. With 3-channel
// inputs the comparison runs on BT.601 luminance or as the mean of
// per-channel maps, depending on the channel mode.
template <typename T>
Tensor<T> ssim_map(const Tensor<T>& x, const Tensor<T>& y, const SsimParams& params);

// 1 - mean(ssim_map) after mapping inputs from network range [-1, 1] to
// [0, 1]. Scalar in [0, 2).
template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& x, const Tensor<T>& gx, const SsimParams& params);

// Mean absolute error of the forward reconstruction plus the backward one
// (per-element means, so the weight is resolution independent).
template <typename T>
Tensor<T> cycle_loss(const Tensor<T>& x, const Tensor<T>& fgx, const Tensor<T>& y,
                     const Tensor<T>& gfy);

// Least-squares adversarial terms on raw logit maps.
template <typename T>
Tensor<T> adversarial_ls_g(const Tensor<T>& d_fake_logits);
template <typename T>
Tensor<T> adversarial_ls_d(const Tensor<T>& d_real_logits, const Tensor<T>& d_fake_logits);

// Negative-log-likelihood objective on probabilities in (0, 1):
// E[log D(y)] + E[log(1 - D(G(x)))]. The discriminator maximizes this value.
// Kept for completeness and the optional nll training mode.
template <typename T>
Tensor<T> adversarial_nll(const Tensor<T>& d_real_probs, const Tensor<T>& d_fake_probs);

template <typename T>
Tensor<T> total_generator_loss(const Tensor<T>& adv, const Tensor<T>& cyc,
                               const Tensor<T>& ssim, const LossWeights& weights);

extern template Tensor<float> ssim_map<float>(const Tensor<float>&, const Tensor<float>&,
                                              const SsimParams&);
extern template Tensor<double> ssim_map<double>(const Tensor<double>&,
                                                const Tensor<double>&, const SsimParams&);

}  // namespace uwct
