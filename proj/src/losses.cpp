#include "uwct/losses.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace uwct {

namespace {

constexpr double kProbClamp = 1e-7;

template <typename T>
void warn_if_outside_unit(const Tensor<T>& t, const char* what) {
  if (!check_finite_enabled()) return;
  for (T v : t.values()) {
    if (v < T(-1e-6) || v > T(1) + T(1e-6)) {
      std::fprintf(stderr, "warning: %s has values outside [0,1] (found %g)\n", what,
                   static_cast<double>(v));
      return;
    }
  }
}

// Box filter: mean over a k x k window centered on each pixel, reflect
// padding. Input must be N1HW; implemented as pad_reflect + conv with a
// constant 1/k^2 kernel so the gradient comes from the conv machinery.
template <typename T>
Tensor<T> box_mean(const Tensor<T>& x, int window) {
  const int radius = (window - 1) / 2;
  const T fill = T(1) / static_cast<T>(window * window);
  const Tensor<T> kernel = Tensor<T>::full({1, 1, window, window}, fill, false);
  return conv2d(pad_reflect(x, radius), kernel, 1, 0);
}

template <typename T>
Tensor<T> ssim_map_single_channel(const Tensor<T>& x, const Tensor<T>& y,
                                  const SsimParams& p) {
  const T c1 = static_cast<T>(p.c1);
  const T c2 = static_cast<T>(p.c2);
  const Tensor<T> mu_x = box_mean(x, p.window);
  const Tensor<T> mu_y = box_mean(y, p.window);
  const Tensor<T> mu_xx = mul(mu_x, mu_x);
  const Tensor<T> mu_yy = mul(mu_y, mu_y);
  const Tensor<T> mu_xy = mul(mu_x, mu_y);
  const Tensor<T> var_x = sub(box_mean(mul(x, x), p.window), mu_xx);
  const Tensor<T> var_y = sub(box_mean(mul(y, y), p.window), mu_yy);
  const Tensor<T> cov_xy = sub(box_mean(mul(x, y), p.window), mu_xy);

  const Tensor<T> lum = div(add_scalar(mul_scalar(mu_xy, T(2)), c1),
                            add_scalar(add(mu_xx, mu_yy), c1));
  const Tensor<T> str = div(add_scalar(mul_scalar(cov_xy, T(2)), c2),
                            add_scalar(add(var_x, var_y), c2));
  return mul(lum, str);
}

}  // namespace

SsimChannelMode ssim_channel_mode_from_string(const std::string& name) {
  if (name == "luminance") return SsimChannelMode::Luminance;
  if (name == "per_channel") return SsimChannelMode::PerChannelMean;
  throw std::invalid_argument("unknown ssim channel mode '" + name +
                              "' (expected 'luminance' or 'per_channel')");
}

std::string to_string(SsimChannelMode mode) {
  return mode == SsimChannelMode::Luminance ? "luminance" : "per_channel";
}

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("ssim: window must be odd and >= 3, got " +
                                std::to_string(window));
  }
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    throw std::invalid_argument("ssim: C1 and C2 must be > 0");
  }
}

void LossWeights::validate() const {
  for (double w : {lambda_adv, lambda_cyc, lambda_ssim}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("loss weights must be finite and >= 0");
    }
  }
}

bool loss_report_consistent(const LossReport& r, const LossWeights& w, double rel_tol) {
  auto close = [rel_tol](double total, double combined) {
    const double scale = std::max({1.0, std::abs(total), std::abs(combined)});
    return std::abs(total - combined) <= rel_tol * scale;
  };
  return close(r.total_g_fwd,
               w.lambda_adv * r.adv_g_fwd + w.lambda_cyc * r.cyc + w.lambda_ssim * r.ssim_fwd) &&
         close(r.total_g_bwd,
               w.lambda_adv * r.adv_g_bwd + w.lambda_cyc * r.cyc + w.lambda_ssim * r.ssim_bwd);
}

template <typename T>
Tensor<T> ssim_map(const Tensor<T>& x, const Tensor<T>& y, const SsimParams& params) {
  params.validate();
  if (x.shape() != y.shape()) {
    throw std::invalid_argument("ssim_map: shape mismatch " + shape_str(x.shape()) +
                                " vs " + shape_str(y.shape()));
  }
  if (x.shape().size() != 4) {
    throw std::invalid_argument("ssim_map: expected NCHW input, got " +
                                shape_str(x.shape()));
  }
  warn_if_outside_unit(x, "ssim_map input x");
  warn_if_outside_unit(y, "ssim_map input y");

  const int64_t channels = x.shape()[1];
  if (channels == 1) {
    return ssim_map_single_channel(x, y, params);
  }
  if (params.channel_mode == SsimChannelMode::Luminance) {
    return ssim_map_single_channel(luminance(x), luminance(y), params);
  }
  Tensor<T> acc;
  for (int64_t c = 0; c < channels; ++c) {
    Tensor<T> m = ssim_map_single_channel(channel_slice(x, c, 1),
                                          channel_slice(y, c, 1), params);
    acc = c == 0 ? m : add(acc, m);
  }
  return mul_scalar(acc, T(1) / static_cast<T>(channels));
}

template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& x, const Tensor<T>& gx, const SsimParams& params) {
  auto to_unit = [](const Tensor<T>& t) {
    return add_scalar(mul_scalar(t, T(0.5)), T(0.5));
  };
  const Tensor<T> map = ssim_map(to_unit(x), to_unit(gx), params);
  return add_scalar(neg(mean_all(map)), T(1));
}

template <typename T>
Tensor<T> cycle_loss(const Tensor<T>& x, const Tensor<T>& fgx, const Tensor<T>& y,
                     const Tensor<T>& gfy) {
  if (x.shape() != fgx.shape()) {
    throw std::invalid_argument("cycle_loss: forward shapes " + shape_str(x.shape()) +
                                " vs " + shape_str(fgx.shape()));
  }
  if (y.shape() != gfy.shape()) {
    throw std::invalid_argument("cycle_loss: backward shapes " + shape_str(y.shape()) +
                                " vs " + shape_str(gfy.shape()));
  }
  return add(mean_all(abs_op(sub(fgx, x))), mean_all(abs_op(sub(gfy, y))));
}

template <typename T>
Tensor<T> adversarial_ls_g(const Tensor<T>& d_fake_logits) {
  return mean_all(square(add_scalar(d_fake_logits, T(-1))));
}

template <typename T>
Tensor<T> adversarial_ls_d(const Tensor<T>& d_real_logits, const Tensor<T>& d_fake_logits) {
  return add(mean_all(square(add_scalar(d_real_logits, T(-1)))),
             mean_all(square(d_fake_logits)));
}

template <typename T>
Tensor<T> adversarial_nll(const Tensor<T>& d_real_probs, const Tensor<T>& d_fake_probs) {
  for (const Tensor<T>* t : {&d_real_probs, &d_fake_probs}) {
    for (T v : t->values()) {
      if (!(v >= T(0)) || !(v <= T(1))) {
        throw std::domain_error("adversarial_nll: probabilities must lie in [0, 1]");
      }
    }
  }
  const T lo = T(kProbClamp);
  const T hi = T(1) - T(kProbClamp);
  const Tensor<T> real = clamp(d_real_probs, lo, hi);
  const Tensor<T> fake = clamp(d_fake_probs, lo, hi);
  return add(mean_all(log_op(real)),
             mean_all(log_op(add_scalar(neg(fake), T(1)))));
}

template <typename T>
Tensor<T> total_generator_loss(const Tensor<T>& adv, const Tensor<T>& cyc,
                               const Tensor<T>& ssim, const LossWeights& weights) {
  weights.validate();
  return add(add(mul_scalar(adv, static_cast<T>(weights.lambda_adv)),
                 mul_scalar(cyc, static_cast<T>(weights.lambda_cyc))),
             mul_scalar(ssim, static_cast<T>(weights.lambda_ssim)));
}

#define UWCT_INSTANTIATE_LOSSES(T)                                                     \
  template Tensor<T> ssim_map<T>(const Tensor<T>&, const Tensor<T>&, const SsimParams&); \
  template Tensor<T> ssim_loss<T>(const Tensor<T>&, const Tensor<T>&, const SsimParams&); \
  template Tensor<T> cycle_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                   const Tensor<T>&);                                   \
  template Tensor<T> adversarial_ls_g<T>(const Tensor<T>&);                             \
  template Tensor<T> adversarial_ls_d<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> adversarial_nll<T>(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> total_generator_loss<T>(const Tensor<T>&, const Tensor<T>&,        \
                                             const Tensor<T>&, const LossWeights&);

UWCT_INSTANTIATE_LOSSES(float)
UWCT_INSTANTIATE_LOSSES(double)

#undef UWCT_INSTANTIATE_LOSSES

}  // namespace uwct
