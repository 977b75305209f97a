#include "uwct/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwct::oracles {

namespace {

int64_t reflect(int64_t i, int64_t extent) {
  if (i < 0) return -i;
  if (i >= extent) return 2 * extent - 2 - i;
  return i;
}

}  // namespace

std::vector<double> ssim_map_reference(const std::vector<double>& x,
                                       const std::vector<double>& y, int64_t height,
                                       int64_t width, const SsimParams& params) {
  if (x.size() != y.size() || static_cast<int64_t>(x.size()) != height * width) {
    throw std::invalid_argument("ssim_map_reference: size mismatch");
  }
  const int radius = (params.window - 1) / 2;
  const double patch_n = static_cast<double>(params.window) * params.window;
  std::vector<double> out(x.size());
  for (int64_t py = 0; py < height; ++py) {
    for (int64_t px = 0; px < width; ++px) {
      double sum_x = 0, sum_y = 0, sum_xx = 0, sum_yy = 0, sum_xy = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int64_t iy = reflect(py + dy, height);
          const int64_t ix = reflect(px + dx, width);
          const double xv = x[iy * width + ix];
          const double yv = y[iy * width + ix];
          sum_x += xv;
          sum_y += yv;
          sum_xx += xv * xv;
          sum_yy += yv * yv;
          sum_xy += xv * yv;
        }
      }
      const double mu_x = sum_x / patch_n;
      const double mu_y = sum_y / patch_n;
      const double var_x = sum_xx / patch_n - mu_x * mu_x;
      const double var_y = sum_yy / patch_n - mu_y * mu_y;
      const double cov = sum_xy / patch_n - mu_x * mu_y;
      const double lum = (2 * mu_x * mu_y + params.c1) / (mu_x * mu_x + mu_y * mu_y + params.c1);
      const double str = (2 * cov + params.c2) / (var_x + var_y + params.c2);
      out[py * width + px] = lum * str;
    }
  }
  return out;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& fn,
    const std::vector<double>& point, double step) {
  std::vector<double> grad(point.size());
  std::vector<double> probe = point;
  for (size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + step;
    const double up = fn(probe);
    probe[i] = point[i] - step;
    const double down = fn(probe);
    probe[i] = point[i];
    grad[i] = (up - down) / (2 * step);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& analytic,
                          const std::vector<double>& numeric) {
  if (analytic.size() != numeric.size()) {
    throw std::invalid_argument("max_relative_error: size mismatch");
  }
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

GradCheckResult grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& loss,
    const std::vector<Tensor<double>>& inputs, double step) {
  for (const auto& t : inputs) t.zero_grad();
  Tensor<double> root = loss(inputs);
  root.backward();

  GradCheckResult result;
  for (size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    const auto analytic_span = inputs[k].grad();
    std::vector<double> analytic(analytic_span.begin(), analytic_span.end());
    if (analytic.empty()) analytic.assign(inputs[k].numel(), 0.0);

    std::vector<double> point(inputs[k].values().begin(), inputs[k].values().end());
    auto eval = [&](const std::vector<double>& candidate) {
      std::vector<Tensor<double>> probe = inputs;
      probe[k] = Tensor<double>::from_vector(inputs[k].shape(), candidate, false);
      return loss(probe).item();
    };
    const std::vector<double> numeric = finite_difference_gradient(eval, point, step);
    result.max_rel_error = std::max(result.max_rel_error,
                                    max_relative_error(analytic, numeric));
    result.checked += analytic.size();
  }
  return result;
}

GradCheckResult grad_check_inplace(const std::function<Tensor<double>()>& loss,
                                   const std::vector<Tensor<double>>& leaves, double step) {
  for (const auto& t : leaves) t.zero_grad();
  loss().backward();

  GradCheckResult result;
  for (const auto& leaf : leaves) {
    if (!leaf.requires_grad()) continue;
    const auto grad_span = leaf.grad();
    std::vector<double> analytic(grad_span.begin(), grad_span.end());
    if (analytic.empty()) analytic.assign(leaf.numel(), 0.0);

    std::vector<double> numeric(analytic.size());
    Tensor<double> mutable_leaf = leaf;
    auto values = mutable_leaf.mutable_values();
    for (size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss().item();
      values[i] = saved - step;
      const double down = loss().item();
      values[i] = saved;
      numeric[i] = (up - down) / (2 * step);
    }
    result.max_rel_error =
        std::max(result.max_rel_error, max_relative_error(analytic, numeric));
    result.checked += analytic.size();
  }
  return result;
}

std::vector<double> adam_scalar_recurrence(double theta0, const std::vector<double>& grads,
                                           double lr, double beta1, double beta2,
                                           double epsilon) {
  std::vector<double> trajectory;
  double theta = theta0, m = 0.0, v = 0.0;
  for (size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    theta -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    trajectory.push_back(theta);
  }
  return trajectory;
}

Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo, double hi,
                             bool requires_grad) {
  std::vector<double> values(static_cast<size_t>(numel_of(shape)));
  for (double& v : values) v = lo + (hi - lo) * rng.next_double();
  return Tensor<double>::from_vector(shape, std::move(values), requires_grad);
}

}  // namespace uwct::oracles
