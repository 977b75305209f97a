#include "uwct/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace uwct {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("adam: learning rate must be > 0");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam: betas must be in (0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("adam: epsilon must be > 0");
  }
}

template <typename T>
void adam_update(std::span<T> values, std::span<const T> grads, std::span<T> m,
                 std::span<T> v, uint64_t step_count, const AdamConfig& cfg) {
  if (values.size() != m.size() || values.size() != v.size() ||
      (!grads.empty() && grads.size() != values.size())) {
    throw std::invalid_argument("adam_update: moment/gradient sizes do not match parameters");
  }
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(step_count)));
  const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(step_count)));
  for (size_t i = 0; i < values.size(); ++i) {
    const T g = grads.empty() ? T(0) : grads[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    const T m_hat = m[i] / bc1;
    const T v_hat = v[i] / bc2;
    values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template <typename T>
AdamOptimizer<T>::AdamOptimizer(std::vector<Tensor<T>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), T(0));
    v_.emplace_back(p.numel(), T(0));
  }
}

template <typename T>
void AdamOptimizer<T>::step() {
  ++step_count_;
  for (size_t i = 0; i < params_.size(); ++i) {
    adam_update<T>(params_[i].mutable_values(), params_[i].grad(), m_[i], v_[i],
                   step_count_, cfg_);
  }
}

template <typename T>
void AdamOptimizer<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void AdamOptimizer<T>::restore(uint64_t step_count, std::vector<std::vector<T>> m,
                               std::vector<std::vector<T>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("adam restore: moment count does not match parameters");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (static_cast<int64_t>(m[i].size()) != params_[i].numel() ||
        static_cast<int64_t>(v[i].size()) != params_[i].numel()) {
      throw std::invalid_argument("adam restore: moment shapes do not match parameters");
    }
  }
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;
template void adam_update<float>(std::span<float>, std::span<const float>,
                                 std::span<float>, std::span<float>, uint64_t,
                                 const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>,
                                  std::span<double>, std::span<double>, uint64_t,
                                  const AdamConfig&);

}  // namespace uwct
