#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uwct/tensor.hpp"

namespace uwct {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One bias-corrected update:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
// step_count is the post-increment step index t (>= 1).
template <typename T>
void adam_update(std::span<T> values, std::span<const T> grads, std::span<T> m,
                 std::span<T> v, uint64_t step_count, const AdamConfig& cfg);

// Per-parameter first/second moments over a fixed parameter list. A parameter
// whose gradient has never been populated is treated as having gradient zero.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::vector<Tensor<T>> params, AdamConfig cfg);

  void step();
  void zero_grad();

  uint64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }
  size_t size() const { return params_.size(); }
  std::span<const T> first_moment(size_t i) const { return m_[i]; }
  std::span<const T> second_moment(size_t i) const { return v_[i]; }

  // Checkpoint restore.
  void restore(uint64_t step_count, std::vector<std::vector<T>> m,
               std::vector<std::vector<T>> v);

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  AdamConfig cfg_;
  uint64_t step_count_ = 0;
};

extern template class AdamOptimizer<float>;
extern template class AdamOptimizer<double>;
extern template void adam_update<float>(std::span<float>, std::span<const float>,
                                        std::span<float>, std::span<float>, uint64_t,
                                        const AdamConfig&);
extern template void adam_update<double>(std::span<double>, std::span<const double>,
                                         std::span<double>, std::span<double>,
                                         uint64_t, const AdamConfig&);

}  // namespace uwct
