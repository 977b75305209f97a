#pragma once

#include <vector>

#include "uwct/rng.hpp"
#include "uwct/tensor.hpp"

namespace uwct {

// Bounded pool of previously generated images sampled when updating the
// discriminators. Until the pool is full every query stores its input and
// returns it; afterwards a coin flip either returns the fresh image or swaps
// it for a stored one. Everything entering or leaving the pool is detached.
template <typename T>
class ReplayBuffer {
 public:
  // Query decision override used by tests; Random is the trained behavior.
  enum class Mode { Random, AlwaysFresh, AlwaysHistorical };

  ReplayBuffer() = default;
  ReplayBuffer(int64_t capacity, Rng rng);

  Tensor<T> query(const Tensor<T>& fresh);

  int64_t capacity() const { return capacity_; }
  size_t size() const { return pool_.size(); }
  void set_mode(Mode mode) { mode_ = mode; }

  const std::vector<Tensor<T>>& pool() const { return pool_; }
  const Rng& rng() const { return rng_; }
  void restore(std::vector<Tensor<T>> pool, Rng rng);

 private:
  int64_t capacity_ = 50;
  std::vector<Tensor<T>> pool_;
  Rng rng_;
  Mode mode_ = Mode::Random;
};

extern template class ReplayBuffer<float>;
extern template class ReplayBuffer<double>;

}  // namespace uwct
