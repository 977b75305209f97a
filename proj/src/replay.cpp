#include "uwct/replay.hpp"

#include <stdexcept>

namespace uwct {

template <typename T>
ReplayBuffer<T>::ReplayBuffer(int64_t capacity, Rng rng)
    : capacity_(capacity), rng_(rng) {
  if (capacity < 1) throw std::invalid_argument("replay buffer capacity must be >= 1");
  pool_.reserve(static_cast<size_t>(capacity));
}

template <typename T>
Tensor<T> ReplayBuffer<T>::query(const Tensor<T>& fresh) {
  Tensor<T> stored = fresh.detach();
  if (static_cast<int64_t>(pool_.size()) < capacity_) {
    pool_.push_back(stored);
    return stored;
  }
  bool use_history;
  switch (mode_) {
    case Mode::AlwaysFresh:
      use_history = false;
      break;
    case Mode::AlwaysHistorical:
      use_history = true;
      break;
    default:
      use_history = rng_.next_double() < 0.5;
  }
  if (!use_history) return stored;
  const size_t slot = static_cast<size_t>(rng_.next_index(pool_.size()));
  Tensor<T> history = pool_[slot];
  pool_[slot] = stored;
  return history;
}

template <typename T>
void ReplayBuffer<T>::restore(std::vector<Tensor<T>> pool, Rng rng) {
  if (static_cast<int64_t>(pool.size()) > capacity_) {
    throw std::invalid_argument("replay restore: pool exceeds capacity");
  }
  pool_ = std::move(pool);
  rng_ = rng;
}

template class ReplayBuffer<float>;
template class ReplayBuffer<double>;

}  // namespace uwct
