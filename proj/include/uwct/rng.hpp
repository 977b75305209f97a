#pragma once

#include <cstdint>
#include <iosfwd>

namespace uwct {

// Small deterministic PRNG (splitmix64 core). The C++ standard library
// distributions are not bit-reproducible across implementations, so every
// stochastic element of the pipeline draws from this generator instead.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of entropy.
  double next_double();
  // Uniform integer in [0, n). n must be > 0.
  uint64_t next_index(uint64_t n);
  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_normal();

  // Derives an independent stream from (seed, stream_id). Used to give every
  // subsystem (net init, replay buffers, toy data, shuffling) its own rng.
  static Rng stream(uint64_t seed, uint64_t stream_id);

  void save(std::ostream& out) const;
  void load(std::istream& in);

  bool operator==(const Rng& other) const;

 private:
  uint64_t state_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace uwct
