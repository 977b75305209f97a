#include "uwct/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace uwct {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed) : state_(seed) {}

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_index(uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::next_index: n must be > 0");
  return next_u64() % n;
}

double Rng::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = next_double();
  double u2 = next_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = kTwoPi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

Rng Rng::stream(uint64_t seed, uint64_t stream_id) {
  uint64_t mix = seed;
  splitmix64(mix);
  mix ^= 0xa0761d6478bd642fULL * (stream_id + 1);
  return Rng(splitmix64(mix));
}

void Rng::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&state_), sizeof(state_));
  const uint8_t flag = has_cached_normal_ ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&flag), sizeof(flag));
  out.write(reinterpret_cast<const char*>(&cached_normal_), sizeof(cached_normal_));
}

void Rng::load(std::istream& in) {
  uint8_t flag = 0;
  in.read(reinterpret_cast<char*>(&state_), sizeof(state_));
  in.read(reinterpret_cast<char*>(&flag), sizeof(flag));
  in.read(reinterpret_cast<char*>(&cached_normal_), sizeof(cached_normal_));
  if (!in) throw std::runtime_error("Rng::load: truncated stream");
  has_cached_normal_ = flag != 0;
}

bool Rng::operator==(const Rng& other) const {
  return state_ == other.state_ && has_cached_normal_ == other.has_cached_normal_ &&
         (!has_cached_normal_ || cached_normal_ == other.cached_normal_);
}

}  // namespace uwct
