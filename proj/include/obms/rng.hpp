#pragma once

#include <cstdint>

namespace obms {

// Counter-based 64-bit generator (SplitMix64 update + finalizer). The output
// sequence is fixed at the bit level, so seeded runs reproduce across
// platforms. Streams for (replicate, batch, purpose) are derived by hashing
// the ids into the seed rather than by jumping a shared sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed + kGamma)) {}

  // Child generator for a named substream. Does not advance this generator.
  Rng fork(std::uint64_t stream_id) const {
    return Rng(raw(state_ ^ mix64(stream_id + kGamma)));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n), unbiased by rejection. n must be positive.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (-n) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x < threshold);
    return x % n;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms, keeps no
  // spare so the generator state stays a single word.
  double next_normal();

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  struct RawTag {};
  Rng(std::uint64_t s, RawTag) : state_(s) {}
  static Rng raw(std::uint64_t s) { return Rng(s, RawTag{}); }

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

// Named substream ids used throughout the toolkit.
namespace streams {
inline constexpr std::uint64_t kBatchData = 0x0B41C8;
inline constexpr std::uint64_t kTestData = 0x7E57;
inline constexpr std::uint64_t kSampler = 0x5A3B1E;
}  // namespace streams

}  // namespace obms
