#pragma once

#include <cmath>
#include <cstdint>

namespace bblab {

struct RngConfig {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Fixed stream ids so attack, defense and data generation never share a
// random stream. Consumers derive sub-streams by adding offsets.
namespace streams {
inline constexpr std::uint64_t kWatermark = 0x01;
inline constexpr std::uint64_t kAttack = 0x100;
inline constexpr std::uint64_t kVariations = 0x200;
inline constexpr std::uint64_t kGuardPolicy = 0x300;
inline constexpr std::uint64_t kSplit = 0x400;
inline constexpr std::uint64_t kSynth = 0x500;
inline constexpr std::uint64_t kCovers = 0x600;
inline constexpr std::uint64_t kDefense = 0x700;
inline constexpr std::uint64_t kFpSplits = 0x800;
}  // namespace streams

// Counter-based generator: output i is a splitmix64 finalizer applied to
// key + i * golden ratio. Identical (seed, stream) reproduces identical
// draws on every platform; draws never depend on call history.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(finalize(finalize(seed + kGolden) ^ finalize(stream + 0x6a09e667f3bcc909ULL))),
        counter_(0) {}
  explicit Rng(const RngConfig& cfg) : Rng(cfg.seed, cfg.stream) {}

  std::uint64_t next_u64() { return finalize(key_ + kGolden * ++counter_); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n); modulo bias is negligible for n << 2^64
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  bool coin() { return (next_u64() >> 63) != 0; }

  // Stateless draw keyed by an index, independent of generator position.
  static bool keyed_coin(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    Rng r(seed, stream);
    return (finalize(r.key_ + kGolden * (index + 1)) >> 63) != 0;
  }
  static std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    Rng r(seed, stream);
    return finalize(r.key_ + kGolden * (index + 1));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t finalize(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace bblab
