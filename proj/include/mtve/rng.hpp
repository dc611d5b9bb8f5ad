#pragma once

// Counter-based uniform streams. A stream is identified by (seed, stream id);
// the k-th draw is a pure function of (seed, stream id, k), so results do not
// depend on evaluation order or thread assignment.

#include <cstdint>

namespace mtve {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterStream {
public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  /// Uniform on (0, 1); never returns exactly 0 or 1.
  double uniform() {
    const std::uint64_t bits = splitmix64(key_ + counter_++ * 0xd1b54a32d192ed03ULL);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace mtve
