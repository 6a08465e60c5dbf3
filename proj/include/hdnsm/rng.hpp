#pragma once

#include <algorithm>
#include <cstdint>

namespace hdnsm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based uniform stream: the i-th draw depends only on (seed, stream, i),
// so parallel consumers are reproducible regardless of scheduling.
struct CounterStream {
  std::uint64_t base;
  CounterStream(std::uint64_t seed, std::uint64_t stream)
      : base(splitmix64(seed ^ splitmix64(0x5851f42d4c957f2dULL + stream))) {}

  // uniform on the open interval (0,1)
  double uniform(std::uint64_t i) const {
    const std::uint64_t bits = splitmix64(base ^ splitmix64(i + 1));
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return std::min(std::max(u, 0x1.0p-53), 1.0 - 0x1.0p-53);
  }
};

}  // namespace hdnsm
