#pragma once

#include <cstdint>
#include <string_view>

namespace teamdp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream for one purpose, so independent consumers never share draws.
inline std::uint64_t substream(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : purpose) h = (h ^ c) * 0x100000001b3ULL;
  return splitmix64(seed ^ h);
}

/// Uniform draw in [0, 1) indexed by (stream, counter); no state is carried between calls.
inline double counter_uniform(std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(splitmix64(stream ^ splitmix64(counter)) >> 11) * 0x1.0p-53;
}

}  // namespace teamdp
