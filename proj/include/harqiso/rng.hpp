#pragma once

#include <cstdint>
#include <random>

namespace harqiso {

/// splitmix64 step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// A deterministic uniform source on [0, 1). The engine and the bit-to-double
/// mapping are both fully specified, so streams are identical across
/// platforms and standard libraries.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
    engine_.seed(splitmix64(s));
  }

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace harqiso
