#pragma once

#include <cstdint>
#include <limits>

namespace rmtlab::rng {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Substream tags keep independent draws of one realization apart.
enum class Purpose : std::uint64_t {
  Matrix = 1,
  Coupling = 2,
  Synthetic = 3,
  Calibration = 4,
};

// Counter-based generator: the state is a pure function of
// (master seed, realization index, purpose), so a realization can be
// regenerated on any thread in any order.
class Stream {
public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t master_seed, std::uint64_t index, Purpose purpose = Purpose::Matrix) noexcept
      : state_(mix64(mix64(master_seed) ^ mix64(index * 0xD1B54A32D192ED03ULL + static_cast<std::uint64_t>(purpose)))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

}  // namespace rmtlab::rng
