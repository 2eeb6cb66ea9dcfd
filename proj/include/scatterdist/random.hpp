#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace scatterdist {

// Identifier written into sweep summaries so a seed can be tied to the exact
// generator that consumed it.
inline constexpr std::string_view kNoiseGeneratorId = "splitmix64-boxmuller/1";

// SplitMix64 (Steele, Lea, Flood 2014). Fixed-width integer arithmetic, so a
// seed yields the same stream on every platform.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

private:
  std::uint64_t state_;
};

// Standard normal deviates by the Box-Muller transform, both outputs used.
class NormalStream {
public:
  explicit NormalStream(std::uint64_t seed) noexcept : bits_(seed) {}

  double next() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = bits_.uniform_open();
    const double u2 = bits_.uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

private:
  SplitMix64 bits_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace scatterdist
