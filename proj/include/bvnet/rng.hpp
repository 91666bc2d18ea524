#ifndef BVNET_RNG_HPP
#define BVNET_RNG_HPP

// Counter-based Gaussian noise. Every draw is a pure function of
// (seed, step, agent), so a trajectory does not depend on the order in
// which agents or steps are evaluated, and trials with distinct seeds never
// share generator state.
//
// Generator: three chained SplitMix64 finalizers over the counter words,
// two 53-bit uniforms per draw, Box-Muller (cosine branch).

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bvnet {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// The noise source for one time step of one trajectory.
class StepStream {
 public:
  constexpr StepStream(std::uint64_t seed, std::uint64_t step) noexcept
      : key_(splitmix64(splitmix64(seed) ^ step)) {}

  constexpr std::uint64_t bits(std::uint32_t agent,
                               std::uint32_t lane) const noexcept {
    return splitmix64(key_ ^ (static_cast<std::uint64_t>(agent) << 1 | lane));
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint32_t agent, std::uint32_t lane) const noexcept {
    return (static_cast<double>(bits(agent, lane) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw for `agent` at this step.
  double gaussian(std::uint32_t agent) const noexcept {
    const double u1 = uniform(agent, 0);
    const double u2 = uniform(agent, 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace bvnet

#endif  // BVNET_RNG_HPP
