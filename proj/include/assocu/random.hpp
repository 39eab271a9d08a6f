#pragma once

#include <cstdint>
#include <random>

namespace assocu {

// A (seed, stream) pair names one reproducible random stream. Replications
// derive child streams so that results never depend on scheduling order.
struct SeedSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] SeedSpec child(std::uint64_t index) const;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

using Engine = std::mt19937_64;

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline SeedSpec SeedSpec::child(std::uint64_t index) const {
  return {seed, detail::mix64(stream ^ detail::mix64(index + 0x632be59bd9b4e019ULL))};
}

[[nodiscard]] inline Engine make_engine(const SeedSpec& spec) {
  const std::uint64_t a = detail::mix64(spec.seed);
  const std::uint64_t b = detail::mix64(a ^ spec.stream);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Engine(seq);
}

}  // namespace assocu
