#pragma once

// Per-trajectory random streams. Trajectory k of a run with master seed s draws
// from xoshiro256** seeded through SplitMix64 from a hash of (s, k), so any
// trajectory can be regenerated on its own, on any worker, in any order.

#include <cstdint>
#include <limits>

namespace eeqt {

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class Xoshiro256StarStar {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256StarStar(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random mantissa bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
};

using TrajectoryRng = Xoshiro256StarStar;

/// Seed of the stream owned by trajectory `traj_id` under `master_seed`.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t traj_id) noexcept {
  SplitMix64 outer(master_seed);
  const std::uint64_t base = outer();
  SplitMix64 inner(base ^ (traj_id * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
  return inner();
}

constexpr TrajectoryRng make_stream(std::uint64_t master_seed, std::uint64_t traj_id) noexcept {
  return TrajectoryRng(stream_seed(master_seed, traj_id));
}

}  // namespace eeqt
