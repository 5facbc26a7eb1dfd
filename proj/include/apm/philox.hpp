#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC 2011). Every output block is a pure
// function of (counter, key), so streams can be split across threads
// without any shared state.

#include <array>
#include <cstdint>

namespace apm {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      ctr = one_round(ctr, key);
    }
    return ctr;
  }

  /// Uniform double in the open interval (0, 1), addressed by
  /// (seed, row, column).
  static constexpr double uniform(std::uint64_t seed, std::uint64_t row,
                                  std::uint64_t column) noexcept {
    const Counter ctr{static_cast<std::uint32_t>(row),
                      static_cast<std::uint32_t>(row >> 32),
                      static_cast<std::uint32_t>(column),
                      static_cast<std::uint32_t>(column >> 32)};
    const Key key{static_cast<std::uint32_t>(seed),
                  static_cast<std::uint32_t>(seed >> 32)};
    const Counter out = block(ctr, key);
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;

  static constexpr Counter one_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

}  // namespace apm
