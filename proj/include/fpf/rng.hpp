#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace fpf {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A block is a pure function of (counter, key), so any stream position can
/// be reached without stepping through the ones before it.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }
};

/// One independent random stream identified by (seed, stream id).  The only
/// mutable state is the block counter, so saving and restoring a stream is
/// saving one integer.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0) noexcept
      : seed_(seed), stream_(stream), counter_(counter) {}

  std::uint64_t counter() const noexcept { return counter_; }

  /// Two independent uniforms in (0, 1); consumes one block.
  std::pair<double, double> uniform_pair() noexcept {
    const auto r = next_block();
    const std::uint64_t a = (std::uint64_t{r[0]} << 32) | r[1];
    const std::uint64_t b = (std::uint64_t{r[2]} << 32) | r[3];
    return {to_open_unit(a), to_open_unit(b)};
  }

  double uniform() noexcept { return uniform_pair().first; }

  /// Two independent N(0,1) draws (Box-Muller); consumes one block.
  std::pair<double, double> normal_pair() noexcept {
    const auto [u1, u2] = uniform_pair();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// Fill `out[0..n)` with N(0,1) draws, consuming ceil(n/2) blocks.
  template <class Out>
  void fill_normal(Out& out, int n) noexcept {
    for (int k = 0; k < n; k += 2) {
      const auto [z0, z1] = normal_pair();
      out[k] = z0;
      if (k + 1 < n) out[k + 1] = z1;
    }
  }

 private:
  Philox4x32::Counter next_block() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                  static_cast<std::uint32_t>(counter_ >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                              static_cast<std::uint32_t>(seed_ >> 32)};
    ++counter_;
    return Philox4x32::block(ctr, key);
  }

  // 53 random bits mapped to the open interval (0, 1).
  static double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

}  // namespace fpf
