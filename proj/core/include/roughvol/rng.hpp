#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace roughvol {

/// Philox4x32-10 counter-based generator. Every draw is a pure function of
/// (key, counter), so each path owns an independent, addressable substream.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kW0;
      k[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  Key key_;
};

/// Standard normals addressed by (path, stream, index). One Philox block
/// yields two 53-bit uniforms and hence one Box-Muller pair, so indices 2m
/// and 2m+1 share a block.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream)
      : gen_(seed), path_(path), stream_(stream) {}

  /// Normal number `index` of this substream; `index` may be negative
  /// (cells before time zero).
  double at(std::int64_t index) const {
    const std::uint64_t u = static_cast<std::uint64_t>(index) + (std::uint64_t{1} << 62);
    const std::uint64_t block = u >> 1;
    if (block != cached_block_) {
      fill(block);
      cached_block_ = block;
    }
    return pair_[u & 1u];
  }

 private:
  void fill(std::uint64_t block) const {
    const auto r = gen_({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                         stream_ ^ static_cast<std::uint32_t>(path_ >> 32) * 0x9E3779B9u,
                         static_cast<std::uint32_t>(path_)});
    constexpr double k53 = 1.0 / 9007199254740992.0;
    const std::uint64_t a = (std::uint64_t{r[0]} << 32 | r[1]) >> 11;
    const std::uint64_t b = (std::uint64_t{r[2]} << 32 | r[3]) >> 11;
    const double u1 = (static_cast<double>(a) + 0.5) * k53;  // (0, 1)
    const double u2 = static_cast<double>(b) * k53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    pair_[0] = rad * std::cos(ang);
    pair_[1] = rad * std::sin(ang);
  }

  Philox4x32 gen_;
  std::uint64_t path_;
  std::uint32_t stream_;
  mutable std::uint64_t cached_block_ = ~std::uint64_t{0};
  mutable double pair_[2] = {0.0, 0.0};
};

}  // namespace roughvol
