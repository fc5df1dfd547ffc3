#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "dagar/errors.hpp"

namespace dagar {

// Counter-based splittable generator (Philox 4x32-10). Every stochastic
// routine in this library takes an Rng (or a seed) explicitly; split()
// derives statistically independent child streams, so replicate r of an
// experiment can use rng.split(r) regardless of scheduling order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  // Independent child stream. Children of distinct substreams (and the
  // parent itself) never share counter blocks.
  Rng split(std::uint64_t substream) const noexcept {
    const std::array<std::uint32_t, 4> h = block(
        key_, {static_cast<std::uint32_t>(substream),
               static_cast<std::uint32_t>(substream >> 32),
               static_cast<std::uint32_t>(stream_) ^ 0x5eedcafeu,
               static_cast<std::uint32_t>(stream_ >> 32) ^ 0x9e3779b9u});
    Rng child(0);
    child.key_ = {h[0], h[1]};
    child.stream_ = (static_cast<std::uint64_t>(h[3]) << 32) | h[2];
    return child;
  }

  std::uint64_t next_u64() noexcept {
    if (buf_pos_ >= 4) refill();
    const std::uint32_t lo = buf_[buf_pos_++];
    const std::uint32_t hi = buf_[buf_pos_++];
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

  std::uint64_t operator()() noexcept { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

  // Uniform on the open interval (0,1); safe to pass to log().
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    detail::require(n > 0, "uniform_below: n must be positive");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do { x = next_u64(); } while (x >= limit);
    return x % n;
  }

  // Standard normal, Box-Muller with a cached spare.
  double normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Gamma(shape, rate) by Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate) {
    detail::require(shape > 0 && rate > 0, "gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double boost = std::pow(uniform(), 1.0 / shape);
      return gamma(shape + 1.0, rate) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                            std::array<std::uint32_t, 4> ctr) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  void refill() noexcept {
    buf_ = block(key_, {static_cast<std::uint32_t>(counter_),
                        static_cast<std::uint32_t>(counter_ >> 32),
                        static_cast<std::uint32_t>(stream_),
                        static_cast<std::uint32_t>(stream_ >> 32)});
    ++counter_;
    buf_pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dagar
