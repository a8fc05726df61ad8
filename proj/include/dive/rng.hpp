#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

namespace dive {

/// Counter-based generator built on the splitmix64 finalizer.
///
/// The n-th output depends only on (key, n), so independent substreams are
/// obtained by hashing a parent key with a stream index. Every sampler in the
/// library draws from this family, which keeps results identical regardless
/// of how replicates are scheduled across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t next() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer in [0, bound) via Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = next();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<unsigned __int128>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double logistic() {
    const double u = uniform();
    return std::log(u) - std::log1p(-u);
  }

  double normal();

  template <class T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

  Rng substream(std::uint64_t index) const { return Rng(key_, index + 1); }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dive
