#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace utep::ndgrad {

/// Seeded mt19937_64 stream. Draw helpers are hand-rolled on top of the raw
/// 64-bit output so sequences are identical across standard libraries.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Independent stream for a named purpose (batching, dropout, init, ...).
  static RngStream derive(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t index = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace utep::ndgrad
