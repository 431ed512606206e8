#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace feats {

/// Portable counter-based generator.
///
/// Output i of stream (seed, stream) is mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
/// where key = mix64(seed ^ mix64(stream ^ 0xD1B54A32D192ED03)) and mix64 is the
/// SplitMix64 finaliser (shifts 30/27/31, multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB). Any output is addressable without generating the ones
/// before it, so per-sample streams are independent of evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Standard normal via Box-Muller; pairs are consumed in order.
  double normal();
  bool bernoulli(double p);
  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix64(std::uint64_t z);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace feats
