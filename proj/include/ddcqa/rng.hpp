#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ddcqa {

/// Random stream keyed by a tuple of integers. The double and integer
/// mappings are spelled out here because the standard distributions are
/// implementation-defined, and datasets must match across toolchains.
class KeyedStream {
public:
  KeyedStream(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t k : key) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n >= 1, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace ddcqa
