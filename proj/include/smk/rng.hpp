#pragma once

#include <cstdint>
#include <optional>

#include "smk/common.hpp"

namespace smk {

/// Counter-based SplitMix64 stream.
///
/// Output i of a stream with key k is mix64(k + (i + 1) * 0x9E3779B97F4A7C15), so any
/// draw is a pure function of (key, counter). Child streams are derived with
/// `split(id)`, whose key is mix64(mix64(k ^ (id * 0xD1B54A32D192ED03)) + 0x2545F4914F6CDD1D);
/// the result depends only on the parent key and the id, never on how many values the
/// parent has produced. All distributions below are implemented in this header/cpp so
/// sequences are identical across standard libraries.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix64(std::uint64_t z);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  CounterRng split(std::uint64_t stream_id) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased (rejection).
  std::uint64_t uniform_int(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  cdouble complex_normal() {
    double re = normal();
    double im = normal();
    return {re, im};
  }
  /// Uniformly distributed unit vector (normalized 3D standard normal).
  Vec3 unit_vector();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_normal_;
};

}  // namespace smk
