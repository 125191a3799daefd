#include "smk/rng.hpp"

#include <cmath>
#include <numbers>

namespace smk {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t CounterRng::mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng CounterRng::split(std::uint64_t stream_id) const {
  std::uint64_t k = mix64(mix64(key_ ^ (stream_id * 0xD1B54A32D192ED03ULL)) + 0x2545F4914F6CDD1DULL);
  return CounterRng(k);
}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::uniform_int(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % n;
  }
}

double CounterRng::normal() {
  if (cached_normal_) {
    double v = *cached_normal_;
    cached_normal_.reset();
    return v;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(a);
  return r * std::cos(a);
}

Vec3 CounterRng::unit_vector() {
  for (;;) {
    Vec3 v(normal(), normal(), normal());
    double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

}  // namespace smk
