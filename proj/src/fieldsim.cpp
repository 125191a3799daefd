#include "smk/fieldsim.hpp"

#include <cmath>
#include <numeric>

namespace smk {

int ScannerSpec::active_axis_count() const {
  int n = 0;
  for (int i = 0; i < 3; ++i) n += axis_active(i) ? 1 : 0;
  return n;
}

void validate(const ScannerSpec& spec) {
  const double gmax = spec.gradients.cwiseAbs().maxCoeff();
  if (!(gmax > 0.0)) throw ConfigError("scanner: selection-field gradients must not all be zero");
  if (std::abs(spec.gradients.sum()) > 1e-12 * gmax)
    throw ConfigError("scanner: gradients violate the Gauss constraint (Gx + Gy + Gz must be 0)");
  for (int i = 0; i < 3; ++i) {
    if (!(spec.df_amplitudes[i] >= 0.0) || !std::isfinite(spec.df_amplitudes[i]))
      throw ConfigError("scanner: drive-field amplitudes must be finite and non-negative");
    if (spec.df_dividers[i] == 0) throw ConfigError("scanner: drive-field dividers must be positive");
    if (spec.axis_active(i) && spec.gradients[i] == 0.0)
      throw ConfigError("scanner: active drive axis " + std::to_string(i) + " has zero gradient");
  }
  if (spec.active_axis_count() == 0) throw ConfigError("scanner: at least one drive-field amplitude must be positive");
  if (!(spec.base_frequency > 0.0) || !(spec.sampling_rate > 0.0))
    throw ConfigError("scanner: base frequency and sampling rate must be positive");
}

Vec3 selection_field(const ScannerSpec& spec, const Vec3& r) { return spec.gradients.cwiseProduct(r); }

Vec3 drive_field(const ScannerSpec& spec, double t) {
  Vec3 h;
  for (int i = 0; i < 3; ++i) {
    h[i] = spec.df_amplitudes[i] * std::sin(2.0 * std::numbers::pi * spec.df_frequency(i) * t);
  }
  return h;
}

Vec3 total_field(const ScannerSpec& spec, const Vec3& r, double t) {
  return selection_field(spec, r) + drive_field(spec, t);
}

Vec3 ffp_position(const ScannerSpec& spec, double t) {
  Vec3 hd = drive_field(spec, t);
  Vec3 r = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (spec.axis_active(i)) r[i] = -hd[i] / spec.gradients[i];
  }
  return r;
}

TrajectoryTiming trajectory_timing(const ScannerSpec& spec) {
  std::uint64_t l = 1;
  for (int i = 0; i < 3; ++i) {
    if (spec.df_dividers[i] == 0) throw ConfigError("scanner: drive-field dividers must be positive");
    if (spec.axis_active(i)) l = std::lcm(l, std::uint64_t{spec.df_dividers[i]});
  }
  TrajectoryTiming timing;
  timing.period = static_cast<double>(l) / spec.base_frequency;
  const double samples = spec.sampling_rate * timing.period;
  const double rounded = std::round(samples);
  if (std::abs(samples - rounded) > 1e-9 * std::max(1.0, samples) || std::fmod(rounded, 2.0) != 0.0) {
    throw ConfigError("scanner: sampling_rate * period = " + std::to_string(samples) + " is not an even integer");
  }
  timing.n_samples = static_cast<std::size_t>(rounded);
  timing.n_freq = timing.n_samples / 2 + 1;
  return timing;
}

Vec3 df_fov(const ScannerSpec& spec) {
  Vec3 fov = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (!spec.axis_active(i)) continue;
    if (spec.gradients[i] == 0.0) throw ConfigError("scanner: zero gradient on active axis " + std::to_string(i));
    fov[i] = 2.0 * spec.df_amplitudes[i] / std::abs(spec.gradients[i]);
  }
  return fov;
}

}  // namespace smk
