#pragma once

#include <array>
#include <cstdint>

#include "smk/common.hpp"

namespace smk {

/// Converts a gradient given in T·m⁻¹·μ₀⁻¹ to A/m².
inline double gradient_from_tesla_per_meter(double g) { return g / constants::mu0; }
/// Converts an amplitude given in mT·μ₀⁻¹ to A/m.
inline double field_from_millitesla(double a) { return a * 1e-3 / constants::mu0; }
inline double gradient_to_tesla_per_meter(double g) { return g * constants::mu0; }
inline double field_to_millitesla(double a) { return a * constants::mu0 * 1e3; }

/// FFP scanner with a Lissajous drive field. Fields are stored in A/m, gradients in A/m².
/// An axis with zero drive amplitude is inactive.
struct ScannerSpec {
  Vec3 gradients = Vec3::Zero();
  Vec3 df_amplitudes = Vec3::Zero();
  std::array<std::uint32_t, 3> df_dividers{102, 96, 99};
  double base_frequency = 2.5e6;
  double sampling_rate = 5.0e6;

  double df_frequency(int axis) const { return base_frequency / df_dividers[axis]; }
  bool axis_active(int axis) const { return df_amplitudes[axis] > 0.0; }
  int active_axis_count() const;
};

struct TrajectoryTiming {
  double period = 0.0;          // seconds
  std::size_t n_samples = 0;
  std::size_t n_freq = 0;       // one-sided spectrum length including DC
};

/// Throws ConfigError unless the Gauss constraint, amplitude signs and divider values hold.
void validate(const ScannerSpec& spec);

Vec3 selection_field(const ScannerSpec& spec, const Vec3& r);
Vec3 drive_field(const ScannerSpec& spec, double t);
Vec3 total_field(const ScannerSpec& spec, const Vec3& r, double t);

/// Position of the field-free point at time t. Inactive axes stay at 0.
Vec3 ffp_position(const ScannerSpec& spec, double t);

TrajectoryTiming trajectory_timing(const ScannerSpec& spec);

/// Drive-field FOV 2A_i/|G_i| on active axes, 0 elsewhere.
Vec3 df_fov(const ScannerSpec& spec);

}  // namespace smk
