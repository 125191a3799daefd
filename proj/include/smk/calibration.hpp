#pragma once

#include <array>

#include "smk/common.hpp"

namespace smk {

/// Cartesian calibration grid. Sample n sits at center + fov ⊙ ((idx + 0.5)/N − 0.5).
/// Axes are indexed x=0, y=1, z=2; an inactive axis has N = 1 and fov = 0.
struct CalibrationSpec {
  Vec3 fov = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  std::array<std::size_t, 3> grid_size{1, 1, 1};
  /// c₀·V_Δ of the delta sample; fixed to 1 so S is the system function on the grid.
  double delta_volume = 1.0;

  Shape3 shape() const { return Shape3{grid_size[2], grid_size[1], grid_size[0]}; }
  std::size_t n_positions() const { return grid_size[0] * grid_size[1] * grid_size[2]; }
  Vec3 position(std::size_t ix, std::size_t iy, std::size_t iz) const;
  /// Position of the flattened (z, y, x) row-major index.
  Vec3 position(std::size_t flat) const;
  /// Physical coordinate of sample `idx` along `axis`.
  double coordinate(int axis, double idx) const;
  /// Grid spacing along `axis` (0 for a single-sample axis).
  double spacing(int axis) const { return grid_size[axis] > 0 ? fov[axis] / static_cast<double>(grid_size[axis]) : 0.0; }
};

void validate(const CalibrationSpec& calib);

}  // namespace smk
