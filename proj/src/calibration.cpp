#include "smk/calibration.hpp"

#include <cmath>

namespace smk {

double CalibrationSpec::coordinate(int axis, double idx) const {
  const double n = static_cast<double>(grid_size[axis]);
  return center[axis] + fov[axis] * ((idx + 0.5) / n - 0.5);
}

Vec3 CalibrationSpec::position(std::size_t ix, std::size_t iy, std::size_t iz) const {
  return Vec3(coordinate(0, double(ix)), coordinate(1, double(iy)), coordinate(2, double(iz)));
}

Vec3 CalibrationSpec::position(std::size_t flat) const {
  const std::size_t nx = grid_size[0];
  const std::size_t ny = grid_size[1];
  return position(flat % nx, (flat / nx) % ny, flat / (nx * ny));
}

void validate(const CalibrationSpec& calib) {
  for (int i = 0; i < 3; ++i) {
    if (calib.grid_size[i] == 0) throw ConfigError("calibration: grid sizes must be positive");
    if (!std::isfinite(calib.fov[i]) || calib.fov[i] < 0.0) throw ConfigError("calibration: fov must be finite and non-negative");
    if (calib.grid_size[i] > 1 && !(calib.fov[i] > 0.0))
      throw ConfigError("calibration: axis " + std::to_string(i) + " has several samples but zero fov");
    if (!std::isfinite(calib.center[i])) throw ConfigError("calibration: center must be finite");
  }
}

}  // namespace smk
