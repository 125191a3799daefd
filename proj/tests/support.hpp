#pragma once

// Shared fixtures for unit and acceptance tests.

#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "smk/calibration.hpp"
#include "smk/fieldsim.hpp"
#include "smk/magnetization.hpp"
#include "smk/system_matrix.hpp"

namespace smk::testing {

/// Preclinical-style 2D scanner: G = (−1, −1, 2) T/m/μ₀, A = 12 mT/μ₀ on x and y.
inline ScannerSpec scanner_2d(double amplitude_mt = 12.0) {
  ScannerSpec s;
  s.gradients = Vec3(gradient_from_tesla_per_meter(-1.0), gradient_from_tesla_per_meter(-1.0), gradient_from_tesla_per_meter(2.0));
  s.df_amplitudes = Vec3(field_from_millitesla(amplitude_mt), field_from_millitesla(amplitude_mt), 0.0);
  return s;
}

inline ScannerSpec scanner_3d(double amplitude_mt = 12.0) {
  ScannerSpec s = scanner_2d(amplitude_mt);
  s.df_amplitudes[2] = field_from_millitesla(amplitude_mt);
  return s;
}

/// Drive field on x only.
inline ScannerSpec scanner_1d(double amplitude_mt = 12.0, double gx_tpm = -1.0) {
  ScannerSpec s;
  s.gradients = Vec3(gradient_from_tesla_per_meter(gx_tpm), gradient_from_tesla_per_meter(gx_tpm),
                     gradient_from_tesla_per_meter(-2.0 * gx_tpm));
  s.df_amplitudes = Vec3(field_from_millitesla(amplitude_mt), 0.0, 0.0);
  return s;
}

inline ParticleSpec langevin_particle(double diameter = 20e-9) {
  ParticleSpec p;
  p.core_diameter = diameter;
  p.anisotropy_constant = 0.0;
  p.mobility = ImmobilizedParticle{Vec3::UnitZ()};
  return p;
}

inline ParticleSpec anisotropic_particle(double k_anis = 3200.0) {
  ParticleSpec p;
  p.core_diameter = 20e-9;
  p.anisotropy_constant = k_anis;
  p.mobility = ImmobilizedParticle{Vec3(std::cos(-0.75 * M_PI), std::sin(-0.75 * M_PI), 0.0)};
  return p;
}

inline CalibrationSpec calibration_2d(std::size_t nx, std::size_t ny, double fov_x, double fov_y) {
  CalibrationSpec c;
  c.fov = Vec3(fov_x, fov_y, 0.0);
  c.grid_size = {nx, ny, 1};
  return c;
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(std::filesystem::temp_directory_path() / ("smk_" + tag + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace smk::testing
