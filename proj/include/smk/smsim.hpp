#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "smk/calibration.hpp"
#include "smk/fieldsim.hpp"
#include "smk/magnetization.hpp"
#include "smk/system_matrix.hpp"

namespace smk {

struct SimulationOptions {
  int quad_order = 48;
  int threads = 1;
  /// Use the closed-form Langevin moment when the particle has no anisotropy.
  bool langevin_fast_path = true;
};

/// Forward model for single calibration positions.
///
/// The drive-field samples, anisotropy law and receive chain are fixed at construction;
/// `column` may be called concurrently from several threads with separate workspaces.
class ColumnSimulator {
 public:
  class Workspace;

  ColumnSimulator(const ScannerSpec& scanner, const ParticleSpec& particle, const CalibrationSpec& calibration,
                  const ReceiveChain& receive, const SimulationOptions& options = {});
  ~ColumnSimulator();

  const TrajectoryTiming& timing() const { return timing_; }
  std::size_t n_channels() const { return receive_.n_channels(); }
  const DerivedParticleParams& particle_params() const { return params_; }

  std::unique_ptr<Workspace> make_workspace() const;

  /// m̄(H(r, t_j)) at t_j = j/f_s, j ∈ [0, n_samples).
  std::vector<Vec3> magnetization_trace(const Vec3& r) const;

  /// System-function column s_{l,k}(r) as an (L, K) row-major array.
  std::vector<cdouble> column(const Vec3& r, Workspace& ws) const;
  std::vector<cdouble> column(const Vec3& r) const;

  /// Column from an externally provided trace (used to check alternative derivative paths).
  std::vector<cdouble> column_from_trace(const std::vector<Vec3>& trace, Workspace& ws) const;

 private:
  ScannerSpec scanner_;
  ReceiveChain receive_;
  DerivedParticleParams params_;
  TrajectoryTiming timing_;
  AnisotropyField anisotropy_;
  std::shared_ptr<const SphericalQuadrature> quad_;
  bool use_langevin_;
  std::vector<Vec3> drive_samples_;
};

std::vector<cdouble> simulate_column(const ScannerSpec& scanner, const ParticleSpec& particle, const CalibrationSpec& calibration,
                                     const ReceiveChain& receive, const Vec3& r, const SimulationOptions& options = {});

SystemMatrix simulate_system_matrix(const ScannerSpec& scanner, const ParticleSpec& particle, const CalibrationSpec& calibration,
                                    const ReceiveChain& receive, const SimulationOptions& options = {},
                                    std::uint64_t seed = 0);

struct MeasurementNoise {
  double sigma = 0.0;  // per real/imaginary part, absolute units
  std::uint64_t seed = 0;
};

/// u = S·vec(c) (+ complex white noise), as an (L, K) array.
std::vector<cdouble> simulate_measurement(const SystemMatrix& sm, const RealImage& concentration,
                                          const std::optional<MeasurementNoise>& noise = std::nullopt);

}  // namespace smk
