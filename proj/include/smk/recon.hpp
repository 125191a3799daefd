#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "smk/system_matrix.hpp"

namespace smk {

enum class Weighting { RowNormL2, None };

struct ReconstructionConfig {
  double snr_threshold = 1.5;
  double lambda = 0.3;
  int n_iter = 1000;
  bool nonneg = true;
  Weighting weighting = Weighting::RowNormL2;
  double relaxation = 1.0;
  bool drop_dc = true;
  /// Shuffle the row order each sweep (seeded) instead of sweeping sequentially.
  bool randomized_order = false;
  std::uint64_t order_seed = 0;
};

void validate(const ReconstructionConfig& cfg);

/// Kept rows as flat indices l·K + k, ascending.
struct FrequencySelection {
  std::vector<std::size_t> rows;
  std::vector<double> snr;  // all L·K estimates
};

/// SNR_{l,k} = RMS over the grid of |S_{l,k,n}| divided by σ_{l,k}. `sigma` holds one
/// value for all rows or one per row. Zero rows give 0; otherwise σ = 0 gives +∞.
std::vector<double> estimate_row_snr(const SystemMatrix& sm, std::span<const double> sigma);

/// Per-row noise σ (per real/imaginary part) from background frames, dims (F, L, K).
std::vector<double> noise_std_from_frames(std::span<const cfloat> frames, std::size_t n_frames, std::size_t n_rows);

/// Keeps rows with SNR ≥ θ (DC rows dropped when requested). Throws ConfigError when
/// nothing survives.
FrequencySelection select_frequencies(std::span<const double> snr, std::size_t n_freq, double theta, bool drop_dc);

using RowMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KaczmarzResult {
  /// Complex iterate; with nonneg it is real and ≥ 0 after the last projection.
  Eigen::VectorXcd c;
  std::size_t skipped_rows = 0;
};

/// Regularized Kaczmarz for min ‖Sc − u‖² + λ‖c‖² with an auxiliary residual variable
/// per row. `on_sweep(sweep, c)` is called after each full sweep (after projection).
KaczmarzResult kaczmarz_solve(const RowMatrix& rows, const Eigen::VectorXcd& u, const ReconstructionConfig& cfg,
                              const std::function<void(int, const Eigen::VectorXcd&)>& on_sweep = {});

struct ReconstructionInfo {
  std::size_t kept_rows = 0;
  std::size_t skipped_rows = 0;
};

/// Full pipeline: SNR estimate, selection, row weighting, Kaczmarz, reshape. The SM is
/// used in reference units (corruption scales undone); `u` has L·K entries.
RealImage reconstruct(const SystemMatrix& sm, std::span<const cdouble> u, const ReconstructionConfig& cfg,
                      std::span<const double> sigma, ReconstructionInfo* info = nullptr);

}  // namespace smk
