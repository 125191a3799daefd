#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smk/system_matrix.hpp"

namespace smk {

inline constexpr double kDefaultOmega = 2.75;
/// Multiplier on a background-frame noise estimate before thresholding.
inline constexpr double kDefaultSigmaCoefficient = 0.3;

/// Orthonormal DCT-II soft thresholding: every complex coefficient c becomes
/// c·max(|c| − ωσ, 0)/|c|.
ComplexImage dctf_denoise(const ComplexImage& image, double omega, double sigma);

/// Separable natural cubic spline from the source cell centres to the target cell
/// centres; targets outside the outermost source samples take the edge value.
ComplexImage cubic_interp(const ComplexImage& image, const CalibrationSpec& source, const CalibrationSpec& target);

/// Biharmonic completion of the pixels with mask = 1. Reusable across components that
/// share one mask; `solve` is thread-safe.
class BiharmonicSolver {
 public:
  explicit BiharmonicSolver(const Mask& mask, double tolerance = 1e-10, int max_iterations = 0);
  ~BiharmonicSolver();
  BiharmonicSolver(BiharmonicSolver&&) noexcept;
  BiharmonicSolver& operator=(BiharmonicSolver&&) noexcept;

  ComplexImage solve(const ComplexImage& image) const;
  std::size_t unknowns() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ComplexImage biharmonic_inpaint(const ComplexImage& image, const Mask& mask, double tolerance = 1e-10);

enum class RestoreKind { DctF, Cubic, Biharmonic };

std::string to_string(RestoreKind k);
RestoreKind restore_kind_from_string(const std::string& s);

struct RestoreMethod {
  RestoreKind kind = RestoreKind::DctF;
  double omega = kDefaultOmega;
  /// σ in the units the corruption used (max-normalized ground truth); one value or L·K.
  std::vector<double> sigma{0.0};
  /// σ is in ground-truth units (e.g. a background-frame estimate) rather than
  /// max-normalized ones.
  bool sigma_in_reference_units = false;
  /// Target grid (x, y, z) for cubic; empty means the grid recorded by the corruption step.
  std::optional<std::array<std::size_t, 3>> target;
  Mask mask;
  double tolerance = 1e-10;
};

void validate(const RestoreMethod& m);

/// σ per component from background frames (F, L, K): per-row std times `coefficient`.
std::vector<double> sigma_from_background(const std::string& path, std::size_t n_rows, double coefficient = kDefaultSigmaCoefficient);

/// Applies the method to every (l, k) component. Scales carry over, so the result maps
/// back to reference units the same way the input does.
SystemMatrix restore(const SystemMatrix& sm, const RestoreMethod& method, int threads = 1);

}  // namespace smk
