#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "smk/rng.hpp"
#include "smk/system_matrix.hpp"

namespace smk {

struct NoiseConfig {
  enum class Source { Synthetic, BackgroundFile };
  Source source = Source::Synthetic;
  std::string background_path;
  /// Std of the real and of the imaginary part, in units of the max-normalized GT.
  double sigma = 0.0;
  /// (white, drift, burst); synthetic source only.
  std::array<double, 3> mixture{0.8, 0.15, 0.05};
};

void validate(const NoiseConfig& cfg);

/// Background noise frames, dims (F, L, K).
struct BackgroundFrames {
  std::size_t n_frames = 0;
  std::size_t n_channels = 0;
  std::size_t n_freq = 0;
  std::vector<cfloat> data;

  cfloat at(std::size_t f, std::size_t l, std::size_t k) const { return data[(f * n_channels + l) * n_freq + k]; }
};

BackgroundFrames load_background(const std::string& path);

/// Noise tensor for one component with per-part std σ. For background frames, F frames
/// starting at `offset` are read for channel l and frequency k and reshaped to grid order.
ComplexImage sample_noise(const NoiseConfig& cfg, Shape3 shape, CounterRng& rng);
ComplexImage sample_noise(const NoiseConfig& cfg, Shape3 shape, const BackgroundFrames& frames, std::size_t l, std::size_t k,
                          std::size_t offset);

/// Per-part standard deviation pooled over real and imaginary parts, around the mean.
double complex_part_std(const std::vector<cdouble>& v);

struct MaskBlock {
  std::array<int, 3> permutation{0, 1, 2};  // permuted axis order over (z, y, x)
  bool reversed = false;                    // last permuted axis traversed backwards
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Maps a flat index in the block's generating order back to a (z, y, x) flat index.
std::size_t mask_block_to_grid(const MaskBlock& block, Shape3 shape, std::size_t flat);

/// Union of n_blocks disjoint contiguous runs of round(ratio·N/n_blocks) indices, each in
/// its own randomly permuted (and possibly reversed) flattening. 1 = missing.
Mask generate_mask(Shape3 shape, double ratio, int n_blocks, CounterRng& rng, std::vector<MaskBlock>* blocks = nullptr);

enum class CorruptionKind { Denoise, Downsample, Inpaint };

std::string to_string(CorruptionKind k);
CorruptionKind corruption_kind_from_string(const std::string& s);

struct CorruptionTask {
  CorruptionKind kind = CorruptionKind::Denoise;
  std::array<std::size_t, 3> factors{1, 1, 1};  // (x, y, z) downsampling
  Mask mask;                                      // inpainting, 1 = missing
  NoiseConfig noise;
  /// Rotate each component by a random global phase before 𝒜.
  bool random_phase = false;
};

void validate(const CorruptionTask& task, Shape3 grid);

/// Grid of a downsampled matrix: ceil(N/f) samples per axis.
Shape3 downsampled_shape(Shape3 grid, const std::array<std::size_t, 3>& factors);
/// Calibration whose cell-centered grid coincides with the kept samples (phase 0).
CalibrationSpec downsampled_calibration(const CalibrationSpec& calib, const std::array<std::size_t, 3>& factors);

/// The linear operator 𝒜 on one component.
ComplexImage apply_operator(const CorruptionTask& task, const ComplexImage& image);

/// S_corrupt = renorm·(𝒜(gt_scale·e^{iθ}·S) + N) per component, recording the scales.
SystemMatrix apply(const CorruptionTask& task, const SystemMatrix& sm, std::uint64_t seed, int threads = 1);

}  // namespace smk
