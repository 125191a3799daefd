#include "smk/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "smk/parallel.hpp"
#include "smk/storage.hpp"

namespace smk {

namespace {

constexpr std::uint64_t kBackgroundStream = 0xB6C0FFEEULL;

void rescale_to_std(std::vector<cdouble>& v, double sigma) {
  const double s = complex_part_std(v);
  const double f = s > 0.0 ? sigma / s : 0.0;
  for (auto& x : v) x *= f;
}

std::vector<cdouble> white(std::size_t n, CounterRng& rng) {
  std::vector<cdouble> v(n);
  for (auto& x : v) x = rng.complex_normal();
  return v;
}

std::vector<cdouble> drift(std::size_t n, CounterRng& rng) {
  std::vector<cdouble> v(n);
  cdouble acc(0.0, 0.0);
  for (auto& x : v) {
    acc += rng.complex_normal();
    x = acc;
  }
  cdouble mean(0.0, 0.0);
  for (const auto& x : v) mean += x;
  mean /= static_cast<double>(n);
  for (auto& x : v) x -= mean;
  rescale_to_std(v, 1.0);
  return v;
}

std::vector<cdouble> burst(std::size_t n, CounterRng& rng) {
  std::vector<cdouble> v(n, cdouble(0.0, 0.0));
  const double frac = rng.uniform(0.02, 0.1);
  const std::size_t len = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(frac * double(n))), 1, n);
  const std::size_t start = rng.uniform_int(n - len + 1);
  for (std::size_t i = start; i < start + len; ++i) v[i] = rng.complex_normal();
  rescale_to_std(v, 1.0);
  return v;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

void validate(const NoiseConfig& cfg) {
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) throw ConfigError("noise sigma must be finite and non-negative");
  double sum = 0.0;
  for (double w : cfg.mixture) {
    if (!(w >= 0.0)) throw ConfigError("noise mixture weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("noise mixture weights must sum to 1");
  if (cfg.source == NoiseConfig::Source::BackgroundFile && cfg.background_path.empty())
    throw ConfigError("background noise source needs a file path");
}

BackgroundFrames load_background(const std::string& path) {
  std::vector<std::uint64_t> dims;
  BackgroundFrames bg;
  bg.data = read_complex64(path, dims);
  if (dims.size() != 3) throw DataError("background file '" + path + "' must have dims (frames, channels, frequencies)");
  bg.n_frames = dims[0];
  bg.n_channels = dims[1];
  bg.n_freq = dims[2];
  return bg;
}

double complex_part_std(const std::vector<cdouble>& v) {
  if (v.empty()) return 0.0;
  cdouble mean(0.0, 0.0);
  for (const auto& x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const auto& x : v) ss += std::norm(x - mean);
  return std::sqrt(ss / (2.0 * static_cast<double>(v.size())));
}

ComplexImage sample_noise(const NoiseConfig& cfg, Shape3 shape, CounterRng& rng) {
  validate(cfg);
  if (cfg.source != NoiseConfig::Source::Synthetic) throw ConfigError("background noise needs the frame data");
  const std::size_t n = shape.size();
  ComplexImage out(shape, cdouble(0.0, 0.0));
  if (cfg.sigma == 0.0 || n == 0) return out;
  // Components are drawn in a fixed order from dedicated child streams so that
  // changing one weight does not reshuffle the others.
  // Children hang off a fresh draw so repeated calls on one stream give fresh noise.
  const CounterRng base = rng.split(rng.next_u64());
  CounterRng white_rng = base.split(1);
  CounterRng drift_rng = base.split(2);
  CounterRng burst_rng = base.split(3);
  const std::vector<cdouble> w = white(n, white_rng);
  const std::vector<cdouble> d = drift(n, drift_rng);
  const std::vector<cdouble> b = burst(n, burst_rng);
  std::vector<cdouble> mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = cfg.mixture[0] * w[i] + cfg.mixture[1] * d[i] + cfg.mixture[2] * b[i];
  rescale_to_std(mix, cfg.sigma);
  out.values() = std::move(mix);
  return out;
}

ComplexImage sample_noise(const NoiseConfig& cfg, Shape3 shape, const BackgroundFrames& frames, std::size_t l, std::size_t k,
                          std::size_t offset) {
  validate(cfg);
  const std::size_t n = shape.size();
  if (l >= frames.n_channels || k >= frames.n_freq)
    throw DataError("background file has " + std::to_string(frames.n_channels) + " channels and " + std::to_string(frames.n_freq) +
                    " frequencies; component (" + std::to_string(l) + "," + std::to_string(k) + ") is out of range");
  if (offset + n > frames.n_frames)
    throw DataError("background file has " + std::to_string(frames.n_frames) + " frames, need " + std::to_string(n) +
                    " starting at " + std::to_string(offset));
  ComplexImage out(shape, cdouble(0.0, 0.0));
  if (cfg.sigma == 0.0) return out;
  std::vector<cdouble> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = cdouble(frames.at(offset + i, l, k));
  rescale_to_std(v, cfg.sigma);
  out.values() = std::move(v);
  return out;
}

std::size_t mask_block_to_grid(const MaskBlock& block, Shape3 shape, std::size_t flat) {
  const std::size_t d0 = shape[block.permutation[0]];
  const std::size_t d1 = shape[block.permutation[1]];
  const std::size_t d2 = shape[block.permutation[2]];
  std::size_t a2 = flat % d2;
  const std::size_t a1 = (flat / d2) % d1;
  const std::size_t a0 = flat / (d2 * d1);
  (void)d0;
  if (block.reversed) a2 = d2 - 1 - a2;
  std::array<std::size_t, 3> coord{};
  coord[block.permutation[0]] = a0;
  coord[block.permutation[1]] = a1;
  coord[block.permutation[2]] = a2;
  return shape.index(coord[0], coord[1], coord[2]);
}

Mask generate_mask(Shape3 shape, double ratio, int n_blocks, CounterRng& rng, std::vector<MaskBlock>* blocks) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("mask ratio must lie in (0, 1)");
  if (n_blocks < 1) throw ConfigError("mask block count must be at least 1");
  const std::size_t total = shape.size();
  if (ratio * double(total) < double(n_blocks))
    throw ConfigError("mask ratio " + std::to_string(ratio) + " on " + std::to_string(total) + " pixels is too small for " +
                      std::to_string(n_blocks) + " blocks");
  const auto len = static_cast<std::size_t>(round_half_even(ratio * double(total) / n_blocks));
  Mask mask(shape, 0);
  if (blocks != nullptr) blocks->clear();
  for (int b = 0; b < n_blocks; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      MaskBlock block;
      // Uniform permutation of the three axes (Fisher-Yates).
      for (int i = 2; i > 0; --i) std::swap(block.permutation[i], block.permutation[rng.uniform_int(i + 1)]);
      block.reversed = rng.bernoulli(0.5);
      block.length = len;
      // Starts whose window avoids earlier blocks, so blocks stay disjoint.
      std::vector<std::size_t> prefix(total + 1, 0);
      for (std::size_t i = 0; i < total; ++i) prefix[i + 1] = prefix[i] + mask[mask_block_to_grid(block, shape, i)];
      std::vector<std::size_t> starts;
      for (std::size_t s = 0; s + len <= total; ++s) {
        if (prefix[s + len] == prefix[s]) starts.push_back(s);
      }
      if (starts.empty()) continue;
      block.start = starts[rng.uniform_int(starts.size())];
      for (std::size_t i = block.start; i < block.start + len; ++i) mask[mask_block_to_grid(block, shape, i)] = 1;
      if (blocks != nullptr) blocks->push_back(block);
      placed = true;
    }
    if (!placed) throw DataError("could not place " + std::to_string(n_blocks) + " disjoint mask blocks; lower the ratio or block count");
  }
  return mask;
}

std::string to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::Denoise: return "denoise";
    case CorruptionKind::Downsample: return "downsample";
    case CorruptionKind::Inpaint: return "inpaint";
  }
  return "unknown";
}

CorruptionKind corruption_kind_from_string(const std::string& s) {
  if (s == "denoise") return CorruptionKind::Denoise;
  if (s == "downsample") return CorruptionKind::Downsample;
  if (s == "inpaint") return CorruptionKind::Inpaint;
  throw ConfigError("task must be denoise, downsample or inpaint; got '" + s + "'");
}

void validate(const CorruptionTask& task, Shape3 grid) {
  validate(task.noise);
  if (task.kind == CorruptionKind::Downsample) {
    for (int a = 0; a < 3; ++a) {
      const std::size_t f = task.factors[a];
      const std::size_t n = grid[2 - a];
      if (f < 1) throw ConfigError("downsampling factors must be at least 1");
      if (n == 1 && f != 1) throw ConfigError("downsampling factor on an inactive axis must be 1");
      if (f > n)
        throw DataError("downsampling factor " + std::to_string(f) + " exceeds grid size " + std::to_string(n) + " on axis " +
                        "xyz"[a]);
    }
  }
  if (task.kind == CorruptionKind::Inpaint) {
    if (!(task.mask.shape() == grid))
      throw DataError("mask shape " + to_string(task.mask.shape()) + " does not match grid " + to_string(grid));
  }
}

Shape3 downsampled_shape(Shape3 grid, const std::array<std::size_t, 3>& factors) {
  return Shape3{ceil_div(grid.nz, factors[2]), ceil_div(grid.ny, factors[1]), ceil_div(grid.nx, factors[0])};
}

CalibrationSpec downsampled_calibration(const CalibrationSpec& calib, const std::array<std::size_t, 3>& factors) {
  CalibrationSpec out = calib;
  for (int a = 0; a < 3; ++a) {
    const std::size_t n = calib.grid_size[a];
    const std::size_t f = factors[a];
    const std::size_t m = ceil_div(n, f);
    const double step = calib.fov[a] / double(n);
    out.grid_size[a] = m;
    out.fov[a] = double(m) * double(f) * step;
    // First kept sample stays where it was.
    const double first = calib.coordinate(a, 0.0);
    out.center[a] = first - 0.5 * step * double(f) + 0.5 * out.fov[a];
  }
  return out;
}

ComplexImage apply_operator(const CorruptionTask& task, const ComplexImage& image) {
  switch (task.kind) {
    case CorruptionKind::Denoise: return image;
    case CorruptionKind::Downsample: {
      const Shape3 in = image.shape();
      const Shape3 out_shape = downsampled_shape(in, task.factors);
      ComplexImage out(out_shape);
      for (std::size_t z = 0; z < out_shape.nz; ++z)
        for (std::size_t y = 0; y < out_shape.ny; ++y)
          for (std::size_t x = 0; x < out_shape.nx; ++x)
            out.at(z, y, x) = image.at(z * task.factors[2], y * task.factors[1], x * task.factors[0]);
      return out;
    }
    case CorruptionKind::Inpaint: {
      if (!(task.mask.shape() == image.shape())) throw DataError("mask shape does not match component shape");
      ComplexImage out = image;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (task.mask[i] != 0) out[i] = cdouble(0.0, 0.0);
      }
      return out;
    }
  }
  return image;
}

SystemMatrix apply(const CorruptionTask& task, const SystemMatrix& sm, std::uint64_t seed, int threads) {
  sm.check_consistency();
  validate(task, sm.grid);
  const CounterRng root(seed);

  SystemMatrix out;
  out.scanner = sm.scanner;
  out.particle = sm.particle;
  out.receive = sm.receive;
  out.provenance = sm.provenance;
  out.calibration = task.kind == CorruptionKind::Downsample ? downsampled_calibration(sm.calibration, task.factors) : sm.calibration;
  const Shape3 out_shape = out.calibration.shape();
  out.allocate(sm.n_channels, sm.n_freq, out_shape);
  out.scales.resize(sm.n_components());

  std::optional<BackgroundFrames> frames;
  std::size_t bg_offset = 0;
  if (task.noise.source == NoiseConfig::Source::BackgroundFile && task.noise.sigma > 0.0) {
    frames = load_background(task.noise.background_path);
    if (frames->n_frames < out_shape.size())
      throw DataError("background file has " + std::to_string(frames->n_frames) + " frames, need at least " +
                      std::to_string(out_shape.size()));
    CounterRng off_rng = root.split(kBackgroundStream);
    bg_offset = off_rng.uniform_int(frames->n_frames - out_shape.size() + 1);
  }

  parallel_for(sm.n_components(), threads, [&](std::size_t row) {
    const std::size_t l = row / sm.n_freq;
    const std::size_t k = row % sm.n_freq;
    CounterRng rng = root.split(row);
    ComplexImage gt = to_reference_units(sm, l, k);
    double g = 0.0;
    for (const auto& v : gt.values()) g = std::max(g, std::abs(v));
    const double gt_scale = g > 0.0 ? 1.0 / g : 1.0;
    const double theta = task.random_phase ? rng.uniform(0.0, 2.0 * std::numbers::pi) : 0.0;
    const cdouble pre = std::polar(gt_scale, theta);
    for (auto& v : gt.values()) v *= pre;
    ComplexImage y = apply_operator(task, gt);
    if (task.noise.sigma > 0.0) {
      const ComplexImage n = frames ? sample_noise(task.noise, y.shape(), *frames, l, k, bg_offset) : sample_noise(task.noise, y.shape(), rng);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += n[i];
    }
    double r = 0.0;
    for (const auto& v : y.values()) r = std::max(r, std::abs(v));
    const double renorm = r > 0.0 ? 1.0 / r : 1.0;
    for (auto& v : y.values()) v *= renorm;
    out.set_component(l, k, y);
    out.scales[row] = ComponentScale{gt_scale, renorm, theta};
  });

  ProvenanceStep step;
  step.kind = ProvenanceStep::Kind::Corrupted;
  step.seed = seed;
  nlohmann::json d{{"task", to_string(task.kind)}, {"sigma", task.noise.sigma}, {"random_phase", task.random_phase}};
  if (task.noise.source == NoiseConfig::Source::Synthetic) {
    d["noise"] = {{"source", "synthetic"}, {"mixture", task.noise.mixture}};
  } else {
    d["noise"] = {{"source", "background"}, {"path", task.noise.background_path}, {"frame_offset", bg_offset}};
  }
  if (task.kind == CorruptionKind::Downsample) {
    d["factors"] = task.factors;
    d["phase"] = 0;
    d["original_calibration"] = to_json(sm.calibration);
  }
  if (task.kind == CorruptionKind::Inpaint) {
    std::size_t missing = 0;
    for (auto m : task.mask.values()) missing += m;
    d["missing_pixels"] = missing;
  }
  step.descriptor = d;
  out.provenance.push_back(step);
  return out;
}

}  // namespace smk
