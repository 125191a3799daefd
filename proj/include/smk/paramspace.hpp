#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smk/calibration.hpp"
#include "smk/fieldsim.hpp"
#include "smk/magnetization.hpp"
#include "smk/rng.hpp"

namespace smk {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling law for randomized simulation parameters.
struct SamplingConfig {
  std::uint64_t seed = 0;
  int dimensionality = 2;
  std::size_t n_train = 1000;
  std::size_t n_val = 300;
  std::size_t n_test = 300;

  Interval core_diameter_nm{15.0, 25.0};     // cubed diameter is uniform
  Interval log10_anisotropy{3.0, 4.0};       // J/m³
  double p_fluid = 0.5;
  Interval q{0.3, 1.3};
  double temperature = 293.0;
  double saturation_magnetization = 474000.0;

  Interval gradient_tpm{0.1, 1.5};           // T/m/μ0, x and y
  Interval amplitude_mt{5.0, 14.0};          // mT/μ0

  Interval fov_factor{1.0, 2.0};
  Interval resolution_factor{6.24, 8.32};
  std::size_t min_grid = 2;
  std::size_t max_grid = 64;

  int quad_order = 48;
};

/// Defaults for 2D (1000/300/300) or 3D (50/15/15).
SamplingConfig default_sampling_config(int dimensionality);
void validate(const SamplingConfig& cfg);
nlohmann::json to_json(const SamplingConfig& cfg);
/// Missing keys keep their defaults for the given dimensionality; unknown keys are rejected.
SamplingConfig sampling_config_from_json(const nlohmann::json& j);

ParticleSpec sample_particle(CounterRng& rng, const SamplingConfig& cfg = {});
ScannerSpec sample_scanner(CounterRng& rng, int dimensionality, const SamplingConfig& cfg = {});
CalibrationSpec sample_calibration(CounterRng& rng, const ScannerSpec& scanner, const ParticleSpec& particle,
                                   const SamplingConfig& cfg = {});

/// 4.16/(β|G|), in metres.
double fwhm_resolution(double beta, double gradient);
/// round_half_even(fov/R·factor) clamped to [min_grid, max_grid].
std::size_t calibration_size(double fov, double resolution, double factor, std::size_t min_grid, std::size_t max_grid);

enum class Split { Train, Val, Test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string id;
  Split split = Split::Train;
  std::uint64_t seed = 0;
  ParticleSpec particle;
  ScannerSpec scanner;
  CalibrationSpec calibration;
};

struct DatasetManifest {
  SamplingConfig config;
  std::vector<ManifestEntry> entries;
};

std::string entry_id(Split split, std::size_t index);
/// Entry stream key: split(split(seed, split code), index).
std::uint64_t entry_seed(std::uint64_t seed, Split split, std::size_t index);
ManifestEntry make_entry(const SamplingConfig& cfg, Split split, std::size_t index);
/// Regenerates an entry from the global seed and its id alone.
ManifestEntry regenerate_entry(const SamplingConfig& cfg, const std::string& id);
DatasetManifest build_manifest(const SamplingConfig& cfg);

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// One-sample Kolmogorov-Smirnov statistic sup|F_n − F|.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic p-value with the small-sample correction λ = (√n + 0.12 + 0.11/√n)·D.
double ks_pvalue(double d, std::size_t n);

}  // namespace smk
