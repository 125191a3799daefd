#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smk/common.hpp"
#include "smk/system_matrix.hpp"

namespace smk {

/// Returned for identical images instead of +∞.
inline constexpr double kPsnrCap = 300.0;

/// PSNR over the (Re, Im) channel pair with data range max|gt|.
double psnr(const ComplexImage& gt, const ComplexImage& test);

/// Mean SSIM over the (Re, Im) channel pair: Gaussian window (σ = 1.5, 11 taps) along
/// every axis of extent > 1, reflected at the borders, K1 = 0.01, K2 = 0.03, data range
/// max|gt|. Every pixel contributes to the mean.
double ssim(const ComplexImage& gt, const ComplexImage& test);

struct Aggregate {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 · sample std / √n
  std::size_t count = 0;
};

/// Requires at least two values.
Aggregate aggregate(std::span<const double> values);

struct ComponentMetrics {
  std::string source;  // SM name within the dataset
  std::size_t channel = 0;
  std::size_t freq = 0;
  std::string group;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

struct MetricReport {
  std::vector<std::string> metrics;
  std::string group_by;
  std::vector<ComponentMetrics> components;
  /// Skipped because the ground-truth component is identically zero (e.g. DC).
  std::size_t skipped_zero = 0;

  /// Per-group aggregates; groups with a single value report the mean only.
  nlohmann::json to_json() const;
};

enum class GroupBy { None, Sigma, Scale, Size };
GroupBy group_by_from_string(const std::string& s);

/// Group key for one test matrix: noise σ or downsampling factor from its provenance, or
/// its grid size bin.
std::string group_key(const SystemMatrix& test, GroupBy by);

/// Compares every nonzero ground-truth component with the test matrix mapped back to
/// reference units. Throws DataError on incompatible dims.
std::vector<ComponentMetrics> evaluate_pair(const SystemMatrix& gt, const SystemMatrix& test, bool want_psnr, bool want_ssim,
                                            int threads, std::size_t* skipped_zero = nullptr);

}  // namespace smk
