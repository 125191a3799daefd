#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "smk/calibration.hpp"
#include "smk/common.hpp"
#include "smk/fieldsim.hpp"
#include "smk/magnetization.hpp"

namespace smk {

/// Receive coils p_l (constant unit vectors) and the analog transfer function a_k.
struct ReceiveChain {
  std::vector<Vec3> coil_sensitivities;
  /// Empty means a_k = 1 for every k.
  std::vector<cdouble> transfer_function;

  std::size_t n_channels() const { return coil_sensitivities.size(); }
  cdouble transfer(std::size_t k) const { return transfer_function.empty() ? cdouble(1.0, 0.0) : transfer_function[k]; }
};

/// Ideal axis-aligned coils, one per active drive axis.
ReceiveChain default_receive(const ScannerSpec& scanner);
void validate(const ReceiveChain& receive, std::size_t n_freq);

struct ProvenanceStep {
  enum class Kind { Simulated, Corrupted, Restored };
  Kind kind = Kind::Simulated;
  std::uint64_t seed = 0;
  /// Task or method parameters.
  nlohmann::json descriptor = nlohmann::json::object();
};

std::string to_string(ProvenanceStep::Kind kind);
ProvenanceStep::Kind provenance_kind_from_string(const std::string& s);

/// Per-component scaling applied by the corruption pipeline. Stored data equals
/// renorm·(𝒜(gt_scale·e^{i·phase}·S) + N); `to_reference_units` undoes it.
struct ComponentScale {
  double gt_scale = 1.0;
  double renorm = 1.0;
  double phase = 0.0;

  cdouble forward() const { return std::polar(gt_scale * renorm, phase); }
};

/// Complex tensor with dims (L, K, N_z, N_y, N_x), row-major. Each (l, k) pair is
/// one spatial "component" image.
struct SystemMatrix {
  std::size_t n_channels = 0;
  std::size_t n_freq = 0;
  Shape3 grid{0, 0, 0};
  std::vector<cfloat> data;

  ScannerSpec scanner;
  ParticleSpec particle;
  CalibrationSpec calibration;
  ReceiveChain receive;
  std::vector<ProvenanceStep> provenance;
  /// Empty unless the matrix went through `corrupt::apply`; otherwise L·K entries.
  std::vector<ComponentScale> scales;

  std::size_t n_components() const { return n_channels * n_freq; }
  std::size_t n_positions() const { return grid.size(); }
  std::size_t component_offset(std::size_t l, std::size_t k) const { return (l * n_freq + k) * grid.size(); }

  void allocate(std::size_t channels, std::size_t freqs, Shape3 shape);
  ComplexImage component(std::size_t l, std::size_t k) const;
  void set_component(std::size_t l, std::size_t k, const ComplexImage& img);
  /// Max |S| over one component.
  double component_max_abs(std::size_t l, std::size_t k) const;

  /// Throws DataError if dims disagree with the attached specs or data is non-finite.
  void check_consistency() const;
};

/// Maps component (l, k) of a corrupted/restored matrix back to ground-truth units.
ComplexImage to_reference_units(const SystemMatrix& sm, std::size_t l, std::size_t k);

}  // namespace smk
