#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "smk/calibration.hpp"
#include "smk/common.hpp"
#include "smk/fieldsim.hpp"

namespace smk {

struct FluidParticle {
  double q = 1.0;  // spatial modulation exponent
};

struct ImmobilizedParticle {
  Vec3 easy_axis = Vec3::UnitZ();
};

using Mobility = std::variant<FluidParticle, ImmobilizedParticle>;

struct ParticleSpec {
  double core_diameter = 20e-9;             // m
  double saturation_magnetization = 474000;  // A/m
  double temperature = 293.0;                // K
  double anisotropy_constant = 0.0;          // J/m³
  Mobility mobility = ImmobilizedParticle{};
};

struct DerivedParticleParams {
  double m0 = 0.0;         // A·m²
  double beta = 0.0;       // m/A
  double alpha_max = 0.0;  // K_anis·V_core/(k_B·T_P)
};

void validate(const ParticleSpec& spec);

DerivedParticleParams derive_params(const ParticleSpec& spec);

/// Langevin function coth(x) − 1/x, accurate near zero.
double langevin(double x);

/// Product rule on S²: Gauss-Legendre in cosθ (order nodes) times the trapezoid rule
/// in φ (2·order nodes). The node set is closed under m → −m, which makes the
/// quadrature of odd integrands vanish exactly.
class SphericalQuadrature {
 public:
  explicit SphericalQuadrature(int order);

  int order() const { return order_; }
  std::size_t size() const { return directions_.size(); }
  const std::vector<Vec3>& directions() const { return directions_; }
  const std::vector<double>& weights() const { return weights_; }
  /// Index of the antipode of node i.
  std::size_t antipode(std::size_t i) const { return antipode_[i]; }

  /// Shared instance per order.
  static std::shared_ptr<const SphericalQuadrature> get(int order);

 private:
  int order_;
  std::vector<Vec3> directions_;
  std::vector<double> weights_;
  std::vector<std::size_t> antipode_;
};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gibbs averages over the sphere for fixed anisotropy (α_K, n). The anisotropy weight
/// is folded into the node weights once, so repeated evaluation along a trajectory only
/// pays for the Zeeman exponential.
class GibbsAverager {
 public:
  GibbsAverager(std::shared_ptr<const SphericalQuadrature> quad, double alpha, const Vec3& easy_axis);

  /// ln Z(βH) for the dimensionless field ξ = βH.
  double log_partition(const Vec3& xi) const;
  /// ⟨m⟩ under the Gibbs weight, i.e. ∇_ξ ln Z; norm ≤ 1.
  Vec3 mean_direction(const Vec3& xi) const;

 private:
  template <bool WantMoment>
  void accumulate(const Vec3& xi, double& z_scaled, Vec3& moment, double& shift) const;

  std::shared_ptr<const SphericalQuadrature> quad_;
  double alpha_;
  // One node per antipodal pair, structure-of-arrays.
  std::vector<double> dir_x_;
  std::vector<double> dir_y_;
  std::vector<double> dir_z_;
  std::vector<double> pair_weights_;
};

/// Z(βH; α_K, n) by spherical quadrature. Throws DataError if the value overflows.
double partition_function(const Vec3& beta_h, double alpha, const Vec3& easy_axis, int quad_order);
double log_partition_function(const Vec3& beta_h, double alpha, const Vec3& easy_axis, int quad_order);

/// Equilibrium mean magnetic moment m̄(H) = m₀·⟨m⟩ in A·m² for a field H in A/m.
Vec3 mean_moment(const DerivedParticleParams& params, const Vec3& h, double alpha, const Vec3& easy_axis, int quad_order);

/// Closed-form isotropic (α_K = 0) moment m₀·L(β|H|)·Ĥ.
Vec3 langevin_moment(const DerivedParticleParams& params, const Vec3& h);

struct LocalAnisotropy {
  double alpha = 0.0;
  Vec3 easy_axis = Vec3::UnitZ();
};

/// Spatial anisotropy law α_K(r), n(r).
///
/// Immobilized particles carry a constant (alpha_max, easy axis). Fluid particles align
/// with the selection field, n = H_SF/|H_SF|, with α_K = alpha_max·(|H_SF|/H_ref)^q where
/// H_ref is the selection-field magnitude at the calibration-FOV corner farthest from
/// the FFP. At the FFP the fallback axis is +z.
class AnisotropyField {
 public:
  using Evaluator = std::function<LocalAnisotropy(const Vec3&)>;

  explicit AnisotropyField(Evaluator evaluator, bool constant) : evaluator_(std::move(evaluator)), constant_(constant) {}

  LocalAnisotropy operator()(const Vec3& r) const { return evaluator_(r); }
  bool is_constant() const { return constant_; }

 private:
  Evaluator evaluator_;
  bool constant_;
};

AnisotropyField anisotropy_field(const ParticleSpec& spec, const ScannerSpec& scanner, const CalibrationSpec& calibration);

}  // namespace smk
