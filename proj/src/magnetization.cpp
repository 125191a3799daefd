#include "smk/magnetization.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "gibbs_kernel.hpp"

namespace smk {

void validate(const ParticleSpec& spec) {
  if (!(spec.core_diameter > 0.0) || !std::isfinite(spec.core_diameter)) throw ConfigError("particle: core_diameter must be positive");
  if (!(spec.saturation_magnetization > 0.0)) throw ConfigError("particle: saturation_magnetization must be positive");
  if (!(spec.temperature > 0.0)) throw ConfigError("particle: temperature must be positive");
  if (!(spec.anisotropy_constant >= 0.0) || !std::isfinite(spec.anisotropy_constant))
    throw ConfigError("particle: anisotropy_constant must be finite and non-negative");
  if (const auto* imm = std::get_if<ImmobilizedParticle>(&spec.mobility)) {
    if (std::abs(imm->easy_axis.norm() - 1.0) > 1e-12) throw ConfigError("particle: easy axis must have unit norm");
  } else {
    const auto& fluid = std::get<FluidParticle>(spec.mobility);
    if (!(fluid.q > 0.0) || !std::isfinite(fluid.q)) throw ConfigError("particle: fluid modulation q must be positive");
  }
}

DerivedParticleParams derive_params(const ParticleSpec& spec) {
  validate(spec);
  const double d3 = spec.core_diameter * spec.core_diameter * spec.core_diameter;
  const double volume = std::numbers::pi * d3 / 6.0;
  const double kt = constants::k_boltzmann * spec.temperature;
  DerivedParticleParams p;
  p.m0 = volume * spec.saturation_magnetization;
  p.beta = constants::mu0 * p.m0 / kt;
  p.alpha_max = spec.anisotropy_constant * volume / kt;
  return p;
}

double langevin(double x) {
  const double ax = std::abs(x);
  if (ax < 0.05) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 / 4725.0)));
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[n - 1 - i] = x;
    nodes[i] = -x;
    weights[i] = weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

SphericalQuadrature::SphericalQuadrature(int order) : order_(order) {
  if (order < 8) throw ConfigError("quad_order must be at least 8");
  std::vector<double> u;
  std::vector<double> wu;
  gauss_legendre(order, u, wu);
  const int n_phi = 2 * order;
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  directions_.reserve(std::size_t(order) * n_phi);
  weights_.reserve(std::size_t(order) * n_phi);
  antipode_.reserve(std::size_t(order) * n_phi);
  for (int i = 0; i < order; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - u[i] * u[i]));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = j * dphi;
      directions_.emplace_back(s * std::cos(phi), s * std::sin(phi), u[i]);
      weights_.push_back(wu[i] * dphi);
      // Antipode: u → −u (ring order-1-i), φ → φ + π.
      antipode_.push_back(std::size_t(order - 1 - i) * n_phi + std::size_t((j + order) % n_phi));
    }
  }
  // cos/sin of φ+π are not bitwise negatives of cos/sin of φ; symmetrize so the
  // node set is exactly closed under negation.
  for (std::size_t q = 0; q < directions_.size(); ++q) {
    if (q < antipode_[q]) directions_[antipode_[q]] = -directions_[q];
  }
}

std::shared_ptr<const SphericalQuadrature> SphericalQuadrature::get(int order) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const SphericalQuadrature>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  auto q = std::make_shared<const SphericalQuadrature>(order);
  cache.emplace(order, q);
  return q;
}

GibbsAverager::GibbsAverager(std::shared_ptr<const SphericalQuadrature> quad, double alpha, const Vec3& easy_axis)
    : quad_(std::move(quad)), alpha_(alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("anisotropy alpha must be finite and non-negative");
  const auto& dirs = quad_->directions();
  const auto& w = quad_->weights();
  pair_weights_.reserve(dirs.size() / 2);
  for (std::size_t q = 0; q < dirs.size(); ++q) {
    if (q > quad_->antipode(q)) continue;
    const double c = easy_axis.dot(dirs[q]);
    // Shifted by −α so the largest possible anisotropy factor is 1.
    dir_x_.push_back(dirs[q][0]);
    dir_y_.push_back(dirs[q][1]);
    dir_z_.push_back(dirs[q][2]);
    pair_weights_.push_back(w[q] * std::exp(alpha * (c * c - 1.0)));
  }
}

template <bool WantMoment>
void GibbsAverager::accumulate(const Vec3& xi, double& z_scaled, Vec3& moment, double& shift) const {
  // Every exponent is bounded by |ξ|; subtracting it keeps all terms ≤ 1.
  shift = xi.norm();
  const detail::GibbsSums s = detail::gibbs_sums(dir_x_.data(), dir_y_.data(), dir_z_.data(), pair_weights_.data(),
                                                 pair_weights_.size(), xi[0], xi[1], xi[2], shift, WantMoment);
  z_scaled = s.z;
  moment = Vec3(s.mx, s.my, s.mz);
}

double GibbsAverager::log_partition(const Vec3& xi) const {
  double z = 0.0;
  double shift = 0.0;
  Vec3 unused;
  accumulate<false>(xi, z, unused, shift);
  if (!(z > 0.0) || !std::isfinite(z)) throw DataError("partition function quadrature produced a non-finite value");
  return std::log(z) + shift + alpha_;
}

Vec3 GibbsAverager::mean_direction(const Vec3& xi) const {
  double z = 0.0;
  double shift = 0.0;
  Vec3 m;
  accumulate<true>(xi, z, m, shift);
  if (!(z > 0.0) || !std::isfinite(z) || !m.allFinite()) throw DataError("mean moment quadrature produced a non-finite value");
  return m / z;
}

double log_partition_function(const Vec3& beta_h, double alpha, const Vec3& easy_axis, int quad_order) {
  GibbsAverager avg(SphericalQuadrature::get(quad_order), alpha, easy_axis);
  return avg.log_partition(beta_h);
}

double partition_function(const Vec3& beta_h, double alpha, const Vec3& easy_axis, int quad_order) {
  const double z = std::exp(log_partition_function(beta_h, alpha, easy_axis, quad_order));
  if (!std::isfinite(z)) throw DataError("partition function overflows double range; use log_partition_function");
  return z;
}

Vec3 mean_moment(const DerivedParticleParams& params, const Vec3& h, double alpha, const Vec3& easy_axis, int quad_order) {
  GibbsAverager avg(SphericalQuadrature::get(quad_order), alpha, easy_axis);
  return params.m0 * avg.mean_direction(params.beta * h);
}

Vec3 langevin_moment(const DerivedParticleParams& params, const Vec3& h) {
  const double hn = h.norm();
  if (hn == 0.0) return Vec3::Zero();
  return params.m0 * langevin(params.beta * hn) * (h / hn);
}

AnisotropyField anisotropy_field(const ParticleSpec& spec, const ScannerSpec& scanner, const CalibrationSpec& calibration) {
  const DerivedParticleParams params = derive_params(spec);
  const double alpha_max = params.alpha_max;
  if (const auto* imm = std::get_if<ImmobilizedParticle>(&spec.mobility)) {
    LocalAnisotropy value{alpha_max, imm->easy_axis};
    return AnisotropyField([value](const Vec3&) { return value; }, true);
  }
  const double q = std::get<FluidParticle>(spec.mobility).q;
  Vec3 corner;
  for (int i = 0; i < 3; ++i) corner[i] = std::abs(calibration.center[i]) + 0.5 * calibration.fov[i];
  const double h_ref = scanner.gradients.cwiseAbs().cwiseProduct(corner).norm();
  const Vec3 g = scanner.gradients;
  return AnisotropyField(
      [g, h_ref, q, alpha_max](const Vec3& r) {
        const Vec3 hsf = g.cwiseProduct(r);
        const double mag = hsf.norm();
        LocalAnisotropy out;
        if (mag == 0.0 || h_ref == 0.0) {
          out.alpha = 0.0;
          out.easy_axis = Vec3::UnitZ();
          return out;
        }
        out.alpha = alpha_max * std::pow(mag / h_ref, q);
        out.easy_axis = hsf / mag;
        return out;
      },
      false);
}

}  // namespace smk
