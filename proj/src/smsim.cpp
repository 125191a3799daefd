#include "smk/smsim.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "smk/parallel.hpp"
#include "smk/rng.hpp"

namespace smk {

class ColumnSimulator::Workspace {
 public:
  explicit Workspace(std::size_t n) : fft(n) {}
  detail::RealFft fft;
};

ColumnSimulator::ColumnSimulator(const ScannerSpec& scanner, const ParticleSpec& particle, const CalibrationSpec& calibration,
                                 const ReceiveChain& receive, const SimulationOptions& options)
    : scanner_(scanner),
      receive_(receive),
      params_(derive_params(particle)),
      timing_(trajectory_timing(scanner)),
      anisotropy_(anisotropy_field(particle, scanner, calibration)),
      quad_(SphericalQuadrature::get(options.quad_order)),
      use_langevin_(options.langevin_fast_path && particle.anisotropy_constant == 0.0) {
  validate(scanner);
  validate(calibration);
  validate(receive_, timing_.n_freq);
  drive_samples_.resize(timing_.n_samples);
  for (std::size_t j = 0; j < timing_.n_samples; ++j) {
    drive_samples_[j] = drive_field(scanner_, static_cast<double>(j) / scanner_.sampling_rate);
  }
}

ColumnSimulator::~ColumnSimulator() = default;

std::unique_ptr<ColumnSimulator::Workspace> ColumnSimulator::make_workspace() const {
  return std::make_unique<Workspace>(timing_.n_samples);
}

std::vector<Vec3> ColumnSimulator::magnetization_trace(const Vec3& r) const {
  const Vec3 hsf = selection_field(scanner_, r);
  std::vector<Vec3> trace(timing_.n_samples);
  if (use_langevin_) {
    for (std::size_t j = 0; j < trace.size(); ++j) trace[j] = langevin_moment(params_, hsf + drive_samples_[j]);
    return trace;
  }
  const LocalAnisotropy local = anisotropy_(r);
  GibbsAverager avg(quad_, local.alpha, local.easy_axis);
  for (std::size_t j = 0; j < trace.size(); ++j) {
    trace[j] = params_.m0 * avg.mean_direction(params_.beta * (hsf + drive_samples_[j]));
  }
  return trace;
}

std::vector<cdouble> ColumnSimulator::column_from_trace(const std::vector<Vec3>& trace, Workspace& ws) const {
  const std::size_t n = timing_.n_samples;
  const std::size_t nk = timing_.n_freq;
  const std::size_t nl = receive_.n_channels();
  if (trace.size() != n) throw DataError("magnetization trace has wrong length");
  std::vector<cdouble> out(nl * nk);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double two_pi_over_t = 2.0 * std::numbers::pi / timing_.period;
  for (std::size_t l = 0; l < nl; ++l) {
    const Vec3& p = receive_.coil_sensitivities[l];
    double* in = ws.fft.input();
    for (std::size_t j = 0; j < n; ++j) in[j] = p.dot(trace[j]);
    auto spec = ws.fft.execute();
    for (std::size_t k = 0; k < nk; ++k) {
      const cdouble coeff = spec[k] * inv_n;
      const cdouble derivative = cdouble(0.0, two_pi_over_t * static_cast<double>(k)) * coeff;
      out[l * nk + k] = -receive_.transfer(k) * constants::mu0 * derivative;
    }
  }
  return out;
}

std::vector<cdouble> ColumnSimulator::column(const Vec3& r, Workspace& ws) const {
  const std::vector<Vec3> trace = magnetization_trace(r);
  for (const auto& m : trace) {
    if (!m.allFinite()) {
      std::ostringstream os;
      os << "non-finite magnetization at r = (" << r[0] << ", " << r[1] << ", " << r[2] << ")";
      throw DataError(os.str());
    }
  }
  return column_from_trace(trace, ws);
}

std::vector<cdouble> ColumnSimulator::column(const Vec3& r) const {
  auto ws = make_workspace();
  return column(r, *ws);
}

std::vector<cdouble> simulate_column(const ScannerSpec& scanner, const ParticleSpec& particle, const CalibrationSpec& calibration,
                                     const ReceiveChain& receive, const Vec3& r, const SimulationOptions& options) {
  ColumnSimulator sim(scanner, particle, calibration, receive, options);
  return sim.column(r);
}

SystemMatrix simulate_system_matrix(const ScannerSpec& scanner, const ParticleSpec& particle, const CalibrationSpec& calibration,
                                    const ReceiveChain& receive, const SimulationOptions& options, std::uint64_t seed) {
  ColumnSimulator sim(scanner, particle, calibration, receive, options);
  SystemMatrix sm;
  sm.scanner = scanner;
  sm.particle = particle;
  sm.calibration = calibration;
  sm.receive = receive;
  sm.allocate(receive.n_channels(), sim.timing().n_freq, calibration.shape());
  ProvenanceStep step;
  step.kind = ProvenanceStep::Kind::Simulated;
  step.seed = seed;
  step.descriptor = {{"quad_order", options.quad_order}};
  sm.provenance.push_back(step);

  const std::size_t n_pos = calibration.n_positions();
  const std::size_t nk = sm.n_freq;
  const std::size_t nl = sm.n_channels;
  const int threads = std::max(1, options.threads);
  const std::size_t n_workers = std::min<std::size_t>(std::size_t(threads), std::max<std::size_t>(n_pos, 1));

  std::vector<std::unique_ptr<ColumnSimulator::Workspace>> workspaces(n_workers);
  std::mutex failure_mutex;
  std::vector<std::string> failures;
  // Worker w takes columns w, w + n_workers, ...; each writes only its own slice.
  parallel_for(n_workers, threads, [&](std::size_t w) {
    workspaces[w] = sim.make_workspace();
    for (std::size_t n = w; n < n_pos; n += n_workers) {
      try {
        const std::vector<cdouble> col = sim.column(calibration.position(n), *workspaces[w]);
        for (std::size_t l = 0; l < nl; ++l) {
          for (std::size_t k = 0; k < nk; ++k) {
            const cdouble v = col[l * nk + k];
            sm.data[sm.component_offset(l, k) + n] = cfloat(static_cast<float>(v.real()), static_cast<float>(v.imag()));
          }
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        failures.push_back("column " + std::to_string(n) + ": " + e.what());
      }
    }
  });
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    throw DataError("simulation failed for " + std::to_string(failures.size()) + " column(s); first: " + failures.front());
  }
  return sm;
}

std::vector<cdouble> simulate_measurement(const SystemMatrix& sm, const RealImage& concentration,
                                          const std::optional<MeasurementNoise>& noise) {
  if (!(concentration.shape() == sm.grid))
    throw DataError("concentration shape " + to_string(concentration.shape()) + " does not match grid " + to_string(sm.grid));
  const std::size_t np = sm.grid.size();
  std::vector<cdouble> u(sm.n_components());
  for (std::size_t row = 0; row < sm.n_components(); ++row) {
    const cfloat* s = sm.data.data() + row * np;
    cdouble acc(0.0, 0.0);
    for (std::size_t n = 0; n < np; ++n) acc += cdouble(s[n]) * concentration[n];
    u[row] = acc;
  }
  if (noise && noise->sigma > 0.0) {
    CounterRng rng(noise->seed);
    for (auto& v : u) v += noise->sigma * rng.complex_normal();
  }
  return u;
}

}  // namespace smk
