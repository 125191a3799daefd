// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and runtime limits are
// fixed below. Optional arguments select criteria by number.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "smk/corrupt.hpp"
#include "smk/evalkit.hpp"
#include "smk/magnetization.hpp"
#include "smk/parallel.hpp"
#include "smk/paramspace.hpp"
#include "smk/recon.hpp"
#include "smk/restore.hpp"
#include "smk/rng.hpp"
#include "smk/smsim.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace smk;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "; failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<void(Outcome&)> run;
};

int threads() { return resolve_threads(0); }

template <typename F>
ComplexImage sample(const CalibrationSpec& c, F f) {
  ComplexImage img(c.shape());
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = f(c.position(i));
  return img;
}

double max_diff(const ComplexImage& a, const ComplexImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double uniform_cdf(double x, double lo, double hi) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); }

// 1 ---------------------------------------------------------------------------------------

void magnetization(Outcome& out) {
  const DerivedParticleParams params = derive_params(testing::langevin_particle(20e-9));
  CounterRng rng(0xACC1);
  double worst_fd = 0.0;
  double worst_langevin = 0.0;
  double worst_norm = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 xi = rng.unit_vector() * rng.uniform(0.0, 30.0);
    const Vec3 n = rng.unit_vector();
    const double alpha = rng.uniform(0.0, 25.0);
    const Vec3 h = xi / params.beta;

    // Moment in units of m0 against a central difference of ln Z in ξ.
    const Vec3 m = mean_moment(params, h, alpha, n, 48) / params.m0;
    const double step = 1e-4 * std::max(1.0, xi.norm());
    Vec3 fd;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = step;
      fd[a] = (log_partition_function(xi + e, alpha, n, 48) - log_partition_function(xi - e, alpha, n, 48)) / (2.0 * step);
    }
    worst_fd = std::max(worst_fd, (m - fd).norm() / std::max(fd.norm(), 1e-300));
    worst_norm = std::max(worst_norm, m.norm());

    const Vec3 iso = mean_moment(params, h, 0.0, n, 48);
    const Vec3 ref = langevin_moment(params, h);
    if (ref.norm() > 0.0) worst_langevin = std::max(worst_langevin, (iso - ref).norm() / ref.norm());
    else worst_langevin = std::max(worst_langevin, iso.norm() / params.m0);
  }
  out.detail << "fd rel " << worst_fd << ", langevin rel " << worst_langevin << ", max |m|/m0 " << worst_norm;
  out.require(worst_fd < 1e-4, "finite-difference gradient");
  out.require(worst_langevin < 1e-8, "Langevin reduction");
  out.require(worst_norm <= 1.0 + 1e-12, "|m| <= m0");
}

// 2 ---------------------------------------------------------------------------------------

void fwhm(Outcome& out) {
  const ScannerSpec scanner = testing::scanner_1d(12.0, -1.0);
  const DerivedParticleParams params = derive_params(testing::langevin_particle(20e-9));
  // FFP held at the origin; a point source at x sees the selection field only. The
  // kernel is d m̄_x / dx along the line.
  const double dx = 5e-6;
  const std::size_t n = 12001;
  const double x0 = -0.5 * dx * double(n - 1);
  std::vector<double> mx(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 r(x0 + dx * double(i), 0.0, 0.0);
    mx[i] = mean_moment(params, selection_field(scanner, r), 0.0, Vec3::UnitZ(), 48).x();
  }
  std::vector<double> kernel(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) kernel[i - 1] = std::abs(mx[i + 1] - mx[i - 1]) / (2.0 * dx);
  const auto peak_it = std::max_element(kernel.begin(), kernel.end());
  const std::size_t peak = std::size_t(peak_it - kernel.begin());
  const double half = 0.5 * *peak_it;
  auto crossing = [&](int dir) {
    std::size_t i = peak;
    while (i > 0 && i + 1 < kernel.size() && kernel[i] >= half) i = std::size_t(long(i) + dir);
    const std::size_t j = std::size_t(long(i) - dir);
    const double t = (kernel[j] - half) / (kernel[j] - kernel[i]);
    return (double(j) + t * double(long(i) - long(j))) * dx;
  };
  const double measured = crossing(1) - crossing(-1);
  const double predicted = fwhm_resolution(params.beta, gradient_from_tesla_per_meter(1.0));
  out.detail << "measured " << measured * 1e3 << " mm, 4.16/(beta|G|) " << predicted * 1e3 << " mm";
  out.require(std::abs(measured - predicted) <= 0.05 * predicted, "kernel FWHM vs 4.16/(beta|G|)");
  out.require(std::abs(predicted - 8.48e-3) <= 0.05 * 8.48e-3, "resolution near 8.48 mm");
}

// 3 ---------------------------------------------------------------------------------------

void spectral_derivative(Outcome& out) {
  const ScannerSpec s = testing::scanner_2d();
  const ParticleSpec p = testing::anisotropic_particle();
  const CalibrationSpec c = testing::calibration_2d(9, 9, 0.028, 0.028);
  SimulationOptions opt;
  opt.quad_order = 32;
  const ColumnSimulator sim(s, p, c, default_receive(s), opt);
  const TrajectoryTiming tm = sim.timing();
  const DerivedParticleParams d = derive_params(p);
  const AnisotropyField anis = anisotropy_field(p, s, c);
  const double dt = 1.0 / s.sampling_rate;
  const double h = dt / 64.0;
  const std::size_t kmax = tm.n_samples / 4;

  std::vector<cdouble> twiddle(tm.n_samples);
  for (std::size_t j = 0; j < tm.n_samples; ++j)
    twiddle[j] = std::polar(1.0, -2.0 * std::numbers::pi * double(j) / double(tm.n_samples));

  std::vector<double> num(c.n_positions(), 0.0);
  std::vector<double> den(c.n_positions(), 0.0);
  parallel_for(c.n_positions(), threads(), [&](std::size_t pos) {
    const Vec3 r = c.position(pos);
    const std::vector<cdouble> spectral = sim.column(r);
    const LocalAnisotropy a = anis(r);
    auto moment = [&](double t) { return mean_moment(d, total_field(s, r, t), a.alpha, a.easy_axis, 32); };
    // Five-point central difference of m̄ in time, then a direct DFT.
    std::vector<Vec3> deriv(tm.n_samples);
    for (std::size_t j = 0; j < tm.n_samples; ++j) {
      const double t = double(j) * dt;
      deriv[j] = (moment(t - 2 * h) - 8.0 * moment(t - h) + 8.0 * moment(t + h) - moment(t + 2 * h)) / (12.0 * h);
    }
    for (std::size_t l = 0; l < sim.n_channels(); ++l) {
      for (std::size_t k = 0; k < kmax; ++k) {
        cdouble acc(0.0, 0.0);
        for (std::size_t j = 0; j < tm.n_samples; ++j) acc += deriv[j][long(l)] * twiddle[(k * j) % tm.n_samples];
        const cdouble fd = -constants::mu0 * acc / double(tm.n_samples);
        num[pos] += std::norm(fd - spectral[l * tm.n_freq + k]);
        den[pos] += std::norm(spectral[l * tm.n_freq + k]);
      }
    }
  });
  double worst = 0.0;
  double n_all = 0.0;
  double d_all = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    worst = std::max(worst, std::sqrt(num[i] / den[i]));
    n_all += num[i];
    d_all += den[i];
  }
  out.detail << "relative L2 " << std::sqrt(n_all / d_all) << " overall, " << worst << " worst column (k < " << kmax << ")";
  out.require(worst < 1e-6, "spectral vs finite difference");
}

// 4 ---------------------------------------------------------------------------------------

void kaczmarz(Outcome& out) {
  CounterRng rng(0xACC4);
  const double lambdas[] = {0.0, 0.01, 1.0};
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double lambda = lambdas[trial % 3];
    const int n = int(4 + rng.uniform_int(21));
    // At least 4/3 as many rows as unknowns, so the λ = 0 systems are well posed.
    const int m_min = (4 * n + 2) / 3;
    const int m = m_min + int(rng.uniform_int(std::uint64_t(32 - m_min + 1)));
    RowMatrix a(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = rng.complex_normal();
      a.row(i) /= a.row(i).norm();
    }
    Eigen::VectorXcd u(m);
    if (lambda == 0.0) {
      Eigen::VectorXcd x(n);
      for (int j = 0; j < n; ++j) x[j] = rng.complex_normal();
      u = a * x;
    } else {
      for (int i = 0; i < m; ++i) u[i] = rng.complex_normal();
    }
    const Eigen::MatrixXcd ah = a.adjoint();
    const Eigen::VectorXcd ref = (ah * a + lambda * Eigen::MatrixXcd::Identity(n, n)).ldlt().solve(ah * u);

    ReconstructionConfig cfg;
    cfg.lambda = lambda;
    cfg.n_iter = 2000;
    cfg.nonneg = false;
    cfg.snr_threshold = 0.0;
    const KaczmarzResult res = kaczmarz_solve(a, u, cfg);
    worst = std::max(worst, (res.c - ref).norm() / ref.norm());
  }
  out.detail << "worst relative error " << worst << " over 50 systems";
  out.require(worst < 1e-3, "Kaczmarz vs Tikhonov normal equations");
}

// 5 ---------------------------------------------------------------------------------------

void delta_recovery(Outcome& out) {
  const ScannerSpec s = testing::scanner_2d();
  SimulationOptions opt;
  opt.threads = threads();
  const SystemMatrix sm =
      simulate_system_matrix(s, testing::langevin_particle(), testing::calibration_2d(15, 15, 0.028, 0.028), default_receive(s), opt);
  ReconstructionConfig cfg;
  cfg.snr_threshold = 0.0;
  cfg.lambda = 1e-6;
  cfg.n_iter = 200;
  const std::vector<double> sigma{0.0};
  std::vector<std::size_t> interior;
  for (std::size_t y = 1; y + 1 < 15; ++y)
    for (std::size_t x = 1; x + 1 < 15; ++x) interior.push_back(sm.grid.index(0, y, x));
  std::vector<int> hit(interior.size(), 0);
  parallel_for(interior.size(), threads(), [&](std::size_t i) {
    RealImage delta(sm.grid, 0.0);
    delta[interior[i]] = 1.0;
    const RealImage c = reconstruct(sm, simulate_measurement(sm, delta), cfg, sigma);
    const auto it = std::max_element(c.values().begin(), c.values().end());
    hit[i] = std::size_t(it - c.values().begin()) == interior[i];
  });
  const auto good = std::count(hit.begin(), hit.end(), 1);
  out.detail << good << "/" << interior.size() << " interior deltas at the argmax (15x15, " << cfg.n_iter << " sweeps)";
  out.require(std::size_t(good) == interior.size(), "argmax at the delta");
}

// 6 ---------------------------------------------------------------------------------------

void dctf(Outcome& out) {
  SamplingConfig cfg = default_sampling_config(2);
  cfg.seed = 0xACC6;
  cfg.n_train = 0;
  cfg.n_val = 0;
  cfg.n_test = 30;
  cfg.max_grid = 24;
  cfg.quad_order = 24;
  const DatasetManifest manifest = build_manifest(cfg);
  const double sigmas[] = {0.06, 0.1, 0.2, 0.3};
  std::vector<double> psnr_in[4];
  std::vector<double> psnr_out[4];
  std::vector<double> ssim_out;
  std::size_t min_grid = 1000;
  std::size_t max_grid = 0;
  for (const ManifestEntry& e : manifest.entries) {
    SimulationOptions opt;
    opt.quad_order = cfg.quad_order;
    opt.threads = threads();
    const SystemMatrix gt = simulate_system_matrix(e.scanner, e.particle, e.calibration, default_receive(e.scanner), opt, e.seed);
    min_grid = std::min({min_grid, gt.grid.nx, gt.grid.ny});
    max_grid = std::max({max_grid, gt.grid.nx, gt.grid.ny});
    for (int si = 0; si < 4; ++si) {
      CorruptionTask task;
      task.kind = CorruptionKind::Denoise;
      task.noise.sigma = sigmas[si];
      const SystemMatrix noisy = apply(task, gt, e.seed ^ std::uint64_t(si + 1), threads());
      RestoreMethod method;
      method.kind = RestoreKind::DctF;
      method.sigma = {sigmas[si]};
      const SystemMatrix restored = restore(noisy, method, threads());
      const bool want_ssim = sigmas[si] == 0.1;
      for (const auto& m : evaluate_pair(gt, noisy, true, false, threads())) psnr_in[si].push_back(*m.psnr);
      for (const auto& m : evaluate_pair(gt, restored, true, want_ssim, threads())) {
        psnr_out[si].push_back(*m.psnr);
        if (want_ssim) ssim_out.push_back(*m.ssim);
      }
    }
  }
  auto mean = [](const std::vector<double>& v) { return aggregate(v).mean; };
  out.detail << "grids " << min_grid << ".." << max_grid << "; sigma 0.1: PSNR " << mean(psnr_out[1]) << " dB, SSIM "
             << mean(ssim_out) << "; corrupted -> restored:";
  for (int si = 0; si < 4; ++si) out.detail << " " << mean(psnr_in[si]) << "->" << mean(psnr_out[si]);
  out.require(mean(psnr_out[1]) >= 18.0 && mean(psnr_out[1]) <= 26.0, "PSNR at sigma 0.1 in [18, 26] dB");
  out.require(mean(ssim_out) >= 0.60 && mean(ssim_out) <= 0.90, "SSIM at sigma 0.1 in [0.60, 0.90]");
  for (int si = 0; si < 4; ++si)
    out.require(mean(psnr_out[si]) > mean(psnr_in[si]), "improvement at sigma " + std::to_string(sigmas[si]));
}

// 7 ---------------------------------------------------------------------------------------

void cubic(Outcome& out) {
  auto affine = [](const Vec3& p) { return cdouble(0.3 + 120.0 * p.x() - 75.0 * p.y() + 40.0 * p.z(), -1.0 + 33.0 * p.y()); };
  double worst = 0.0;
  for (std::size_t f : {2, 3, 4}) {
    CalibrationSpec fine;
    fine.fov = Vec3(0.012, 0.010, 0.009);
    fine.center = Vec3(1e-3, -2e-3, 0.5e-3);
    fine.grid_size = {4 * f + 1, 3 * f + 1, 2 * f + 1};
    const CalibrationSpec coarse = downsampled_calibration(fine, {f, f, f});
    worst = std::max(worst, max_diff(cubic_interp(sample(coarse, affine), coarse, fine), sample(fine, affine)));
    const CalibrationSpec fine2 = testing::calibration_2d(5 * f + 1, 4 * f + 1, 0.02, 0.016);
    const CalibrationSpec coarse2 = downsampled_calibration(fine2, {f, f, 1});
    worst = std::max(worst, max_diff(cubic_interp(sample(coarse2, affine), coarse2, fine2), sample(fine2, affine)));
  }

  const CalibrationSpec fine = testing::calibration_2d(32, 32, 0.032, 0.032);
  auto blob = [](const Vec3& p) {
    const double r2 = std::pow((p.x() - 0.002) / 0.006, 2) + std::pow((p.y() + 0.001) / 0.005, 2);
    return std::polar(std::exp(-r2), 80.0 * p.x());
  };
  const ComplexImage gt = sample(fine, blob);
  CorruptionTask t;
  t.kind = CorruptionKind::Downsample;
  t.factors = {2, 2, 1};
  const CalibrationSpec coarse = downsampled_calibration(fine, t.factors);
  const ComplexImage low = apply_operator(t, gt);
  const ComplexImage up = cubic_interp(low, coarse, fine);
  // Nearest kept sample (kept indices are the even ones).
  ComplexImage nn(fine.shape());
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      nn.at(0, y, x) = low.at(0, std::min<std::size_t>((y + 1) / 2, 15), std::min<std::size_t>((x + 1) / 2, 15));
  const double gain = psnr(gt, up) - psnr(gt, nn);
  out.detail << "affine max error " << worst << ", blob cubic " << psnr(gt, up) << " dB vs nearest " << psnr(gt, nn) << " dB";
  out.require(worst < 1e-10, "affine exactness");
  out.require(gain >= 3.0, "3 dB over nearest neighbour");
}

// 8 ---------------------------------------------------------------------------------------

void biharmonic(Outcome& out) {
  CalibrationSpec c3;
  c3.fov = Vec3(0.012, 0.010, 0.009);
  c3.grid_size = {12, 10, 9};
  const CalibrationSpec c2 = testing::calibration_2d(24, 20, 0.024, 0.020);
  auto affine = [](const Vec3& p) { return cdouble(1.0 + 200.0 * p.x() - 150.0 * p.y() + 90.0 * p.z(), 0.5 - 60.0 * p.x()); };
  CounterRng rng(0xACC8);
  double worst_const = 0.0;
  double worst_affine = 0.0;
  double worst_idem = 0.0;
  int cases = 0;
  for (const CalibrationSpec* c : {static_cast<const CalibrationSpec*>(&c3), &c2}) {
    const Shape3 s = c->shape();
    for (int n_blocks : {1, 2, 4}) {
      for (int rep = 0; rep < 3; ++rep) {
        const Mask m = generate_mask(s, 0.1, n_blocks, rng);
        auto holes = [&](ComplexImage img) {
          for (std::size_t i = 0; i < s.size(); ++i)
            if (m[i]) img[i] = 0.0;
          return img;
        };
        const BiharmonicSolver solver(m);
        const ComplexImage cst(s, cdouble(2.5, -1.0));
        worst_const = std::max(worst_const, max_diff(solver.solve(holes(cst)), cst));
        const ComplexImage truth = sample(*c, affine);
        worst_affine = std::max(worst_affine, max_diff(solver.solve(holes(truth)), truth));

        ComplexImage noise(s);
        for (auto& v : noise.values()) v = rng.complex_normal();
        const ComplexImage once = solver.solve(noise);
        double scale = 0.0;
        for (const auto& v : once.values()) scale = std::max(scale, std::abs(v));
        worst_idem = std::max(worst_idem, max_diff(solver.solve(once), once) / scale);
        ++cases;
      }
    }
  }
  out.detail << cases << " masks: constant " << worst_const << ", affine " << worst_affine << ", idempotence " << worst_idem
             << " (relative, solver tolerance 1e-10)";
  out.require(worst_const < 1e-6, "constant recovery");
  out.require(worst_affine < 1e-6, "affine recovery");
  out.require(worst_idem < 1e-6, "idempotence");
}

// 9 ---------------------------------------------------------------------------------------

void masks(Outcome& out) {
  const Shape3 shape{27, 21, 25};
  const std::size_t total = shape.size();
  const long target = std::lround(0.1 * double(total));
  CounterRng rng(0xACC9);
  long worst_dev = 0;
  int bad_contiguity = 0;
  int bad_count = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n_blocks = 1 + int(rng.uniform_int(8));
    std::vector<MaskBlock> blocks;
    CounterRng mask_rng = rng.split(std::uint64_t(i));
    const Mask m = generate_mask(shape, 0.1, n_blocks, mask_rng, &blocks);
    long pop = 0;
    for (auto v : m.values()) pop += v;
    worst_dev = std::max(worst_dev, std::abs(pop - target));
    if (std::abs(pop - target) > n_blocks) ++bad_count;

    // Rebuild the mask from the blocks: each block is one run in its own flattening,
    // runs never overlap, and together they are exactly the mask.
    std::vector<std::uint8_t> rebuilt(total, 0);
    bool ok = int(blocks.size()) == n_blocks;
    for (const MaskBlock& b : blocks) {
      ok = ok && b.length > 0 && b.start + b.length <= total;
      std::set<int> axes(b.permutation.begin(), b.permutation.end());
      ok = ok && axes == std::set<int>{0, 1, 2};
      for (std::size_t j = 0; ok && j < b.length; ++j) {
        const std::size_t g = mask_block_to_grid(b, shape, b.start + j);
        ok = g < total && rebuilt[g] == 0;
        if (ok) rebuilt[g] = 1;
      }
    }
    ok = ok && std::equal(rebuilt.begin(), rebuilt.end(), m.values().begin());
    if (!ok) ++bad_contiguity;
  }
  out.detail << "target " << target << ", worst deviation " << worst_dev << ", popcount violations " << bad_count
             << ", structure violations " << bad_contiguity;
  out.require(bad_count == 0, "popcount within n_blocks of round(0.1 N)");
  out.require(bad_contiguity == 0, "contiguous disjoint runs");
}

// 10 --------------------------------------------------------------------------------------

void metrics(Outcome& out) {
  const CalibrationSpec c = testing::calibration_2d(64, 64, 0.064, 0.064);
  ComplexImage gt = sample(c, [](const Vec3& p) {
    const double r2 = std::pow(p.x() / 0.01, 2) + std::pow((p.y() - 0.004) / 0.014, 2);
    return std::polar(std::exp(-r2), 50.0 * p.y());
  });
  double peak = 0.0;
  for (const auto& v : gt.values()) peak = std::max(peak, std::abs(v));
  for (auto& v : gt.values()) v /= peak;
  CounterRng rng(0xACCA);
  ComplexImage noisy = gt;
  for (auto& v : noisy.values()) v += 0.1 * rng.complex_normal();
  const double p = psnr(gt, noisy);
  const double s = ssim(gt, gt);
  const std::vector<double> two{0.0, 2.0};
  const Aggregate a = aggregate(two);
  out.detail << "psnr " << p << " dB, ssim(gt, gt) " << s << ", aggregate {0,2} = (" << a.mean << ", " << a.ci95 << ")";
  out.require(std::abs(p - 20.0) <= 0.5, "PSNR 20 +- 0.5 dB");
  out.require(std::abs(s - 1.0) < 1e-12, "ssim(gt, gt) = 1");
  out.require(std::abs(a.mean - 1.0) < 1e-12 && std::abs(a.ci95 - 1.96) < 1e-12, "aggregate({0, 2}) = (1, 1.96)");
}

// 11 --------------------------------------------------------------------------------------

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> la;
  std::vector<fs::path> lb;
  for (const auto& e : fs::recursive_directory_iterator(a)) la.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b)) lb.push_back(fs::relative(e.path(), b));
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  if (la != lb) return false;
  files = 0;
  for (const auto& rel : la) {
    if (fs::is_directory(a / rel) != fs::is_directory(b / rel)) return false;
    if (fs::is_directory(a / rel)) continue;
    std::ifstream fa(a / rel, std::ios::binary);
    std::ifstream fb(b / rel, std::ios::binary);
    const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    if (ca != cb) return false;
    ++files;
  }
  return true;
}

void determinism(Outcome& out) {
  const testing::TempDir tmp("acceptance_dataset");
  const std::string config = std::string(SMK_CLI_DATA) + "/sampling_tiny.json";
  auto run = [&](const std::string& dir, int n_threads) {
    const std::string cmd = std::string("\"") + SMK_CLI_PATH + "\" dataset --config \"" + config + "\" --out \"" +
                            (tmp.path() / dir).string() + "\" --split train --threads " + std::to_string(n_threads) +
                            " > /dev/null";
    return std::system(cmd.c_str());
  };
  const int r1 = run("one", 1);
  const int r4 = run("four", 4);
  out.require(r1 == 0 && r4 == 0, "dataset command exit status");
  if (!out.pass) return;
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(tmp / "one"))
    if (e.is_directory()) ++entries;
  std::size_t files = 0;
  const bool same = same_tree(tmp / "one", tmp / "four", files);
  out.detail << entries << " entries, " << files << " files, threads 1 vs 4 " << (same ? "identical" : "differ");
  out.require(entries == 10, "10 entries");
  out.require(same, "byte-identical trees");
}

// 12 --------------------------------------------------------------------------------------

void parameter_statistics(Outcome& out) {
  const std::size_t n = 10000;
  const double alpha = 0.01;
  std::vector<std::string> failures;
  std::size_t bound_violations = 0;
  double min_p = 1.0;
  std::size_t n_tests = 0;
  auto ks = [&](const std::string& name, const std::vector<double>& v, const std::function<double(double)>& cdf) {
    const double p = ks_pvalue(ks_statistic(v, cdf), v.size());
    min_p = std::min(min_p, p);
    ++n_tests;
    if (p < alpha) failures.push_back(name);
  };
  auto bound = [&](bool ok) {
    if (!ok) ++bound_violations;
  };

  for (int dims : {2, 3}) {
    SamplingConfig cfg = default_sampling_config(dims);
    cfg.seed = 0xACCC;
    std::vector<double> d3, logk, q, axis_z, axis_phi, gx, gy, amp[3], fov_f[3], center_f[3];
    std::size_t fluid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const ManifestEntry e = make_entry(cfg, Split::Test, i);
      const ParticleSpec& p = e.particle;
      const double dnm = p.core_diameter * 1e9;
      bound(dnm >= 15.0 && dnm <= 25.0);
      d3.push_back(dnm * dnm * dnm);
      bound(p.anisotropy_constant >= 1e3 && p.anisotropy_constant <= 1e4);
      logk.push_back(std::log10(p.anisotropy_constant));
      bound(p.temperature == 293.0 && p.saturation_magnetization == 474000.0);
      if (const auto* f = std::get_if<FluidParticle>(&p.mobility)) {
        ++fluid;
        bound(f->q >= 0.3 && f->q <= 1.3);
        q.push_back(f->q);
      } else {
        const Vec3 a = std::get<ImmobilizedParticle>(p.mobility).easy_axis;
        bound(std::abs(a.norm() - 1.0) < 1e-12);
        axis_z.push_back(a.z());
        axis_phi.push_back(std::atan2(a.y(), a.x()));
      }

      const ScannerSpec& s = e.scanner;
      bound(std::abs(s.gradients.sum()) <= 1e-9 * s.gradients.norm());
      const double g[2] = {gradient_to_tesla_per_meter(s.gradients.x()), gradient_to_tesla_per_meter(s.gradients.y())};
      bound(g[0] >= 0.1 && g[0] <= 1.5 && g[1] >= 0.1 && g[1] <= 1.5);
      gx.push_back(g[0]);
      gy.push_back(g[1]);
      for (int a = 0; a < 3; ++a) {
        const double mt = field_to_millitesla(s.df_amplitudes[a]);
        if (a < dims) {
          bound(mt >= 5.0 && mt <= 14.0);
          amp[a].push_back(mt);
        } else {
          bound(mt == 0.0);
        }
      }

      const CalibrationSpec& c = e.calibration;
      const Vec3 df = df_fov(s);
      const double beta = derive_params(p).beta;
      for (int a = 0; a < 3; ++a) {
        if (a >= dims) {
          bound(c.grid_size[a] == 1 && c.fov[a] == 0.0);
          continue;
        }
        const double ff = c.fov[a] / df[a];
        bound(ff >= 1.0 && ff <= 2.0);
        fov_f[a].push_back(ff);
        const double margin = 0.5 * (c.fov[a] - df[a]);
        bound(std::abs(c.center[a]) <= margin);
        if (margin > 0.0) center_f[a].push_back(c.center[a] / margin);
        const double cells = c.fov[a] / fwhm_resolution(beta, s.gradients[a]);
        const auto lo = calibration_size(c.fov[a], fwhm_resolution(beta, s.gradients[a]), 6.24, cfg.min_grid, cfg.max_grid);
        const auto hi = calibration_size(c.fov[a], fwhm_resolution(beta, s.gradients[a]), 8.32, cfg.min_grid, cfg.max_grid);
        bound(c.grid_size[a] >= lo && c.grid_size[a] <= hi && cells > 0.0);
      }
    }
    const std::string tag = std::to_string(dims) + "D ";
    ks(tag + "diameter^3", d3, [](double v) { return uniform_cdf(v, 15.0 * 15.0 * 15.0, 25.0 * 25.0 * 25.0); });
    ks(tag + "log10 K", logk, [](double v) { return uniform_cdf(v, 3.0, 4.0); });
    ks(tag + "q", q, [](double v) { return uniform_cdf(v, 0.3, 1.3); });
    ks(tag + "easy axis z", axis_z, [](double v) { return uniform_cdf(v, -1.0, 1.0); });
    ks(tag + "easy axis azimuth", axis_phi, [](double v) { return uniform_cdf(v, -std::numbers::pi, std::numbers::pi); });
    ks(tag + "G_x", gx, [](double v) { return uniform_cdf(v, 0.1, 1.5); });
    ks(tag + "G_y", gy, [](double v) { return uniform_cdf(v, 0.1, 1.5); });
    for (int a = 0; a < dims; ++a) {
      const std::string ax(1, "xyz"[a]);
      ks(tag + "A_" + ax, amp[a], [](double v) { return uniform_cdf(v, 5.0, 14.0); });
      ks(tag + "fov factor " + ax, fov_f[a], [](double v) { return uniform_cdf(v, 1.0, 2.0); });
      ks(tag + "center " + ax, center_f[a], [](double v) { return uniform_cdf(v, -1.0, 1.0); });
    }
    // Two-sided binomial test for the fluid fraction at the same level.
    const double z = (double(fluid) - 0.5 * double(n)) / std::sqrt(0.25 * double(n));
    ++n_tests;
    if (std::abs(z) > 2.5758) failures.push_back(tag + "fluid fraction");
  }
  out.detail << n_tests << " tests over 2 x " << n << " specs, smallest p " << min_p << ", bound violations " << bound_violations;
  for (const auto& f : failures) out.require(false, "KS " + f);
  out.require(bound_violations == 0, "hard bounds");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "magnetization correctness", 30.0, magnetization},
      {2, "FWHM consistency", 60.0, fwhm},
      {3, "spectral-derivative identity", 300.0, spectral_derivative},
      {4, "Kaczmarz vs direct Tikhonov", 30.0, kaczmarz},
      {5, "delta recovery", 600.0, delta_recovery},
      {6, "DCT-F behavior", 1200.0, dctf},
      {7, "interpolation oracles", 60.0, cubic},
      {8, "biharmonic oracles", 120.0, biharmonic},
      {9, "mask generator", 60.0, masks},
      {10, "metric calibration", 10.0, metrics},
      {11, "determinism", 600.0, determinism},
      {12, "parameter-space statistics", 60.0, parameter_statistics},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.require(secs < c.limit_s, "runtime over " + std::to_string(int(c.limit_s)) + " s");
    std::printf("%s [%2d] %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
