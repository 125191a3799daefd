#include "smk/restore.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "fft.hpp"
#include "smk/parallel.hpp"
#include "smk/recon.hpp"
#include "smk/storage.hpp"

namespace smk {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

int shape_axis(int calib_axis) { return 2 - calib_axis; }

// Dense (Nt × Ns) weights of a natural cubic spline on uniform knots s0 + i·h,
// evaluated at the targets (clamped to the knot range).
Eigen::MatrixXd spline_weights(double s0, double h, std::size_t ns, const std::vector<double>& targets) {
  const auto n = static_cast<Eigen::Index>(ns);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(Eigen::Index(targets.size()), n);
  // M = second derivatives per unit sample vector; natural ends M_0 = M_{n-1} = 0.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  if (ns > 2) {
    const Eigen::Index ni = n - 2;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ni, n);
    for (Eigen::Index i = 0; i < ni; ++i) {
      rhs(i, i) += 6.0 / (h * h);
      rhs(i, i + 1) -= 12.0 / (h * h);
      rhs(i, i + 2) += 6.0 / (h * h);
    }
    // Thomas algorithm on the constant (1, 4, 1) system, all columns at once.
    std::vector<double> c(std::size_t(ni), 0.0);
    double denom = 4.0;
    c[0] = 1.0 / denom;
    rhs.row(0) /= denom;
    for (Eigen::Index i = 1; i < ni; ++i) {
      denom = 4.0 - c[std::size_t(i - 1)];
      c[std::size_t(i)] = 1.0 / denom;
      rhs.row(i) = (rhs.row(i) - rhs.row(i - 1)) / denom;
    }
    for (Eigen::Index i = ni - 2; i >= 0; --i) rhs.row(i) -= c[std::size_t(i)] * rhs.row(i + 1);
    m.middleRows(1, ni) = rhs;
  }
  const double last = s0 + h * double(ns - 1);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const double t = std::clamp(targets[j], s0, last);
    auto k = static_cast<Eigen::Index>(std::floor((t - s0) / h));
    k = std::clamp<Eigen::Index>(k, 0, n - 2);
    const double b = (t - (s0 + h * double(k))) / h;
    const double a = 1.0 - b;
    const auto row = Eigen::Index(j);
    w(row, k) += a;
    w(row, k + 1) += b;
    w.row(row) += ((a * a * a - a) * m.row(k) + (b * b * b - b) * m.row(k + 1)) * (h * h / 6.0);
  }
  return w;
}

// Applies `w` (Nt × Ns) along one (z, y, x) axis.
ComplexImage apply_along(const ComplexImage& in, int axis, const Eigen::MatrixXd& w) {
  Shape3 out_shape = in.shape();
  out_shape[axis] = std::size_t(w.rows());
  ComplexImage out(out_shape, cdouble(0.0, 0.0));
  const Shape3& s = in.shape();
  for (std::size_t z = 0; z < out_shape.nz; ++z)
    for (std::size_t y = 0; y < out_shape.ny; ++y)
      for (std::size_t x = 0; x < out_shape.nx; ++x) {
        std::size_t pos[3] = {z, y, x};
        const std::size_t j = pos[axis];
        cdouble acc(0.0, 0.0);
        for (std::size_t i = 0; i < s[axis]; ++i) {
          pos[axis] = i;
          acc += w(Eigen::Index(j), Eigen::Index(i)) * in.at(pos[0], pos[1], pos[2]);
        }
        out.at(z, y, x) = acc;
      }
  return out;
}

const ProvenanceStep* last_corruption(const SystemMatrix& sm) {
  for (auto it = sm.provenance.rbegin(); it != sm.provenance.rend(); ++it) {
    if (it->kind == ProvenanceStep::Kind::Corrupted) return &*it;
  }
  return nullptr;
}

CalibrationSpec cubic_target(const SystemMatrix& sm, const RestoreMethod& method) {
  std::optional<CalibrationSpec> original;
  if (const ProvenanceStep* c = last_corruption(sm); c != nullptr && c->descriptor.contains("original_calibration")) {
    original = calibration_from_json(c->descriptor["original_calibration"]);
  }
  if (!method.target) {
    if (!original) throw ConfigError("cubic restore needs a target grid (--target X,Y,Z); the input records no original grid");
    return *original;
  }
  if (original && original->grid_size == *method.target) return *original;
  CalibrationSpec t = sm.calibration;
  t.grid_size = *method.target;
  for (int a = 0; a < 3; ++a) {
    if (t.grid_size[a] < 1) throw ConfigError("target grid sizes must be positive");
    if (sm.calibration.grid_size[a] == 1 && t.grid_size[a] != 1)
      throw DataError(std::string("target grid is larger than 1 on inactive axis ") + "xyz"[a]);
  }
  return t;
}

}  // namespace

ComplexImage dctf_denoise(const ComplexImage& image, double omega, double sigma) {
  if (!(omega > 0.0)) throw ConfigError("omega must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  const Shape3& s = image.shape();
  const std::size_t n = image.size();
  if (n == 0) return image;
  detail::Dct dct({s.nz, s.ny, s.nx});
  std::vector<double> re(n);
  std::vector<double> im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = image[i].real();
    im[i] = image[i].imag();
  }
  dct.forward(re);
  dct.forward(im);
  const double thr = omega * sigma;
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::hypot(re[i], im[i]);
    const double f = mag > thr ? (mag - thr) / mag : 0.0;
    re[i] *= f;
    im[i] *= f;
  }
  dct.inverse(re);
  dct.inverse(im);
  ComplexImage out(s);
  for (std::size_t i = 0; i < n; ++i) out[i] = cdouble(re[i], im[i]);
  return out;
}

ComplexImage cubic_interp(const ComplexImage& image, const CalibrationSpec& source, const CalibrationSpec& target) {
  if (!(image.shape() == source.shape()))
    throw DataError("cubic_interp: image " + to_string(image.shape()) + " does not match source grid " + to_string(source.shape()));
  ComplexImage cur = image;
  for (int a = 0; a < 3; ++a) {
    const std::size_t ns = source.grid_size[a];
    const std::size_t nt = target.grid_size[a];
    if (ns == 1 && nt == 1) continue;
    if (ns < 2) throw DataError(std::string("cubic_interp: degenerate source axis ") + "xyz"[a] + " cannot be interpolated");
    std::vector<double> t(nt);
    for (std::size_t j = 0; j < nt; ++j) t[j] = target.coordinate(a, double(j));
    const double h = source.spacing(a);
    if (!(h > 0.0)) throw DataError(std::string("cubic_interp: zero source spacing on axis ") + "xyz"[a]);
    cur = apply_along(cur, shape_axis(a), spline_weights(source.coordinate(a, 0.0), h, ns, t));
  }
  return cur;
}

struct BiharmonicSolver::Impl {
  Shape3 shape;
  std::vector<std::size_t> missing;
  std::vector<std::size_t> known;
  SpMat coupling;  // L_mᵀ L_k
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  SpMat normal;
};

BiharmonicSolver::BiharmonicSolver(const Mask& mask, double tolerance, int max_iterations) : impl_(std::make_unique<Impl>()) {
  if (!(tolerance > 0.0)) throw ConfigError("biharmonic tolerance must be positive");
  Impl& p = *impl_;
  p.shape = mask.shape();
  const std::size_t n = mask.size();
  std::vector<Eigen::Index> slot(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0) {
      slot[i] = Eigen::Index(p.missing.size());
      p.missing.push_back(i);
    } else {
      slot[i] = Eigen::Index(p.known.size());
      p.known.push_back(i);
    }
  }
  if (p.known.empty()) throw DataError("biharmonic inpainting needs at least one known pixel");
  if (p.missing.empty()) return;

  // Discrete Laplacian with point-reflected ghosts (u₋₁ = 2u₀ − u₁): the boundary
  // second difference vanishes, so every affine field has zero energy.
  std::vector<Triplet> tm;
  std::vector<Triplet> tk;
  const Shape3& s = p.shape;
  const std::size_t stride[3] = {s.ny * s.nx, s.nx, 1};
  Eigen::Index row = 0;
  for (std::size_t z = 0; z < s.nz; ++z)
    for (std::size_t y = 0; y < s.ny; ++y)
      for (std::size_t x = 0; x < s.nx; ++x, ++row) {
        const std::size_t idx = s.index(z, y, x);
        const std::size_t pos[3] = {z, y, x};
        for (int a = 0; a < 3; ++a) {
          if (pos[a] == 0 || pos[a] + 1 >= s[a]) continue;
          const std::size_t nb[3] = {idx - stride[a], idx, idx + stride[a]};
          const double wt[3] = {1.0, -2.0, 1.0};
          for (int q = 0; q < 3; ++q) {
            auto& dst = mask[nb[q]] != 0 ? tm : tk;
            dst.emplace_back(row, slot[nb[q]], wt[q]);
          }
        }
      }
  SpMat lm(Eigen::Index(n), Eigen::Index(p.missing.size()));
  SpMat lk(Eigen::Index(n), Eigen::Index(p.known.size()));
  lm.setFromTriplets(tm.begin(), tm.end());
  lk.setFromTriplets(tk.begin(), tk.end());
  p.normal = SpMat(lm.transpose() * lm);
  p.coupling = SpMat(lm.transpose() * lk);
  for (Eigen::Index i = 0; i < p.normal.rows(); ++i) {
    if (p.normal.coeff(i, i) == 0.0)
      throw DataError("biharmonic inpainting is singular: a missing pixel has no interior neighbourhood on any axis");
  }
  p.cg.setTolerance(tolerance);
  p.cg.setMaxIterations(max_iterations > 0 ? max_iterations : std::max<int>(1000, 20 * int(p.missing.size())));
  p.cg.compute(p.normal);
}

BiharmonicSolver::~BiharmonicSolver() = default;
BiharmonicSolver::BiharmonicSolver(BiharmonicSolver&&) noexcept = default;
BiharmonicSolver& BiharmonicSolver::operator=(BiharmonicSolver&&) noexcept = default;

std::size_t BiharmonicSolver::unknowns() const { return impl_->missing.size(); }

ComplexImage BiharmonicSolver::solve(const ComplexImage& image) const {
  const Impl& p = *impl_;
  if (!(image.shape() == p.shape))
    throw DataError("mask shape " + to_string(p.shape) + " does not match component " + to_string(image.shape()));
  ComplexImage out = image;
  if (p.missing.empty()) return out;
  Eigen::MatrixXd uk(Eigen::Index(p.known.size()), 2);
  for (std::size_t i = 0; i < p.known.size(); ++i) {
    uk(Eigen::Index(i), 0) = image[p.known[i]].real();
    uk(Eigen::Index(i), 1) = image[p.known[i]].imag();
  }
  const Eigen::MatrixXd rhs = -(p.coupling * uk);
  Eigen::MatrixXd um(Eigen::Index(p.missing.size()), 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    if (rhs.col(c).squaredNorm() == 0.0) {
      um.col(c).setZero();
      continue;
    }
    um.col(c) = p.cg.solve(rhs.col(c));
    if (p.cg.info() != Eigen::Success)
      throw DataError("biharmonic CG did not converge (residual " + std::to_string(p.cg.error()) + " after " +
                      std::to_string(p.cg.iterations()) + " iterations)");
  }
  for (std::size_t i = 0; i < p.missing.size(); ++i)
    out[p.missing[i]] = cdouble(um(Eigen::Index(i), 0), um(Eigen::Index(i), 1));
  return out;
}

ComplexImage biharmonic_inpaint(const ComplexImage& image, const Mask& mask, double tolerance) {
  return BiharmonicSolver(mask, tolerance).solve(image);
}

std::string to_string(RestoreKind k) {
  switch (k) {
    case RestoreKind::DctF: return "dctf";
    case RestoreKind::Cubic: return "cubic";
    case RestoreKind::Biharmonic: return "biharmonic";
  }
  return "unknown";
}

RestoreKind restore_kind_from_string(const std::string& s) {
  if (s == "dctf") return RestoreKind::DctF;
  if (s == "cubic") return RestoreKind::Cubic;
  if (s == "biharmonic") return RestoreKind::Biharmonic;
  throw ConfigError("method must be dctf, cubic or biharmonic; got '" + s + "'");
}

void validate(const RestoreMethod& m) {
  if (!(m.omega > 0.0) || !std::isfinite(m.omega)) throw ConfigError("omega must be positive");
  if (m.sigma.empty()) throw ConfigError("sigma must have at least one value");
  for (double s : m.sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma must be finite and non-negative");
  }
  if (!(m.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
}

std::vector<double> sigma_from_background(const std::string& path, std::size_t n_rows, double coefficient) {
  if (!(coefficient > 0.0)) throw ConfigError("sigma coefficient must be positive");
  std::vector<std::uint64_t> dims;
  const std::vector<cfloat> frames = read_complex64(path, dims);
  if (dims.size() != 3 || dims[1] * dims[2] != n_rows)
    throw DataError("background file '" + path + "' must have dims (F, L, K) with L·K = " + std::to_string(n_rows));
  std::vector<double> sigma = noise_std_from_frames(frames, dims[0], n_rows);
  for (auto& s : sigma) s *= coefficient;
  return sigma;
}

SystemMatrix restore(const SystemMatrix& sm, const RestoreMethod& method, int threads) {
  validate(method);
  sm.check_consistency();
  const std::size_t rows = sm.n_components();
  if (method.sigma.size() != 1 && method.sigma.size() != rows)
    throw ConfigError("sigma must have 1 or L·K = " + std::to_string(rows) + " values");

  SystemMatrix out = sm;
  nlohmann::json d{{"method", to_string(method.kind)}};
  std::optional<BiharmonicSolver> solver;
  CalibrationSpec target = sm.calibration;
  switch (method.kind) {
    case RestoreKind::DctF:
      d["omega"] = method.omega;
      d["sigma"] = method.sigma.size() == 1 ? nlohmann::json(method.sigma[0]) : nlohmann::json("per-component");
      break;
    case RestoreKind::Cubic:
      target = cubic_target(sm, method);
      out.calibration = target;
      out.allocate(sm.n_channels, sm.n_freq, target.shape());
      d["target"] = target.grid_size;
      break;
    case RestoreKind::Biharmonic:
      if (!(method.mask.shape() == sm.grid))
        throw DataError("mask shape " + to_string(method.mask.shape()) + " does not match grid " + to_string(sm.grid));
      solver.emplace(method.mask, method.tolerance);
      d["tolerance"] = method.tolerance;
      d["missing_pixels"] = solver->unknowns();
      break;
  }

  parallel_for(rows, threads, [&](std::size_t row) {
    const std::size_t l = row / sm.n_freq;
    const std::size_t k = row % sm.n_freq;
    const ComplexImage c = sm.component(l, k);
    switch (method.kind) {
      case RestoreKind::DctF: {
        double sigma = method.sigma.size() == 1 ? method.sigma[0] : method.sigma[row];
        // Stored data carry renorm·σ noise; reference-unit σ also needs the GT scale.
        if (!sm.scales.empty()) {
          const ComponentScale& s = sm.scales[row];
          sigma *= s.renorm * (method.sigma_in_reference_units ? s.gt_scale : 1.0);
        }
        out.set_component(l, k, dctf_denoise(c, method.omega, sigma));
        break;
      }
      case RestoreKind::Cubic: out.set_component(l, k, cubic_interp(c, sm.calibration, target)); break;
      case RestoreKind::Biharmonic: out.set_component(l, k, solver->solve(c)); break;
    }
  });

  ProvenanceStep step;
  step.kind = ProvenanceStep::Kind::Restored;
  step.descriptor = d;
  out.provenance.push_back(step);
  return out;
}

}  // namespace smk
