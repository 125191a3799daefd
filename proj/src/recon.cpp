#include "smk/recon.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "smk/rng.hpp"

namespace smk {

void validate(const ReconstructionConfig& cfg) {
  if (!(cfg.snr_threshold >= 0.0)) throw ConfigError("snr threshold must be non-negative");
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw ConfigError("lambda must be finite and non-negative");
  if (cfg.n_iter < 1) throw ConfigError("iteration count must be positive");
  if (!(cfg.relaxation > 0.0 && cfg.relaxation <= 2.0)) throw ConfigError("relaxation must lie in (0, 2]");
}

std::vector<double> estimate_row_snr(const SystemMatrix& sm, std::span<const double> sigma) {
  const std::size_t rows = sm.n_components();
  if (sigma.size() != 1 && sigma.size() != rows)
    throw DataError("noise σ must have 1 or " + std::to_string(rows) + " entries, got " + std::to_string(sigma.size()));
  std::vector<double> snr(rows);
  const std::size_t np = sm.grid.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const ComplexImage img = to_reference_units(sm, r / sm.n_freq, r % sm.n_freq);
    double ss = 0.0;
    for (std::size_t n = 0; n < np; ++n) ss += std::norm(img[n]);
    const double rms = std::sqrt(ss / static_cast<double>(np));
    const double s = sigma.size() == 1 ? sigma[0] : sigma[r];
    if (!(s >= 0.0)) throw DataError("noise σ must be non-negative");
    if (rms == 0.0) {
      snr[r] = 0.0;
    } else if (s == 0.0) {
      snr[r] = std::numeric_limits<double>::infinity();
    } else {
      snr[r] = rms / s;
    }
  }
  return snr;
}

std::vector<double> noise_std_from_frames(std::span<const cfloat> frames, std::size_t n_frames, std::size_t n_rows) {
  if (frames.size() != n_frames * n_rows) throw DataError("background frames do not have F·L·K entries");
  if (n_frames < 2) throw DataError("need at least two background frames to estimate noise");
  std::vector<double> sigma(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    cdouble mean(0.0, 0.0);
    for (std::size_t f = 0; f < n_frames; ++f) mean += cdouble(frames[f * n_rows + r]);
    mean /= static_cast<double>(n_frames);
    double ss = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) ss += std::norm(cdouble(frames[f * n_rows + r]) - mean);
    // Pooled over the real and imaginary parts.
    sigma[r] = std::sqrt(ss / (2.0 * static_cast<double>(n_frames - 1)));
  }
  return sigma;
}

FrequencySelection select_frequencies(std::span<const double> snr, std::size_t n_freq, double theta, bool drop_dc) {
  if (n_freq == 0 || snr.size() % n_freq != 0) throw DataError("SNR array length is not a multiple of the frequency count");
  FrequencySelection sel;
  sel.snr.assign(snr.begin(), snr.end());
  for (std::size_t r = 0; r < snr.size(); ++r) {
    if (drop_dc && r % n_freq == 0) continue;
    if (snr[r] >= theta) sel.rows.push_back(r);
  }
  if (sel.rows.empty()) throw ConfigError("no frequency component reaches the SNR threshold " + std::to_string(theta) + "; lower it");
  return sel;
}

KaczmarzResult kaczmarz_solve(const RowMatrix& rows, const Eigen::VectorXcd& u, const ReconstructionConfig& cfg,
                              const std::function<void(int, const Eigen::VectorXcd&)>& on_sweep) {
  validate(cfg);
  const Eigen::Index m = rows.rows();
  const Eigen::Index n = rows.cols();
  if (u.size() != m) throw DataError("measurement length " + std::to_string(u.size()) + " does not match " + std::to_string(m) + " rows");
  if (!rows.allFinite() || !u.allFinite()) throw DataError("Kaczmarz input contains non-finite values");
  KaczmarzResult res;
  res.c = Eigen::VectorXcd::Zero(n);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(m);
  const double sqrt_lambda = std::sqrt(cfg.lambda);

  std::vector<double> energy(static_cast<std::size_t>(m));
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < m; ++j) {
    energy[j] = rows.row(j).squaredNorm();
    if (energy[j] > 0.0) {
      active.push_back(j);
    } else {
      ++res.skipped_rows;
    }
  }
  CounterRng order_rng(cfg.order_seed);
  std::vector<Eigen::Index> order = active;
  for (int sweep = 0; sweep < cfg.n_iter; ++sweep) {
    if (cfg.randomized_order) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.uniform_int(i)]);
    }
    for (Eigen::Index j : order) {
      const auto s = rows.row(j);
      const cdouble dot = s.transpose().cwiseProduct(res.c).sum();
      const cdouble alpha = cfg.relaxation * (u[j] - dot - sqrt_lambda * v[j]) / (energy[j] + cfg.lambda);
      res.c += alpha * s.transpose().conjugate();
      v[j] += alpha * sqrt_lambda;
    }
    if (cfg.nonneg) {
      for (Eigen::Index i = 0; i < n; ++i) res.c[i] = cdouble(std::max(res.c[i].real(), 0.0), 0.0);
    }
    if (!res.c.allFinite()) throw DataError("Kaczmarz iterate became non-finite at sweep " + std::to_string(sweep));
    if (on_sweep) on_sweep(sweep, res.c);
  }
  return res;
}

RealImage reconstruct(const SystemMatrix& sm, std::span<const cdouble> u, const ReconstructionConfig& cfg, std::span<const double> sigma,
                      ReconstructionInfo* info) {
  validate(cfg);
  if (u.size() != sm.n_components())
    throw DataError("measurement has " + std::to_string(u.size()) + " entries, system matrix has L·K = " + std::to_string(sm.n_components()));
  const std::vector<double> snr = estimate_row_snr(sm, sigma);
  const FrequencySelection sel = select_frequencies(snr, sm.n_freq, cfg.snr_threshold, cfg.drop_dc);

  const std::size_t np = sm.grid.size();
  RowMatrix rows(static_cast<Eigen::Index>(sel.rows.size()), static_cast<Eigen::Index>(np));
  Eigen::VectorXcd b(static_cast<Eigen::Index>(sel.rows.size()));
  for (std::size_t i = 0; i < sel.rows.size(); ++i) {
    const std::size_t r = sel.rows[i];
    const ComplexImage img = to_reference_units(sm, r / sm.n_freq, r % sm.n_freq);
    double norm = 0.0;
    for (std::size_t n = 0; n < np; ++n) norm += std::norm(img[n]);
    norm = std::sqrt(norm);
    const double w = (cfg.weighting == Weighting::RowNormL2 && norm > 0.0) ? 1.0 / norm : 1.0;
    for (std::size_t n = 0; n < np; ++n) rows(Eigen::Index(i), Eigen::Index(n)) = w * img[n];
    b[Eigen::Index(i)] = w * u[r];
  }
  const KaczmarzResult res = kaczmarz_solve(rows, b, cfg);
  if (info != nullptr) {
    info->kept_rows = sel.rows.size();
    info->skipped_rows = res.skipped_rows;
  }
  RealImage out(sm.grid);
  for (std::size_t n = 0; n < np; ++n) out[n] = res.c[Eigen::Index(n)].real();
  return out;
}

}  // namespace smk
