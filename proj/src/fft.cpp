#include "fft.hpp"

#include <cmath>
#include <cstring>
#include <new>

namespace smk::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(fftw_planner_mutex());
  in_ = fftw_alloc_real(n);
  out_ = fftw_alloc_complex(n / 2 + 1);
  if (in_ == nullptr || out_ == nullptr) throw std::bad_alloc();
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan_);
  fftw_free(in_);
  fftw_free(out_);
}

std::span<const std::complex<double>> RealFft::execute() {
  fftw_execute(plan_);
  return {reinterpret_cast<const std::complex<double>*>(out_), n_ / 2 + 1};
}

Dct::Dct(std::array<std::size_t, 3> dims) : dims_(dims), total_(dims[0] * dims[1] * dims[2]) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] > 1) active_dims_.push_back(a);
  }
  std::lock_guard lock(fftw_planner_mutex());
  buf_ = fftw_alloc_real(std::max<std::size_t>(total_, 1));
  if (buf_ == nullptr) throw std::bad_alloc();
  if (active_dims_.empty()) return;
  // A row-major volume with singleton axes is a row-major array over the remaining ones.
  std::vector<int> n;
  std::vector<fftw_r2r_kind> kf;
  std::vector<fftw_r2r_kind> ki;
  for (int a : active_dims_) {
    n.push_back(static_cast<int>(dims[a]));
    kf.push_back(FFTW_REDFT10);
    ki.push_back(FFTW_REDFT01);
  }
  const int rank = static_cast<int>(n.size());
  fwd_ = fftw_plan_r2r(rank, n.data(), buf_, buf_, kf.data(), FFTW_ESTIMATE);
  inv_ = fftw_plan_r2r(rank, n.data(), buf_, buf_, ki.data(), FFTW_ESTIMATE);
}

Dct::~Dct() {
  std::lock_guard lock(fftw_planner_mutex());
  if (fwd_ != nullptr) fftw_destroy_plan(fwd_);
  if (inv_ != nullptr) fftw_destroy_plan(inv_);
  fftw_free(buf_);
}

void Dct::scale(std::span<double> data, bool forward) const {
  const std::size_t nz = dims_[0];
  const std::size_t ny = dims_[1];
  const std::size_t nx = dims_[2];
  auto factor = [forward](std::size_t k, std::size_t n) {
    if (n <= 1) return 1.0;
    const double dn = static_cast<double>(n);
    if (forward) return k == 0 ? 1.0 / (2.0 * std::sqrt(dn)) : 1.0 / std::sqrt(2.0 * dn);
    return k == 0 ? 1.0 / std::sqrt(dn) : 1.0 / std::sqrt(2.0 * dn);
  };
  std::size_t i = 0;
  for (std::size_t z = 0; z < nz; ++z) {
    const double fz = factor(z, nz);
    for (std::size_t y = 0; y < ny; ++y) {
      const double fzy = fz * factor(y, ny);
      for (std::size_t x = 0; x < nx; ++x, ++i) data[i] *= fzy * factor(x, nx);
    }
  }
}

void Dct::forward(std::span<double> data) {
  if (active_dims_.empty()) return;
  std::memcpy(buf_, data.data(), total_ * sizeof(double));
  fftw_execute(fwd_);
  std::memcpy(data.data(), buf_, total_ * sizeof(double));
  scale(data, true);
}

void Dct::inverse(std::span<double> data) {
  if (active_dims_.empty()) return;
  scale(data, false);
  std::memcpy(buf_, data.data(), total_ * sizeof(double));
  fftw_execute(inv_);
  std::memcpy(data.data(), buf_, total_ * sizeof(double));
}

}  // namespace smk::detail
