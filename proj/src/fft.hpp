#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

namespace smk::detail {

/// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex();

/// Unnormalized forward real-to-complex DFT of fixed length with owned buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  double* input() { return in_; }
  /// Runs the transform; output holds n/2 + 1 bins.
  std::span<const std::complex<double>> execute();

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

/// Orthonormal multi-dimensional DCT-II (forward) / DCT-III (inverse) over the axes of
/// extent > 1 of a row-major volume.
class Dct {
 public:
  explicit Dct(std::array<std::size_t, 3> dims);  // (nz, ny, nx)
  ~Dct();
  Dct(const Dct&) = delete;
  Dct& operator=(const Dct&) = delete;

  void forward(std::span<double> data);
  void inverse(std::span<double> data);

 private:
  void scale(std::span<double> data, bool forward) const;

  std::vector<int> active_dims_;
  std::array<std::size_t, 3> dims_;
  std::size_t total_;
  double* buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace smk::detail
