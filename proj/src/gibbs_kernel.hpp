#pragma once

#include <cstddef>

namespace smk::detail {

struct GibbsSums {
  double z = 0.0;
  double mx = 0.0;
  double my = 0.0;
  double mz = 0.0;
};

/// Weighted sums over antipodal node pairs (d, −d):
///   z = Σ w·(e^{ξ·d − s} + e^{−ξ·d − s}),  m = Σ w·d·(e^{ξ·d − s} − e^{−ξ·d − s}).
/// The caller guarantees |ξ·d| ≤ shift. Dispatches to an AVX2 build when available.
GibbsSums gibbs_sums(const double* dx, const double* dy, const double* dz, const double* w, std::size_t n, double xx,
                     double xy, double xz, double shift, bool want_moment);

GibbsSums gibbs_sums_generic(const double* dx, const double* dy, const double* dz, const double* w, std::size_t n,
                             double xx, double xy, double xz, double shift, bool want_moment);
GibbsSums gibbs_sums_avx2(const double* dx, const double* dy, const double* dz, const double* w, std::size_t n,
                          double xx, double xy, double xz, double shift, bool want_moment);

}  // namespace smk::detail
