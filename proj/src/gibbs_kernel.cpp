#include "gibbs_kernel.hpp"

namespace smk::detail {

namespace {
bool has_avx2() {
#if defined(__x86_64__) && defined(SMK_HAVE_AVX2_KERNEL)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}
}  // namespace

GibbsSums gibbs_sums(const double* dx, const double* dy, const double* dz, const double* w, std::size_t n, double xx,
                     double xy, double xz, double shift, bool want_moment) {
#if defined(SMK_HAVE_AVX2_KERNEL)
  if (has_avx2()) return gibbs_sums_avx2(dx, dy, dz, w, n, xx, xy, xz, shift, want_moment);
#endif
  return gibbs_sums_generic(dx, dy, dz, w, n, xx, xy, xz, shift, want_moment);
}

}  // namespace smk::detail
