#define GIBBS_KERNEL_NAME gibbs_sums_avx2
#include "gibbs_kernel.inc"
