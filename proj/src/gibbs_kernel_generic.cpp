#define GIBBS_KERNEL_NAME gibbs_sums_generic
#include "gibbs_kernel.inc"
