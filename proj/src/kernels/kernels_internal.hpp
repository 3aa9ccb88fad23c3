#pragma once

#include "qavg/kernels.hpp"

namespace qavg::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(__x86_64__) || defined(_M_X64)
#define QAVG_HAVE_AVX2_KERNELS 1
extern const KernelTable kAvx2Table;
#endif

}  // namespace qavg::kernels::detail
