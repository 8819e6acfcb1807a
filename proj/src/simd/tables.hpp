#pragma once

#include "ftfer/simd.hpp"

namespace ftfer::simd::detail {

const KernelTable& scalar_table();
#if defined(FTFER_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace ftfer::simd::detail
