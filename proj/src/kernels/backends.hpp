#pragma once

#include "attnfuse/kernels.hpp"

namespace attnfuse::kernels::detail {

extern const Table kScalarTable;
#if defined(ATTNFUSE_HAVE_AVX2)
extern const Table kAvx2Table;
#endif
#if defined(ATTNFUSE_HAVE_NEON)
extern const Table kNeonTable;
#endif

}  // namespace attnfuse::kernels::detail
