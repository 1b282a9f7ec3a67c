#include "gkdv/kernels.hpp"

#include <algorithm>
#include <vector>

namespace gkdv::kernels {

namespace serial {
#define GKDV_PAR
#include "kernels_body.inc"
#undef GKDV_PAR
}  // namespace serial

namespace parallel {
#define GKDV_PAR _Pragma("omp parallel for schedule(static) if (n_parallel_ok(nn))")
namespace {
constexpr bool n_parallel_ok(std::ptrdiff_t n) { return n >= 4096; }
}  // namespace
#include "kernels_body.inc"
#undef GKDV_PAR
}  // namespace parallel

}  // namespace gkdv::kernels
