#include "remnet/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace remnet::kern {
namespace {

const KernelTable* resolve() {
    const char* force = std::getenv("REMNET_KERNELS");
    if (force != nullptr) {
        if (std::strcmp(force, "scalar") == 0) return &scalar_table();
#if REMNET_HAVE_AVX2_TU
        if (std::strcmp(force, "avx2") == 0) return &avx2_table();
#endif
#if REMNET_HAVE_NEON_TU
        if (std::strcmp(force, "neon") == 0) return &neon_table();
#endif
        // Unknown or unavailable name falls back to the scalar reference.
        return &scalar_table();
    }
#if REMNET_HAVE_AVX2_TU
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return &avx2_table();
    }
#endif
#if REMNET_HAVE_NEON_TU
    return &neon_table();
#endif
    return &scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable* table = resolve();
    return *table;
}

}  // namespace remnet::kern
