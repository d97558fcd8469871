#include <cstdlib>
#include <string>

#include "csight/error.hpp"
#include "csight/simd/dispatch.hpp"

namespace csight::simd {

const Kernels& scalar_table();
#if defined(CSIGHT_HAVE_AVX2_LANE)
const Kernels& avx2_table();
#endif
#if defined(CSIGHT_HAVE_NEON_LANE)
const Kernels& neon_table();
#endif

const char* lane_name(Lane lane) {
    switch (lane) {
        case Lane::scalar: return "scalar";
        case Lane::avx2: return "avx2";
        case Lane::neon: return "neon";
    }
    return "unknown";
}

bool lane_available(Lane lane) {
    switch (lane) {
        case Lane::scalar:
            return true;
        case Lane::avx2:
#if defined(CSIGHT_HAVE_AVX2_LANE)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Lane::neon:
            // Advanced SIMD is a mandatory part of AArch64.
#if defined(CSIGHT_HAVE_NEON_LANE)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Lane active_lane() {
    static const Lane lane = [] {
        const char* env = std::getenv("CSIGHT_SIMD");
        const std::string choice = env ? env : "auto";
        if (choice == "scalar") return Lane::scalar;
        if (choice == "avx2") {
            if (!lane_available(Lane::avx2))
                throw DataError("CSIGHT_SIMD=avx2 but the AVX2 lane is unavailable");
            return Lane::avx2;
        }
        if (choice == "neon") {
            if (!lane_available(Lane::neon))
                throw DataError("CSIGHT_SIMD=neon but the NEON lane is unavailable");
            return Lane::neon;
        }
        if (choice != "auto" && !choice.empty())
            throw DataError("unknown CSIGHT_SIMD value '" + choice +
                            "' (expected scalar, avx2, neon or auto)");
        if (lane_available(Lane::avx2)) return Lane::avx2;
        if (lane_available(Lane::neon)) return Lane::neon;
        return Lane::scalar;
    }();
    return lane;
}

const Kernels& kernels_for(Lane lane) {
    if (!lane_available(lane))
        throw DataError(std::string("SIMD lane '") + lane_name(lane) +
                        "' is unavailable on this machine");
#if defined(CSIGHT_HAVE_AVX2_LANE)
    if (lane == Lane::avx2) return avx2_table();
#endif
#if defined(CSIGHT_HAVE_NEON_LANE)
    if (lane == Lane::neon) return neon_table();
#endif
    return scalar_table();
}

const Kernels& kernels() { return kernels_for(active_lane()); }

} // namespace csight::simd
