#pragma once

#include "csight/simd/kernels.hpp"

namespace csight::simd {

enum class Lane {
    scalar,
    avx2,
    neon,
};

const char* lane_name(Lane lane);

bool lane_available(Lane lane);

// Lane used by kernels(). Defaults to the widest available lane; the
// CSIGHT_SIMD environment variable ("scalar", "avx2", "neon", "auto")
// overrides. Resolved once per process.
Lane active_lane();

// Kernel table for the active lane.
const Kernels& kernels();

// Kernel table for an explicit lane; throws DataError if unavailable.
const Kernels& kernels_for(Lane lane);

} // namespace csight::simd
