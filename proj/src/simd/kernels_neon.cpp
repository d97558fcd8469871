#include <cmath>
#include <arm_neon.h>

#include "csight/simd/kernels.hpp"

namespace csight::simd {
namespace {

void sqdist_to_point_neon(const double* const* dims, std::size_t dim_count,
                          std::size_t n, const double* query, double* out) {
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        float64x2_t acc = vdupq_n_f64(0.0);
        for (std::size_t d = 0; d < dim_count; ++d) {
            const float64x2_t diff =
                vsubq_f64(vld1q_f64(dims[d] + j), vdupq_n_f64(query[d]));
            // Separate mul and add: contraction would break the bitwise
            // match with the scalar reference.
            acc = vaddq_f64(acc, vmulq_f64(diff, diff));
        }
        vst1q_f64(out + j, acc);
    }
    for (; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim_count; ++d) {
            const double diff = dims[d][j] - query[d];
            acc += diff * diff;
        }
        out[j] = acc;
    }
}

// AArch64 has no vector exponential instruction; per-element libm calls keep
// this lane bitwise equal to the scalar reference.
void exp_neg_scale_neon(const double* x, std::size_t n, double inv_eps, double* out) {
    const double neg = -inv_eps;
    for (std::size_t j = 0; j < n; ++j) out[j] = std::exp(x[j] * neg);
}

void div_scale_neon(const double* x, std::size_t n, double divisor, double* out) {
    const float64x2_t div = vdupq_n_f64(divisor);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) vst1q_f64(out + j, vdivq_f64(vld1q_f64(x + j), div));
    for (; j < n; ++j) out[j] = x[j] / divisor;
}

void scale_mul_neon(const double* x, std::size_t n, double a, const double* b, double* out) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const float64x2_t scaled = vmulq_f64(vld1q_f64(x + j), va);
        vst1q_f64(out + j, vmulq_f64(scaled, vld1q_f64(b + j)));
    }
    for (; j < n; ++j) out[j] = (x[j] * a) * b[j];
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) acc = vaddq_f64(acc, vld1q_f64(x + j));
    double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; j < n; ++j) total += x[j];
    return total;
}

void assign_nearest_neon(const double* const* dims, std::size_t dim_count,
                         std::size_t n, const double* centroids, std::size_t k,
                         std::uint32_t* assign, double* dist2) {
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        float64x2_t best = vdupq_n_f64(0.0);
        uint64x2_t best_idx = vdupq_n_u64(0);
        for (std::size_t c = 0; c < k; ++c) {
            const double* cent = centroids + c * dim_count;
            float64x2_t acc = vdupq_n_f64(0.0);
            for (std::size_t d = 0; d < dim_count; ++d) {
                const float64x2_t diff =
                    vsubq_f64(vld1q_f64(dims[d] + j), vdupq_n_f64(cent[d]));
                acc = vaddq_f64(acc, vmulq_f64(diff, diff));
            }
            if (c == 0) {
                best = acc;
            } else {
                // Strict less-than keeps the lower index on ties.
                const uint64x2_t lt = vcltq_f64(acc, best);
                best = vbslq_f64(lt, acc, best);
                best_idx = vbslq_u64(lt, vdupq_n_u64(static_cast<std::uint64_t>(c)), best_idx);
            }
        }
        assign[j] = static_cast<std::uint32_t>(vgetq_lane_u64(best_idx, 0));
        assign[j + 1] = static_cast<std::uint32_t>(vgetq_lane_u64(best_idx, 1));
        if (dist2) vst1q_f64(dist2 + j, best);
    }
    for (; j < n; ++j) {
        double best = 0.0;
        std::uint32_t best_idx = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double* cent = centroids + c * dim_count;
            double acc = 0.0;
            for (std::size_t d = 0; d < dim_count; ++d) {
                const double diff = dims[d][j] - cent[d];
                acc += diff * diff;
            }
            if (c == 0 || acc < best) {
                best = acc;
                best_idx = static_cast<std::uint32_t>(c);
            }
        }
        assign[j] = best_idx;
        if (dist2) dist2[j] = best;
    }
}

} // namespace

const Kernels& neon_table() {
    static const Kernels table{
        sqdist_to_point_neon,
        exp_neg_scale_neon,
        div_scale_neon,
        scale_mul_neon,
        sum_neon,
        assign_nearest_neon,
    };
    return table;
}

} // namespace csight::simd
