#pragma once

#include <cstddef>
#include <cstdint>

namespace csight::simd {

// Table of data-parallel kernels. Every lane (scalar reference, AVX2, NEON)
// provides the same table and the same contracts.
//
// Cross-lane determinism contract:
//  * sqdist_to_point, div_scale, scale_mul and assign_nearest are
//    bitwise-identical across lanes. Vector lanes parallelize across
//    elements while keeping each element's operation order equal to the
//    scalar reference, and none of these kernels use FMA contraction.
//  * sum reassociates (vector partial sums), so it may differ from the
//    scalar reference by a few ulps.
//  * exp_neg_scale uses a polynomial exponential in the AVX2 lane (a few
//    ulps from libm); the NEON lane calls libm per element like the scalar
//    reference.
struct Kernels {
    // out[j] = sum_d (dims[d][j] - query[d])^2  for j in [0, n)
    void (*sqdist_to_point)(const double* const* dims, std::size_t dim_count,
                            std::size_t n, const double* query, double* out);

    // out[j] = exp(-x[j] * inv_eps)
    void (*exp_neg_scale)(const double* x, std::size_t n, double inv_eps, double* out);

    // out[j] = x[j] / divisor
    void (*div_scale)(const double* x, std::size_t n, double divisor, double* out);

    // out[j] = (x[j] * a) * b[j]
    void (*scale_mul)(const double* x, std::size_t n, double a, const double* b, double* out);

    double (*sum)(const double* x, std::size_t n);

    // Nearest-centroid assignment over n points in dim-major layout.
    // centroids is row-major k x dim_count. Ties break toward the lower
    // centroid index. dist2 (squared distance to the chosen centroid) may be
    // null.
    void (*assign_nearest)(const double* const* dims, std::size_t dim_count,
                           std::size_t n, const double* centroids, std::size_t k,
                           std::uint32_t* assign, double* dist2);
};

} // namespace csight::simd
