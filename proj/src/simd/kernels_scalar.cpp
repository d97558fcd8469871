#include <cmath>

#include "csight/simd/kernels.hpp"

namespace csight::simd {
namespace {

void sqdist_to_point_scalar(const double* const* dims, std::size_t dim_count,
                            std::size_t n, const double* query, double* out) {
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim_count; ++d) {
            const double diff = dims[d][j] - query[d];
            acc += diff * diff;
        }
        out[j] = acc;
    }
}

void exp_neg_scale_scalar(const double* x, std::size_t n, double inv_eps, double* out) {
    const double neg = -inv_eps;
    for (std::size_t j = 0; j < n; ++j) out[j] = std::exp(x[j] * neg);
}

void div_scale_scalar(const double* x, std::size_t n, double divisor, double* out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = x[j] / divisor;
}

void scale_mul_scalar(const double* x, std::size_t n, double a, const double* b, double* out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = (x[j] * a) * b[j];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += x[j];
    return acc;
}

void assign_nearest_scalar(const double* const* dims, std::size_t dim_count,
                           std::size_t n, const double* centroids, std::size_t k,
                           std::uint32_t* assign, double* dist2) {
    for (std::size_t j = 0; j < n; ++j) {
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

const Kernels& scalar_table() {
    static const Kernels table{
        sqdist_to_point_scalar,
        exp_neg_scale_scalar,
        div_scale_scalar,
        scale_mul_scalar,
        sum_scalar,
        assign_nearest_scalar,
    };
    return table;
}

} // namespace csight::simd
