#include <cmath>
#include <cstring>
#include <immintrin.h>

#include "csight/simd/kernels.hpp"

namespace csight::simd {
namespace {

// exp(x) for four doubles: Cephes-style range reduction x = n*ln2 + r with a
// rational approximation on r, then exact scaling by 2^n split into two
// power-of-two multiplies so subnormal results round once and extreme normal
// results do not overflow in an intermediate. |error| is a few ulps.
const double kLog2E = 1.4426950408889634073599;
const double kLn2Hi = 6.93145751953125e-1;
const double kLn2Lo = 1.42860682030941723212e-6;
const double kExpP0 = 1.26177193074810590878e-4;
const double kExpP1 = 3.02994407707441961300e-2;
const double kExpP2 = 9.99999999999999999910e-1;
const double kExpQ0 = 3.00198505138664455042e-6;
const double kExpQ1 = 2.52448340349684104192e-3;
const double kExpQ2 = 2.27265548208155028766e-1;
const double kExpQ3 = 2.00000000000000000005e0;
const double kExpHi = 709.782712893383996732;   // above: overflow to inf
const double kExpLo = -745.133219101941108420;  // below: underflow to 0

// 2^n for integer-valued doubles with n in the normal exponent range.
inline __m256d pow2_pd(__m256d n) {
    __m128i n32 = _mm256_cvtpd_epi32(n);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_castsi256_pd(bits);
}

inline __m256d exp_pd(__m256d x) {
    const __m256d xc =
        _mm256_max_pd(_mm256_min_pd(x, _mm256_set1_pd(709.79)), _mm256_set1_pd(-745.2));

    const __m256d n =
        _mm256_floor_pd(_mm256_fmadd_pd(xc, _mm256_set1_pd(kLog2E), _mm256_set1_pd(0.5)));

    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), xc);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kExpP0), rr, _mm256_set1_pd(kExpP1));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kExpP2));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kExpQ0), rr, _mm256_set1_pd(kExpQ1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ2));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ3));

    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

    const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
    const __m256d n2 = _mm256_sub_pd(n, n1);
    e = _mm256_mul_pd(e, pow2_pd(n1));
    e = _mm256_mul_pd(e, pow2_pd(n2));

    e = _mm256_blendv_pd(e, _mm256_setzero_pd(),
                         _mm256_cmp_pd(x, _mm256_set1_pd(kExpLo), _CMP_LT_OQ));
    e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL),
                         _mm256_cmp_pd(x, _mm256_set1_pd(kExpHi), _CMP_GT_OQ));
    return e;
}

void sqdist_to_point_avx2(const double* const* dims, std::size_t dim_count,
                          std::size_t n, const double* query, double* out) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t d = 0; d < dim_count; ++d) {
            const __m256d diff =
                _mm256_sub_pd(_mm256_loadu_pd(dims[d] + j), _mm256_set1_pd(query[d]));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
        }
        _mm256_storeu_pd(out + j, acc);
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

void exp_neg_scale_avx2(const double* x, std::size_t n, double inv_eps, double* out) {
    const __m256d neg = _mm256_set1_pd(-inv_eps);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(out + j, exp_pd(_mm256_mul_pd(_mm256_loadu_pd(x + j), neg)));
    }
    if (j < n) {
        // Route the tail through the same vector exp so one lane uses one
        // exp implementation throughout.
        double tmp[4] = {0.0, 0.0, 0.0, 0.0};
        std::memcpy(tmp, x + j, (n - j) * sizeof(double));
        __m256d r = exp_pd(_mm256_mul_pd(_mm256_loadu_pd(tmp), neg));
        double res[4];
        _mm256_storeu_pd(res, r);
        std::memcpy(out + j, res, (n - j) * sizeof(double));
    }
}

void div_scale_avx2(const double* x, std::size_t n, double divisor, double* out) {
    const __m256d div = _mm256_set1_pd(divisor);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(out + j, _mm256_div_pd(_mm256_loadu_pd(x + j), div));
    }
    for (; j < n; ++j) out[j] = x[j] / divisor;
}

void scale_mul_avx2(const double* x, std::size_t n, double a, const double* b, double* out) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d scaled = _mm256_mul_pd(_mm256_loadu_pd(x + j), va);
        _mm256_storeu_pd(out + j, _mm256_mul_pd(scaled, _mm256_loadu_pd(b + j)));
    }
    for (; j < n; ++j) out[j] = (x[j] * a) * b[j];
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + j));
    const __m128d pair =
        _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
    double total = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
    for (; j < n; ++j) total += x[j];
    return total;
}

void assign_nearest_avx2(const double* const* dims, std::size_t dim_count,
                         std::size_t n, const double* centroids, std::size_t k,
                         std::uint32_t* assign, double* dist2) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d best = _mm256_setzero_pd();
        __m256d best_idx = _mm256_setzero_pd();
        for (std::size_t c = 0; c < k; ++c) {
            const double* cent = centroids + c * dim_count;
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t d = 0; d < dim_count; ++d) {
                const __m256d diff =
                    _mm256_sub_pd(_mm256_loadu_pd(dims[d] + j), _mm256_set1_pd(cent[d]));
                acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
            }
            if (c == 0) {
                best = acc;
            } else {
                const __m256d lt = _mm256_cmp_pd(acc, best, _CMP_LT_OQ);
                best = _mm256_blendv_pd(best, acc, lt);
                best_idx = _mm256_blendv_pd(best_idx, _mm256_set1_pd(static_cast<double>(c)), lt);
            }
        }
        const __m128i idx32 = _mm256_cvtpd_epi32(best_idx);
        _mm_storeu_si128(reinterpret_cast<__m128i*>(assign + j), idx32);
        if (dist2) _mm256_storeu_pd(dist2 + j, best);
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

const Kernels& avx2_table() {
    static const Kernels table{
        sqdist_to_point_avx2,
        exp_neg_scale_avx2,
        div_scale_avx2,
        scale_mul_avx2,
        sum_avx2,
        assign_nearest_avx2,
    };
    return table;
}

} // namespace csight::simd
