#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csight/matrix.hpp"
#include "csight/packet.hpp"
#include "csight/points.hpp"
#include "csight/simd/dispatch.hpp"

namespace csight {

enum class Normalization {
    none,
    zscore,
    minmax,
};

const char* normalization_name(Normalization n);
std::optional<Normalization> parse_normalization(const std::string& name);

// Per-dimension affine transform applied by build_features: x' = (x - offset)
// * scale. zero_spread marks a constant dimension that was mapped to zero.
struct DimScaling {
    double offset = 0.0;
    double scale = 1.0;
    bool zero_spread = false;
};

struct FeatureBuild {
    PointSet points;
    std::vector<DimScaling> scaling;
    std::vector<std::string> dim_names;
};

// One feature vector per record: (timestamp, source address, destination
// address, packet length), each dimension normalized independently. TTL is
// carried by the records but joins the feature space only when include_ttl
// is set. Needs at least two records.
FeatureBuild build_features(const std::vector<PacketRecord>& records,
                            Normalization normalization, bool include_ttl = false);

// Bandwidth heuristic: the median of all n(n-1)/2 pairwise squared
// Euclidean distances (lower median for even counts). If the median is zero
// but the points are not all identical, the smallest positive squared
// distance is used instead; all-identical points raise DataError.
double choose_epsilon(const PointSet& points,
                      const simd::Kernels& kernels = simd::kernels());

// Dense affinity matrix W[i][j] = exp(-|x_i - x_j|^2 / epsilon). Symmetric
// with an exactly unit diagonal. Refuses point sets larger than cap; callers
// with more data subsample first (see stride_indices).
Matrix kernel_matrix(const PointSet& points, double epsilon, std::size_t cap = 10000,
                     const simd::Kernels& kernels = simd::kernels());

// Row-stochastic transition matrix P = D^-1 W of the random walk on the
// affinity graph.
Matrix markov_normalize(const Matrix& w, const simd::Kernels& kernels = simd::kernels());

// Eigensystem of P obtained through the symmetric conjugate
// S = D^-1/2 W D^-1/2, which shares P's eigenvalues and yields its right
// eigenvectors as psi = D^-1/2 v. Eigenpairs are ordered by descending
// |eigenvalue| (the leading pair is 1 with a constant eigenvector), and the
// eigenvectors are normalized against the stationary distribution
// (sum_i pi_i psi_l(i) psi_k(i) = delta_lk, making psi_1 the all-ones
// vector) with the sign chosen so each vector's largest-magnitude entry is
// positive.
struct SpectralDecomposition {
    std::vector<double> eigenvalues;
    Matrix psi;                      // column l holds psi_l
    std::vector<double> stationary;  // pi_i = d_i / sum(d)

    std::size_t size() const { return stationary.size(); }
};

SpectralDecomposition spectral_decompose(const Matrix& w,
                                         const simd::Kernels& kernels = simd::kernels());

// Diffusion coordinates at scale t: row i is
// (l2^t psi_2(i), ..., l_{m+1}^t psi_{m+1}(i)), skipping the trivial leading
// eigenpair. Requires 1 <= m <= n-1 and t >= 1. With m = n-1, Euclidean
// distances between rows equal the diffusion distances of the walk.
Matrix diffusion_embed(const SpectralDecomposition& dec, unsigned t, std::size_t m);

// Deterministic subsample: every ceil(n/cap)-th index, starting at 0.
std::vector<std::size_t> stride_indices(std::size_t n, std::size_t cap);

PointSet to_point_set(const Matrix& row_major_points);

struct EmbeddingMeta {
    double epsilon = 0.0;
    unsigned t = 1;
    std::size_t m = 3;
    Normalization normalization = Normalization::zscore;
    std::size_t input_records = 0;
    std::size_t embedded_points = 0;
    std::size_t stride = 1;
    std::vector<double> eigenvalues;
    std::string simd_lane;
};

void write_embedding_csv(std::ostream& out, const Matrix& coords,
                         const std::vector<std::size_t>& record_indices,
                         const std::vector<Label>& labels);

void write_embedding_meta(std::ostream& out, const EmbeddingMeta& meta);

struct EmbeddingFile {
    Matrix coords;
    std::vector<std::size_t> record_indices;
    std::vector<Label> labels;
};

EmbeddingFile parse_embedding_csv(std::istream& in);

} // namespace csight
