#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "csight/error.hpp"
#include "csight/manifold.hpp"

namespace csight {

const char* normalization_name(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::zscore: return "zscore";
        case Normalization::minmax: return "minmax";
    }
    return "unknown";
}

std::optional<Normalization> parse_normalization(const std::string& name) {
    if (name == "none") return Normalization::none;
    if (name == "zscore") return Normalization::zscore;
    if (name == "minmax") return Normalization::minmax;
    return std::nullopt;
}

FeatureBuild build_features(const std::vector<PacketRecord>& records,
                            Normalization normalization, bool include_ttl) {
    if (records.size() < 2)
        throw DataError("feature construction needs at least two records");

    const std::size_t n = records.size();
    FeatureBuild build;
    build.dim_names = {"time", "src", "dst", "len"};
    if (include_ttl) build.dim_names.push_back("ttl");
    const std::size_t dims = build.dim_names.size();

    build.points = PointSet(n, dims);
    for (std::size_t i = 0; i < n; ++i) {
        const PacketRecord& r = records[i];
        build.points.at(i, 0) = r.ts;
        build.points.at(i, 1) = static_cast<double>(r.src);
        build.points.at(i, 2) = static_cast<double>(r.dst);
        build.points.at(i, 3) = static_cast<double>(r.length);
        if (include_ttl) build.points.at(i, 4) = static_cast<double>(r.ttl);
    }

    build.scaling.assign(dims, DimScaling{});
    if (normalization == Normalization::none) return build;

    for (std::size_t d = 0; d < dims; ++d) {
        double* x = build.points.dim(d);
        DimScaling& s = build.scaling[d];
        if (normalization == Normalization::minmax) {
            double lo = x[0], hi = x[0];
            for (std::size_t i = 1; i < n; ++i) {
                lo = std::min(lo, x[i]);
                hi = std::max(hi, x[i]);
            }
            s.offset = lo;
            s.zero_spread = hi == lo;
            s.scale = s.zero_spread ? 0.0 : 1.0 / (hi - lo);
        } else {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += x[i];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
            var /= static_cast<double>(n);
            const double stddev = std::sqrt(var);
            s.offset = mean;
            s.zero_spread = stddev == 0.0;
            s.scale = s.zero_spread ? 0.0 : 1.0 / stddev;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] - s.offset) * s.scale;
    }
    return build;
}

double choose_epsilon(const PointSet& points, const simd::Kernels& kernels) {
    const std::size_t n = points.size();
    if (n < 2) throw DataError("bandwidth selection needs at least two points");

    const auto dims = points.dim_ptrs();
    const std::size_t pair_count = n * (n - 1) / 2;
    std::vector<double> dist2;
    dist2.reserve(pair_count);
    std::vector<double> row(n);
    std::vector<double> query(points.dims());
    std::vector<const double*> shifted(points.dims());

    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t d = 0; d < points.dims(); ++d) {
            query[d] = dims[d][i];
            shifted[d] = dims[d] + i + 1;
        }
        const std::size_t len = n - i - 1;
        kernels.sqdist_to_point(shifted.data(), points.dims(), len, query.data(), row.data());
        dist2.insert(dist2.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(len));
    }

    const std::size_t mid = (pair_count - 1) / 2;
    std::nth_element(dist2.begin(), dist2.begin() + static_cast<std::ptrdiff_t>(mid),
                     dist2.end());
    double median = dist2[mid];
    if (median > 0.0) return median;

    double smallest_positive = 0.0;
    for (const double d2 : dist2) {
        if (d2 > 0.0 && (smallest_positive == 0.0 || d2 < smallest_positive))
            smallest_positive = d2;
    }
    if (smallest_positive == 0.0)
        throw DataError("all points are identical; no usable kernel bandwidth exists");
    return smallest_positive;
}

Matrix kernel_matrix(const PointSet& points, double epsilon, std::size_t cap,
                     const simd::Kernels& kernels) {
    const std::size_t n = points.size();
    if (n < 2) throw DataError("kernel matrix needs at least two points");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw DataError("kernel bandwidth must be positive and finite");
    if (n > cap)
        throw DataError("kernel matrix over " + std::to_string(n) +
                        " points exceeds the cap of " + std::to_string(cap) +
                        "; subsample the point set or raise the cap");

    const auto dims = points.dim_ptrs();
    const double inv_eps = 1.0 / epsilon;
    Matrix w(n, n);
    std::vector<double> d2(n);
    std::vector<double> expd(n);
    std::vector<double> query(points.dims());
    std::vector<const double*> shifted(points.dims());

    for (std::size_t i = 0; i < n; ++i) {
        w(i, i) = 1.0;
        const std::size_t len = n - i - 1;
        if (len == 0) continue;
        for (std::size_t d = 0; d < points.dims(); ++d) {
            query[d] = dims[d][i];
            shifted[d] = dims[d] + i + 1;
        }
        kernels.sqdist_to_point(shifted.data(), points.dims(), len, query.data(), d2.data());
        kernels.exp_neg_scale(d2.data(), len, inv_eps, expd.data());
        double* row = w.row(i);
        for (std::size_t j = 0; j < len; ++j) {
            row[i + 1 + j] = expd[j];
            w(i + 1 + j, i) = expd[j];
        }
    }
    return w;
}

Matrix markov_normalize(const Matrix& w, const simd::Kernels& kernels) {
    const std::size_t n = w.rows();
    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double degree = kernels.sum(w.row(i), n);
        kernels.div_scale(w.row(i), n, degree, p.row(i));
    }
    return p;
}

SpectralDecomposition spectral_decompose(const Matrix& w, const simd::Kernels& kernels) {
    const std::size_t n = w.rows();
    if (n == 0 || w.cols() != n) throw DataError("affinity matrix must be square");

    std::vector<double> degree(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        degree[i] = kernels.sum(w.row(i), n);
        total += degree[i];
    }

    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        kernels.scale_mul(w.row(i), n, inv_sqrt[i], inv_sqrt.data(), s.row(i));

    Eigen::MatrixXd sym(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            sym(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s(i, j);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success)
        throw DataError("symmetric eigendecomposition failed to converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& vals = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(vals(static_cast<Eigen::Index>(a)));
        const double mb = std::abs(vals(static_cast<Eigen::Index>(b)));
        if (ma != mb) return ma > mb;
        return vals(static_cast<Eigen::Index>(a)) > vals(static_cast<Eigen::Index>(b));
    });

    SpectralDecomposition dec;
    dec.eigenvalues.resize(n);
    dec.psi = Matrix(n, n);
    dec.stationary.resize(n);
    for (std::size_t i = 0; i < n; ++i) dec.stationary[i] = degree[i] / total;

    const double sqrt_total = std::sqrt(total);
    const auto& vecs = solver.eigenvectors();
    for (std::size_t l = 0; l < n; ++l) {
        const auto src = static_cast<Eigen::Index>(order[l]);
        dec.eigenvalues[l] = vals(src);

        // psi_l = sqrt(sum d) * D^-1/2 v_l, then fix the sign so the
        // largest-magnitude entry is positive.
        double max_abs = -1.0;
        bool flip = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double value =
                sqrt_total * vecs(static_cast<Eigen::Index>(i), src) * inv_sqrt[i];
            dec.psi(i, l) = value;
            if (std::abs(value) > max_abs) {
                max_abs = std::abs(value);
                flip = value < 0.0;
            }
        }
        if (flip)
            for (std::size_t i = 0; i < n; ++i) dec.psi(i, l) = -dec.psi(i, l);
    }
    return dec;
}

Matrix diffusion_embed(const SpectralDecomposition& dec, unsigned t, std::size_t m) {
    const std::size_t n = dec.size();
    if (t < 1) throw DataError("diffusion time must be a positive integer");
    if (m < 1 || m > n - 1)
        throw DataError("embedding dimension must lie in [1, n-1], got " + std::to_string(m));

    std::vector<double> scale(m);
    for (std::size_t j = 0; j < m; ++j) {
        double p = 1.0;
        for (unsigned step = 0; step < t; ++step) p *= dec.eigenvalues[j + 1];
        scale[j] = p;
    }

    Matrix coords(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) coords(i, j) = scale[j] * dec.psi(i, j + 1);
    return coords;
}

std::vector<std::size_t> stride_indices(std::size_t n, std::size_t cap) {
    if (cap == 0) throw DataError("subsample cap must be positive");
    std::vector<std::size_t> idx;
    const std::size_t stride = n <= cap ? 1 : (n + cap - 1) / cap;
    idx.reserve(n / stride + 1);
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    return idx;
}

PointSet to_point_set(const Matrix& row_major_points) {
    PointSet points(row_major_points.rows(), row_major_points.cols());
    for (std::size_t i = 0; i < row_major_points.rows(); ++i)
        for (std::size_t d = 0; d < row_major_points.cols(); ++d)
            points.at(i, d) = row_major_points(i, d);
    return points;
}

void write_embedding_csv(std::ostream& out, const Matrix& coords,
                         const std::vector<std::size_t>& record_indices,
                         const std::vector<Label>& labels) {
    const std::size_t n = coords.rows();
    if (record_indices.size() != n || labels.size() != n)
        throw DataError("embedding rows, record indices and labels must align");

    out << "point_index,record_index";
    for (std::size_t j = 0; j < coords.cols(); ++j) out << ",c" << j + 1;
    out << ",label\n";

    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        out << i << ',' << record_indices[i];
        for (std::size_t j = 0; j < coords.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", coords(i, j));
            out << ',' << buf;
        }
        out << ',' << static_cast<unsigned>(static_cast<std::uint8_t>(labels[i])) << '\n';
    }
}

void write_embedding_meta(std::ostream& out, const EmbeddingMeta& meta) {
    nlohmann::ordered_json j;
    j["epsilon"] = meta.epsilon;
    j["t"] = meta.t;
    j["m"] = meta.m;
    j["normalization"] = normalization_name(meta.normalization);
    j["input_records"] = meta.input_records;
    j["embedded_points"] = meta.embedded_points;
    j["stride"] = meta.stride;
    j["eigenvalues"] = meta.eigenvalues;
    j["simd_lane"] = meta.simd_lane;
    out << j.dump(2) << '\n';
}

EmbeddingFile parse_embedding_csv(std::istream& in) {
    EmbeddingFile file;
    std::string line;
    std::size_t line_no = 0;
    std::size_t coord_cols = 0;
    std::vector<std::vector<double>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line.rfind("point_index,record_index", 0) != 0)
                throw ParseError(line_no, "missing embedding header row");
            const auto commas =
                static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
            if (commas < 3) throw ParseError(line_no, "embedding has no coordinate columns");
            coord_cols = commas - 2;
            continue;
        }

        std::vector<std::string_view> fields;
        std::string_view view = line;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = view.find(',', start);
            if (comma == std::string_view::npos) {
                fields.push_back(view.substr(start));
                break;
            }
            fields.push_back(view.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != coord_cols + 3)
            throw ParseError(line_no, "expected " + std::to_string(coord_cols + 3) +
                                          " columns, got " + std::to_string(fields.size()));

        const auto parse_u64 = [&](std::string_view text, const char* what) {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || p != text.data() + text.size())
                throw ParseError(line_no, std::string("bad ") + what);
            return v;
        };
        const auto parse_f64 = [&](std::string_view text) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v))
                throw ParseError(line_no, "bad coordinate '" + std::string(text) + "'");
            return v;
        };

        parse_u64(fields[0], "point index");
        file.record_indices.push_back(parse_u64(fields[1], "record index"));
        std::vector<double> coords(coord_cols);
        for (std::size_t j = 0; j < coord_cols; ++j) coords[j] = parse_f64(fields[2 + j]);
        rows.push_back(std::move(coords));
        const auto label = parse_u64(fields.back(), "label");
        if (label > 2) throw ParseError(line_no, "label must be 0, 1 or 2");
        file.labels.push_back(static_cast<Label>(label));
    }

    file.coords = Matrix(rows.size(), coord_cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < coord_cols; ++j) file.coords(i, j) = rows[i][j];
    return file;
}

} // namespace csight
