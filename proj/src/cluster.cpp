#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csight/cluster.hpp"
#include "csight/error.hpp"
#include "csight/rng.hpp"

namespace csight {
namespace {

std::size_t distinct_points(const PointSet& points) {
    const std::size_t n = points.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto less = [&](std::size_t a, std::size_t b) {
        for (std::size_t d = 0; d < points.dims(); ++d) {
            if (points.at(a, d) != points.at(b, d)) return points.at(a, d) < points.at(b, d);
        }
        return false;
    };
    std::sort(idx.begin(), idx.end(), less);
    std::size_t distinct = n == 0 ? 0 : 1;
    for (std::size_t i = 1; i < n; ++i)
        if (less(idx[i - 1], idx[i])) ++distinct;
    return distinct;
}

double sqdist_to_centroid(const PointSet& points, std::size_t i, const double* cent) {
    double acc = 0.0;
    for (std::size_t d = 0; d < points.dims(); ++d) {
        const double diff = points.at(i, d) - cent[d];
        acc += diff * diff;
    }
    return acc;
}

// Reseeds every empty cluster to the in-data point farthest from that
// cluster's current centroid (ties toward the lower point index). Each point
// is used at most once per repair pass.
void repair_empty_clusters(const PointSet& points, const std::vector<std::uint64_t>& counts,
                           Matrix& centroids, std::vector<bool>& used) {
    const std::size_t n = points.size();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] != 0) continue;
        double best = -1.0;
        std::size_t best_idx = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            const double d2 = sqdist_to_centroid(points, i, centroids.row(c));
            if (d2 > best) {
                best = d2;
                best_idx = i;
            }
        }
        if (best_idx == n) throw DataError("cannot repair empty cluster: no points left");
        used[best_idx] = true;
        for (std::size_t d = 0; d < points.dims(); ++d)
            centroids(c, d) = points.at(best_idx, d);
    }
}

} // namespace

ClusterResult kmeans(const PointSet& points, std::size_t k, std::uint64_t seed,
                     std::uint32_t max_iter, const simd::Kernels& kernels) {
    const std::size_t n = points.size();
    const std::size_t dims = points.dims();
    if (n == 0) throw DataError("k-means needs at least one point");
    if (k == 0) throw DataError("k-means needs at least one cluster");
    if (max_iter == 0) throw DataError("k-means needs at least one iteration");
    if (distinct_points(points) < k)
        throw DataError("k-means with k=" + std::to_string(k) +
                        " needs at least that many distinct points");

    ClusterResult result;
    result.seed = seed;
    result.centroids = Matrix(k, dims);

    Rng rng(seed);
    const auto init = rng.sample_indices(n, k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < dims; ++d)
            result.centroids(c, d) = points.at(init[c], d);

    const auto dim_ptrs = points.dim_ptrs();
    std::vector<std::uint32_t> assign(n), prev_assign;
    std::vector<double> dist2(n);
    std::vector<std::uint64_t> counts(k);
    double prev_inertia = std::numeric_limits<double>::infinity();

    for (std::uint32_t iter = 1; iter <= max_iter; ++iter) {
        kernels.assign_nearest(dim_ptrs.data(), dims, n, result.centroids.data(), k,
                               assign.data(), dist2.data());

        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += dist2[i];
        if (inertia > prev_inertia + 1e-12 * std::max(1.0, prev_inertia))
            throw std::logic_error("k-means inertia increased between iterations");
        prev_inertia = inertia;
        result.inertia = inertia;
        result.iterations = iter;

        if (!prev_assign.empty() && assign == prev_assign) break;
        prev_assign = assign;
        if (iter == max_iter) break;

        // Update step: each centroid moves to the mean of its members.
        Matrix sums(k, dims);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = assign[i];
            ++counts[c];
            for (std::size_t d = 0; d < dims; ++d) sums(c, d) += points.at(i, d);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue; // keep centroid; repaired below
            for (std::size_t d = 0; d < dims; ++d)
                result.centroids(c, d) = sums(c, d) / static_cast<double>(counts[c]);
        }
        if (std::find(counts.begin(), counts.end(), std::uint64_t{0}) != counts.end()) {
            std::vector<bool> used(n, false);
            repair_empty_clusters(points, counts, result.centroids, used);
        }
    }

    result.assignments = std::move(assign);

    std::vector<std::uint64_t> final_counts(k, 0);
    for (const auto c : result.assignments) ++final_counts[c];
    if (std::find(final_counts.begin(), final_counts.end(), std::uint64_t{0}) !=
        final_counts.end())
        throw DataError("k-means ended with an empty cluster; raise max_iter");

    return result;
}

ClusterResult kmeans_best(const PointSet& points, std::size_t k, std::uint64_t base_seed,
                          std::uint32_t restarts, std::uint32_t max_iter,
                          const simd::Kernels& kernels) {
    if (restarts == 0) throw DataError("k-means needs at least one restart");
    ClusterResult best;
    bool have = false;
    for (std::uint32_t r = 0; r < restarts; ++r) {
        ClusterResult run = kmeans(points, k, base_seed + r, max_iter, kernels);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }
    return best;
}

std::array<TrafficClass, 2> map_clusters_to_classes(
    const std::vector<std::uint32_t>& assignments,
    const std::vector<std::uint8_t>& truth_attack) {
    if (assignments.size() != truth_attack.size())
        throw DataError("assignment and truth vectors must have equal length");

    std::uint64_t size[2] = {0, 0};
    std::uint64_t attack[2] = {0, 0};
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const std::uint32_t c = assignments[i];
        if (c > 1) throw DataError("cluster-to-class mapping expects exactly two clusters");
        ++size[c];
        attack[c] += truth_attack[i] ? 1 : 0;
    }

    // agreement if cluster 0 is attack vs. cluster 1 is attack
    const std::uint64_t correct0 = attack[0] + (size[1] - attack[1]);
    const std::uint64_t correct1 = attack[1] + (size[0] - attack[0]);

    bool zero_is_attack;
    if (correct0 != correct1) {
        zero_is_attack = correct0 > correct1;
    } else {
        zero_is_attack = size[0] <= size[1]; // smaller cluster becomes attack
    }
    return zero_is_attack
               ? std::array{TrafficClass::attack, TrafficClass::normal}
               : std::array{TrafficClass::normal, TrafficClass::attack};
}

ConfusionMatrix evaluate(const std::vector<std::uint8_t>& predicted_attack,
                         const std::vector<std::uint8_t>& truth_attack) {
    if (predicted_attack.size() != truth_attack.size())
        throw DataError("prediction and truth vectors must have equal length");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted_attack.size(); ++i) {
        const bool pred = predicted_attack[i] != 0;
        const bool truth = truth_attack[i] != 0;
        if (pred && truth) ++cm.tp;
        else if (pred && !truth) ++cm.fp;
        else if (!pred && !truth) ++cm.tn;
        else ++cm.fn;
    }
    return cm;
}

std::vector<std::uint8_t> binarize_labels(const std::vector<PacketRecord>& records,
                                          bool reply_as_attack) {
    std::vector<std::uint8_t> truth(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Label l = records[i].label;
        truth[i] = (l == Label::attack || (reply_as_attack && l == Label::attack_reply)) ? 1 : 0;
    }
    return truth;
}

const char* traffic_class_name(TrafficClass c) {
    return c == TrafficClass::attack ? "attack" : "normal";
}

void write_assignment_csv(std::ostream& out, const std::vector<std::size_t>& record_indices,
                          const std::vector<std::uint32_t>& assignments,
                          const std::vector<std::uint8_t>& predicted_attack,
                          const std::vector<std::uint8_t>& truth_attack) {
    const std::size_t n = assignments.size();
    if (record_indices.size() != n || predicted_attack.size() != n || truth_attack.size() != n)
        throw DataError("assignment CSV inputs must align");
    out << "record_index,cluster,predicted,truth\n";
    for (std::size_t i = 0; i < n; ++i) {
        out << record_indices[i] << ',' << assignments[i] << ','
            << (predicted_attack[i] ? "attack" : "normal") << ','
            << (truth_attack[i] ? "attack" : "normal") << '\n';
    }
}

} // namespace csight
