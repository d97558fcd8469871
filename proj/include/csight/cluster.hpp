#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "csight/matrix.hpp"
#include "csight/packet.hpp"
#include "csight/points.hpp"
#include "csight/simd/dispatch.hpp"

namespace csight {

enum class TrafficClass : std::uint8_t {
    normal = 0,
    attack = 1,
};

const char* traffic_class_name(TrafficClass c);

struct ClusterResult {
    std::vector<std::uint32_t> assignments;
    Matrix centroids;            // k x dims, row-major
    double inertia = 0.0;        // sum of squared distances to assigned centroids
    std::uint32_t iterations = 0;
    std::uint64_t seed = 0;
};

// Lloyd's algorithm. Initial centroids are k points drawn uniformly without
// replacement (error if the data holds fewer than k distinct points);
// assignment ties break toward the lower cluster index; a cluster left empty
// is reseeded to the point farthest from its centroid. Iteration stops when
// assignments stop changing or after max_iter rounds. Inertia is checked to
// be non-increasing across iterations and the run aborts if that ever fails.
// Fixed seed, fixed input => identical output, on every kernel lane.
ClusterResult kmeans(const PointSet& points, std::size_t k, std::uint64_t seed,
                     std::uint32_t max_iter = 300,
                     const simd::Kernels& kernels = simd::kernels());

// Runs kmeans with seeds base_seed .. base_seed+restarts-1 and returns the
// lowest-inertia result (ties keep the earliest seed), which carries the
// winning seed.
ClusterResult kmeans_best(const PointSet& points, std::size_t k, std::uint64_t base_seed,
                          std::uint32_t restarts = 10, std::uint32_t max_iter = 300,
                          const simd::Kernels& kernels = simd::kernels());

// For k = 2: picks the cluster -> {attack, normal} bijection with the higher
// agreement against the truth. Ties assign the smaller cluster to attack
// (cluster 0 when sizes also tie). Returned array maps cluster index to
// class.
std::array<TrafficClass, 2> map_clusters_to_classes(
    const std::vector<std::uint32_t>& assignments, const std::vector<std::uint8_t>& truth_attack);

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    // Shares of the total population (the four rates sum to 1).
    double tp_rate() const { return rate(tp); }
    double fp_rate() const { return rate(fp); }
    double tn_rate() const { return rate(tn); }
    double fn_rate() const { return rate(fn); }
    double accuracy() const { return rate(tp + tn); }

private:
    double rate(std::uint64_t part) const {
        return total() == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(total());
    }
};

ConfusionMatrix evaluate(const std::vector<std::uint8_t>& predicted_attack,
                         const std::vector<std::uint8_t>& truth_attack);

// Truth bit per record: label 1 is attack; label 2 joins it only when
// reply_as_attack is set.
std::vector<std::uint8_t> binarize_labels(const std::vector<PacketRecord>& records,
                                          bool reply_as_attack = false);

void write_assignment_csv(std::ostream& out, const std::vector<std::size_t>& record_indices,
                          const std::vector<std::uint32_t>& assignments,
                          const std::vector<std::uint8_t>& predicted_attack,
                          const std::vector<std::uint8_t>& truth_attack);

} // namespace csight
