#pragma once

#include <cstdint>
#include <istream>
#include <string>

#include "csight/manifold.hpp"

namespace csight {

enum class ClusterSource {
    features,   // one point per packet in raw feature space
    embedding,  // diffusion coordinates of the (possibly subsampled) packets
    flows,      // one point per flow
};

const char* cluster_source_name(ClusterSource s);
std::optional<ClusterSource> parse_cluster_source(const std::string& name);

struct CoiSettings {
    double bin_size_z = 3600.0;
    double period_y = 0.0;  // 0: full capture span
    double threshold = 0.5;
};

struct KernelSettings {
    double epsilon = 0.0;   // 0: median heuristic
    unsigned t = 1;
    std::size_t m = 3;
    Normalization normalization = Normalization::zscore;
    std::size_t cap = 1500;
};

struct KmeansSettings {
    std::size_t k = 2;
    std::uint64_t seed = 1;
    std::uint32_t restarts = 10;
    std::uint32_t max_iter = 300;
    ClusterSource source = ClusterSource::features;
};

struct PipelineConfig {
    double slice_duration = 60.0;
    double label_slack = 60.0;
    double stddev_threshold = 50.0;
    std::uint64_t min_count = 3;
    double hist_bin_width = 50.0;
    bool use_ttl = false;
    bool reply_as_attack = false;
    bool write_svg = true;
    CoiSettings coi;
    KernelSettings kernel;
    KmeansSettings kmeans;
};

// Reads a JSON object whose (all optional) fields override the defaults:
// top-level scalars plus nested "coi", "kernel" and "kmeans" objects using
// the field names above. Unknown keys raise DataError, as do out-of-range
// values.
PipelineConfig load_config_json(std::istream& in);

void validate_config(const PipelineConfig& config);

// Effective configuration as a JSON document (used by run manifests).
std::string config_json_string(const PipelineConfig& config);

} // namespace csight
