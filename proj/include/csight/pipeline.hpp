#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "csight/cluster.hpp"
#include "csight/config.hpp"
#include "csight/flow.hpp"
#include "csight/manifold.hpp"
#include "csight/packet.hpp"

namespace csight {

inline constexpr const char* kToolName = "csight";
inline constexpr const char* kToolVersion = "0.1.0";

// Reads a capture from disk: pcap when the file starts with a pcap magic
// number (either byte order), header TSV otherwise.
std::vector<PacketRecord> load_records(const std::string& path, CaptureMeta& meta);

// One point per flow: (first_ts, src, dst, mean_len, stddev_len, count),
// each dimension normalized independently.
PointSet flow_feature_points(const std::vector<FlowStats>& flows, Normalization normalization);

struct ClusterEvaluation {
    std::vector<std::uint32_t> assignments;  // all zero when truth is single-class
    std::vector<std::uint8_t> predicted;
    std::array<TrafficClass, 2> mapping{TrafficClass::normal, TrafficClass::normal};
    ConfusionMatrix confusion;
    ClusterResult result;
    bool degenerate_truth = false;
};

// Clusters the points with restarted k-means and maps the two clusters onto
// {attack, normal} against the truth bits. When the truth holds only one
// class there is nothing to anchor the mapping, so clustering is skipped and
// that class is predicted for every point.
ClusterEvaluation cluster_and_evaluate(const PointSet& points,
                                       const std::vector<std::uint8_t>& truth,
                                       const KmeansSettings& settings);

std::string evaluation_json_string(const ClusterEvaluation& ev, ClusterSource source,
                                   const KmeansSettings& settings,
                                   std::size_t evaluated_points);

struct PipelineOutcome {
    CaptureMeta capture;
    std::size_t flow_count = 0;
    std::size_t merged_flow_count = 0;
    std::size_t embedded_points = 0;
    ConfusionMatrix confusion;
    bool degenerate_truth = false;
    std::uint64_t winning_seed = 0;
    std::vector<std::string> outputs;  // file names relative to the output dir
};

// Full run: ingest -> label -> flows -> statistics -> embedding -> clustering
// -> evaluation, writing every artifact plus a manifest into outdir (created
// if missing). A failure removes the files this run already wrote before the
// exception propagates. Without a schedule all packets stay unlabeled.
PipelineOutcome run_pipeline(const PipelineConfig& config, const std::string& input_path,
                             const std::optional<std::string>& schedule_path,
                             const std::string& outdir);

} // namespace csight
