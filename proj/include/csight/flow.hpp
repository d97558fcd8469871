#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "csight/packet.hpp"

namespace csight {

enum class FlowLabel : std::uint8_t {
    normal = 0,
    attack = 1,
};

// All packets from src to dst whose timestamps fall in the same slice:
// slice = floor((ts - epoch0) / slice_duration).
struct FlowKey {
    IpAddr src = 0;
    IpAddr dst = 0;
    std::int64_t slice = 0;

    bool operator==(const FlowKey&) const = default;
};

struct FlowStats {
    IpAddr src = 0;
    IpAddr dst = 0;
    std::int64_t slice = 0;
    std::uint64_t count = 0;
    double mean_len = 0.0;
    double stddev_len = 0.0;       // population standard deviation
    std::uint16_t min_len = 0;
    std::uint16_t max_len = 0;
    double first_ts = 0.0;
    double last_ts = 0.0;
    double attack_fraction = 0.0;  // fraction of packets with label 1
    FlowLabel label = FlowLabel::normal;

    bool operator==(const FlowStats&) const = default;
};

// Groups records into per-direction flows. epoch0 defaults to the first
// record timestamp truncated to whole seconds. Output is sorted by
// (slice, src, dst), so equal record multisets produce identical output
// regardless of input order. Empty input yields an empty vector.
std::vector<FlowStats> aggregate_flows(const std::vector<PacketRecord>& records,
                                       double slice_duration = 60.0,
                                       std::optional<double> epoch0 = std::nullopt);

// Collapses each pair of opposite-direction flows {A->B, B->A} in the same
// slice into one flow keyed on the unordered pair (src <= dst in the
// result). Moments, extrema and the attack fraction are recomputed over the
// union of member packets.
std::vector<FlowStats> flow_direction_merge(const std::vector<FlowStats>& flows);

void write_flow_csv(std::ostream& out, const std::vector<FlowStats>& flows);

const char* flow_label_name(FlowLabel label);

} // namespace csight
