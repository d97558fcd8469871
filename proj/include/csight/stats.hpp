#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "csight/flow.hpp"
#include "csight/packet.hpp"

namespace csight {

// Counts per bin, plus running cumulative fractions of the class total.
// Uniform histograms carry their bin width; log-scale histograms (packet
// counts) set bin_width to 0 and use power-of-two lower edges.
struct Histogram {
    FlowLabel class_tag = FlowLabel::normal;
    double bin_width = 0.0;
    std::vector<double> lower_edges;
    std::vector<std::uint64_t> counts;
    std::vector<double> cumulative;
    std::uint64_t total = 0;
};

struct HistogramPair {
    Histogram normal;
    Histogram attack;
};

// Distribution of per-flow packet length standard deviation, split by flow
// label. Both histograms share the same edges (multiples of bin_width from
// zero). Flows with count < min_count are excluded.
HistogramPair stddev_histogram(const std::vector<FlowStats>& flows, double bin_width = 50.0,
                               std::uint64_t min_count = 1);

// Distribution of packets per flow over power-of-two bins [2^k, 2^(k+1)).
HistogramPair packets_per_flow_distribution(const std::vector<FlowStats>& flows);

// Threshold detector: a flow is attack traffic iff its length spread is at
// or below threshold_bytes and it has at least min_count packets.
FlowLabel classify_by_stddev(const FlowStats& flow, double threshold_bytes = 50.0,
                             std::uint64_t min_count = 3);

// How many distinct slices each ordered (src, dst) pair appears in. A pair
// counts as attack once any of its flows is attack-labeled.
struct FlowOccurrence {
    IpAddr src = 0;
    IpAddr dst = 0;
    std::uint64_t slice_count = 0;
    bool attack_pair = false;
};

std::vector<FlowOccurrence> flow_occurrence_frequency(const std::vector<FlowStats>& flows);

// Community-of-interest scoring: divide the first period_y seconds of the
// capture into floor(period_y / bin_size_z) bins of bin_size_z seconds and
// score each unordered host pair by the fraction of bins in which the two
// hosts exchange at least one packet (either direction).
struct CoiConfig {
    double bin_size_z = 3600.0;
    double period_y = 0.0;      // 0 means the full capture span
    double threshold = 0.5;     // membership iff fraction >= threshold
};

struct CoiScore {
    IpAddr a = 0;               // a <= b
    IpAddr b = 0;
    double fraction = 0.0;
    bool member = false;
};

struct CoiResult {
    std::vector<CoiScore> scores;  // sorted by (a, b)
    double window_start = 0.0;
    std::size_t bin_count = 0;
    bool truncated = false;        // capture extends past the scored window
};

CoiResult coi_scores(const std::vector<PacketRecord>& records, const CoiConfig& config);

void write_histogram_csv(std::ostream& out, const HistogramPair& pair);
void write_occurrence_csv(std::ostream& out, const std::vector<FlowOccurrence>& occ);
void write_coi_csv(std::ostream& out, const CoiResult& result);

// Grouped bar chart of both classes; self-contained SVG document.
std::string histogram_svg(const HistogramPair& pair, const std::string& title,
                          const std::string& x_label);

} // namespace csight
