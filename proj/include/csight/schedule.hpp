#pragma once

#include <istream>
#include <string>
#include <vector>

#include "csight/packet.hpp"

namespace csight {

// One scheduled attack: packets from src to dst between start_ts and
// start_ts + duration (widened by the labeling slack) are attack traffic.
struct AttackEvent {
    std::string name;
    IpAddr src = 0;
    IpAddr dst = 0;
    double start_ts = 0.0;
    double duration = 0.0;

    double end_ts() const { return start_ts + duration; }
};

// CSV rows: name,src,dst,start,duration. Rows are returned sorted by
// start_ts (ties keep file order). Negative durations raise ParseError with
// the offending line number.
std::vector<AttackEvent> parse_attack_schedule(std::istream& in);

// Stamps labels in place. A packet whose (src, dst) matches an event and
// whose timestamp lies in [start - slack, end + slack] becomes label 1; a
// packet matching the reversed pair in the same window becomes label 2.
// Label 1 wins when both apply. Everything else stays label 0.
void label_packets(std::vector<PacketRecord>& records,
                   const std::vector<AttackEvent>& events, double slack_seconds = 60.0);

} // namespace csight
