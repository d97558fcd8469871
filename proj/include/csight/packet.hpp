#pragma once

#include <cstdint>

#include "csight/ip.hpp"

namespace csight {

// Per-packet ground truth. Packets between a scheduled attacker/victim pair
// are label 1; packets flowing the reverse direction during the same window
// (victim responses) are label 2.
enum class Label : std::uint8_t {
    normal = 0,
    attack = 1,
    attack_reply = 2,
};

// One captured packet reduced to the IP header fields used everywhere
// downstream. No payload bytes and no ports are ever retained.
struct PacketRecord {
    IpAddr src = 0;
    IpAddr dst = 0;
    double ts = 0.0;             // epoch seconds, microsecond precision
    std::uint16_t length = 0;    // IP total length in bytes
    std::uint8_t ttl = 0;        // hop limit for IPv6
    Label label = Label::normal;

    bool operator==(const PacketRecord&) const = default;
};

struct CaptureMeta {
    std::uint64_t record_count = 0;
    double first_ts = 0.0;       // min/max over emitted records
    double last_ts = 0.0;
    std::uint64_t skipped_frames = 0;
};

} // namespace csight
