#pragma once

#include <functional>
#include <istream>
#include <vector>

#include "csight/packet.hpp"

namespace csight {

// Streaming classic-pcap reader. Accepts files written in either byte order
// (magic 0xa1b2c3d4 or its swap) with Ethernet or raw-IP link layers, and
// extracts one PacketRecord per IPv4/IPv6 frame reading only the fixed IP
// header bytes. Frames that are non-IP, truncated below the fixed header, or
// otherwise malformed are counted in meta.skipped_frames and dropped.
// Throws ParseError on an unusable global header or unsupported link type.
void parse_pcap_stream(std::istream& in,
                       const std::function<void(const PacketRecord&)>& sink,
                       CaptureMeta& meta);

struct PcapResult {
    std::vector<PacketRecord> records;
    CaptureMeta meta;
};

PcapResult parse_pcap(std::istream& in);

} // namespace csight
