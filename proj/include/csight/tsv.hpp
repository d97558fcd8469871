#pragma once

#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "csight/packet.hpp"

namespace csight {

// Tab-separated header records: src, dst, length, ttl, timestamp and an
// optional trailing label column. Addresses are dotted-quad IPv4 or colon-hex
// IPv6, timestamps decimal epoch seconds. Blank lines are ignored; anything
// else malformed raises ParseError with its 1-based line number.
void parse_header_tsv_stream(std::istream& in,
                             const std::function<void(const PacketRecord&)>& sink);

std::vector<PacketRecord> parse_header_tsv(std::istream& in);

// Writes timestamps with microsecond precision. The label column is emitted
// only when some record carries a nonzero label, so parse(write(r)) == r.
void write_header_tsv(std::ostream& out, const std::vector<PacketRecord>& records);

CaptureMeta meta_of(const std::vector<PacketRecord>& records);

} // namespace csight
