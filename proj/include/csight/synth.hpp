#pragma once

#include <cstdint>
#include <vector>

#include "csight/packet.hpp"
#include "csight/schedule.hpp"

namespace csight {

// Synthetic capture generator. Normal flows draw every packet length
// independently from [normal_len_min, normal_len_max]; attack and DoS flows
// pick one base length per flow and jitter each packet by at most
// attack_len_jitter bytes, so their per-flow length spread never exceeds the
// jitter. DoS flows carry 1e5..5e5 packets. The returned schedule rows cover
// exactly the generated attack and DoS windows. Fully deterministic for a
// given spec.
struct SynthSpec {
    std::uint64_t normal_flows = 500;
    std::uint64_t attack_flows = 100;
    std::uint64_t dos_flows = 2;
    std::uint16_t normal_len_min = 40;
    std::uint16_t normal_len_max = 1500;
    std::uint16_t attack_len_jitter = 10;
    std::uint64_t seed = 1;
    double start_ts = 1000000000.0;
    double duration = 3600.0;
};

struct SynthResult {
    std::vector<PacketRecord> records;  // sorted by timestamp, labels all 0
    std::vector<AttackEvent> events;
};

SynthResult synthesize(const SynthSpec& spec);

void write_schedule_csv(std::ostream& out, const std::vector<AttackEvent>& events);

} // namespace csight
