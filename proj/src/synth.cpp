#include <algorithm>
#include <cmath>
#include <cstdio>

#include "csight/error.hpp"
#include "csight/rng.hpp"
#include "csight/synth.hpp"

namespace csight {
namespace {

// Shape constants: per-flow packet counts and burst lengths in seconds.
constexpr std::int64_t kNormalPacketsMin = 3;
constexpr std::int64_t kNormalPacketsMax = 60;
constexpr double kNormalWindowMin = 5.0;
constexpr double kNormalWindowMax = 60.0;
constexpr std::int64_t kAttackPacketsMin = 30;
constexpr std::int64_t kAttackPacketsMax = 200;
constexpr double kAttackWindowMin = 5.0;
constexpr double kAttackWindowMax = 25.0;
constexpr std::int64_t kDosPacketsMin = 100000;
constexpr std::int64_t kDosPacketsMax = 500000;
constexpr double kDosWindowMin = 20.0;
constexpr double kDosWindowMax = 40.0;
constexpr std::size_t kHostPoolSize = 48;
constexpr std::size_t kAttackerPoolSize = 12;

IpAddr host_ip(std::size_t i) {
    return ipv4_addr(192, 168, static_cast<std::uint8_t>(1 + i / 200),
                     static_cast<std::uint8_t>(1 + i % 200));
}

IpAddr attacker_ip(std::size_t i) {
    return ipv4_addr(203, 0, 113, static_cast<std::uint8_t>(1 + i));
}

std::uint16_t jittered_len(Rng& rng, std::uint16_t base, std::uint16_t jitter) {
    const std::int64_t len =
        static_cast<std::int64_t>(base) + rng.uniform_int(-static_cast<std::int64_t>(jitter),
                                                          static_cast<std::int64_t>(jitter));
    return static_cast<std::uint16_t>(std::clamp<std::int64_t>(len, 20, 65535));
}

} // namespace

SynthResult synthesize(const SynthSpec& spec) {
    if (spec.normal_len_min < 20)
        throw DataError("normal length range must start at the 20-byte header minimum");
    if (spec.normal_len_min >= spec.normal_len_max)
        throw DataError("normal length range is degenerate");
    if (spec.duration <= kNormalWindowMax + kDosWindowMax)
        throw DataError("capture duration too short for the generated bursts");

    Rng rng(spec.seed);
    SynthResult result;

    const auto emit_flow = [&](IpAddr src, IpAddr dst, double win_start, double win_len,
                               std::int64_t packets, bool constant_len) {
        const std::uint16_t base = static_cast<std::uint16_t>(
            rng.uniform_int(spec.normal_len_min, spec.normal_len_max));
        for (std::int64_t p = 0; p < packets; ++p) {
            PacketRecord r;
            r.src = src;
            r.dst = dst;
            r.ts = win_start + rng.uniform(0.0, win_len);
            r.length = constant_len
                           ? jittered_len(rng, base, spec.attack_len_jitter)
                           : static_cast<std::uint16_t>(
                                 rng.uniform_int(spec.normal_len_min, spec.normal_len_max));
            r.ttl = static_cast<std::uint8_t>(rng.uniform_int(32, 128));
            result.records.push_back(r);
        }
    };

    for (std::uint64_t f = 0; f < spec.normal_flows; ++f) {
        const std::size_t a = static_cast<std::size_t>(rng.bounded(kHostPoolSize));
        std::size_t b = static_cast<std::size_t>(rng.bounded(kHostPoolSize - 1));
        if (b >= a) ++b;
        const double win = rng.uniform(kNormalWindowMin, kNormalWindowMax);
        const double start = spec.start_ts + rng.uniform(0.0, spec.duration - win);
        emit_flow(host_ip(a), host_ip(b), start, win,
                  rng.uniform_int(kNormalPacketsMin, kNormalPacketsMax), false);
    }

    // Windows are quantized to whole microseconds so the schedule CSV, which
    // prints six decimals, reproduces them exactly.
    const auto quantize = [](double seconds) { return std::round(seconds * 1e6) / 1e6; };

    const auto emit_attack = [&](const char* tag, std::uint64_t index, double win_lo,
                                 double win_hi, std::int64_t pkt_lo, std::int64_t pkt_hi) {
        const IpAddr src = attacker_ip(static_cast<std::size_t>(rng.bounded(kAttackerPoolSize)));
        const IpAddr dst = host_ip(static_cast<std::size_t>(rng.bounded(kHostPoolSize)));
        const double win = quantize(rng.uniform(win_lo, win_hi));
        const double start = quantize(spec.start_ts + rng.uniform(0.0, spec.duration - win));
        emit_flow(src, dst, start, win, rng.uniform_int(pkt_lo, pkt_hi), true);

        AttackEvent ev;
        char name[32];
        std::snprintf(name, sizeof name, "%s-%03llu", tag,
                      static_cast<unsigned long long>(index));
        ev.name = name;
        ev.src = src;
        ev.dst = dst;
        ev.start_ts = start;
        ev.duration = win;
        result.events.push_back(ev);
    };

    for (std::uint64_t f = 0; f < spec.attack_flows; ++f)
        emit_attack("attack", f, kAttackWindowMin, kAttackWindowMax, kAttackPacketsMin,
                    kAttackPacketsMax);
    for (std::uint64_t f = 0; f < spec.dos_flows; ++f)
        emit_attack("dos", f, kDosWindowMin, kDosWindowMax, kDosPacketsMin, kDosPacketsMax);

    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const AttackEvent& a, const AttackEvent& b) {
                         return a.start_ts < b.start_ts;
                     });
    return result;
}

void write_schedule_csv(std::ostream& out, const std::vector<AttackEvent>& events) {
    char buf[64];
    for (const AttackEvent& ev : events) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", ev.start_ts, ev.duration);
        out << ev.name << ',' << format_ip(ev.src) << ',' << format_ip(ev.dst) << ',' << buf
            << '\n';
    }
}

} // namespace csight
