#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>
#include <utility>

#include "csight/error.hpp"
#include "csight/schedule.hpp"

namespace csight {
namespace {

struct PairKey {
    IpAddr a, b;
    bool operator==(const PairKey&) const = default;
};

struct PairKeyHash {
    std::size_t operator()(const PairKey& k) const {
        const IpAddrHash h;
        std::size_t seed = h(k.a);
        seed ^= h(k.b) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
        return seed;
    }
};

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double_field(std::string_view text, std::size_t line_no, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v))
        throw ParseError(line_no, std::string("bad ") + what + " '" + std::string(text) + "'");
    return v;
}

} // namespace

std::vector<AttackEvent> parse_attack_schedule(std::istream& in) {
    std::vector<AttackEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split_commas(line);
        if (fields.size() != 5)
            throw ParseError(line_no, "expected 5 comma-separated fields, got " +
                                          std::to_string(fields.size()));

        AttackEvent ev;
        ev.name = std::string(fields[0]);
        const auto src = parse_ip(fields[1]);
        if (!src) throw ParseError(line_no, "bad source address '" + std::string(fields[1]) + "'");
        const auto dst = parse_ip(fields[2]);
        if (!dst)
            throw ParseError(line_no, "bad destination address '" + std::string(fields[2]) + "'");
        ev.src = *src;
        ev.dst = *dst;
        ev.start_ts = parse_double_field(fields[3], line_no, "start");
        ev.duration = parse_double_field(fields[4], line_no, "duration");
        if (ev.duration < 0.0)
            throw ParseError(line_no, "negative duration " + std::string(fields[4]));
        events.push_back(std::move(ev));
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const AttackEvent& a, const AttackEvent& b) {
                         return a.start_ts < b.start_ts;
                     });
    return events;
}

void label_packets(std::vector<PacketRecord>& records,
                   const std::vector<AttackEvent>& events, double slack_seconds) {
    if (slack_seconds < 0.0) throw DataError("labeling slack must be non-negative");

    using Windows = std::vector<std::pair<double, double>>;
    std::unordered_map<PairKey, Windows, PairKeyHash> forward, reverse;
    for (const AttackEvent& ev : events) {
        const std::pair<double, double> window{ev.start_ts - slack_seconds,
                                               ev.end_ts() + slack_seconds};
        forward[{ev.src, ev.dst}].push_back(window);
        reverse[{ev.dst, ev.src}].push_back(window);
    }

    const auto in_window = [](const Windows* w, double ts) {
        if (!w) return false;
        for (const auto& [lo, hi] : *w)
            if (ts >= lo && ts <= hi) return true;
        return false;
    };
    const auto find = [](const auto& map, const PairKey& key) -> const Windows* {
        const auto it = map.find(key);
        return it == map.end() ? nullptr : &it->second;
    };

    for (PacketRecord& r : records) {
        const PairKey key{r.src, r.dst};
        if (in_window(find(forward, key), r.ts)) {
            r.label = Label::attack;
        } else if (in_window(find(reverse, key), r.ts)) {
            r.label = Label::attack_reply;
        } else {
            r.label = Label::normal;
        }
    }
}

} // namespace csight
