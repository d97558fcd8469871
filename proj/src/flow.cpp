#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "csight/error.hpp"
#include "csight/flow.hpp"

namespace csight {
namespace {

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const {
        const IpAddrHash h;
        std::size_t seed = h(k.src);
        seed ^= h(k.dst) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
        seed ^= static_cast<std::size_t>(k.slice) + 0x9e3779b97f4a7c15ULL + (seed << 6) +
                (seed >> 2);
        return seed;
    }
};

struct Acc {
    std::uint64_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;
    std::uint16_t min_len = 0;
    std::uint16_t max_len = 0;
    double first_ts = 0.0;
    double last_ts = 0.0;
    std::uint64_t attack_packets = 0;

    void add(double len, double ts, bool attack) {
        if (count == 0) {
            min_len = max_len = static_cast<std::uint16_t>(len);
            first_ts = last_ts = ts;
        } else {
            min_len = std::min(min_len, static_cast<std::uint16_t>(len));
            max_len = std::max(max_len, static_cast<std::uint16_t>(len));
            first_ts = std::min(first_ts, ts);
            last_ts = std::max(last_ts, ts);
        }
        ++count;
        sum += len;
        sumsq += len * len;
        attack_packets += attack ? 1 : 0;
    }

    void merge(const Acc& o) {
        if (o.count == 0) return;
        if (count == 0) {
            *this = o;
            return;
        }
        count += o.count;
        sum += o.sum;
        sumsq += o.sumsq;
        min_len = std::min(min_len, o.min_len);
        max_len = std::max(max_len, o.max_len);
        first_ts = std::min(first_ts, o.first_ts);
        last_ts = std::max(last_ts, o.last_ts);
        attack_packets += o.attack_packets;
    }
};

FlowStats finalize(const FlowKey& key, const Acc& acc) {
    FlowStats f;
    f.src = key.src;
    f.dst = key.dst;
    f.slice = key.slice;
    f.count = acc.count;
    const double n = static_cast<double>(acc.count);
    f.mean_len = acc.sum / n;
    const double var = std::max(0.0, acc.sumsq / n - f.mean_len * f.mean_len);
    f.stddev_len = std::sqrt(var);
    f.min_len = acc.min_len;
    f.max_len = acc.max_len;
    f.first_ts = acc.first_ts;
    f.last_ts = acc.last_ts;
    f.attack_fraction = static_cast<double>(acc.attack_packets) / n;
    f.label = acc.attack_packets > 0 ? FlowLabel::attack : FlowLabel::normal;
    return f;
}

Acc acc_of(const FlowStats& f) {
    Acc acc;
    acc.count = f.count;
    const double n = static_cast<double>(f.count);
    acc.sum = f.mean_len * n;
    acc.sumsq = (f.stddev_len * f.stddev_len + f.mean_len * f.mean_len) * n;
    acc.min_len = f.min_len;
    acc.max_len = f.max_len;
    acc.first_ts = f.first_ts;
    acc.last_ts = f.last_ts;
    acc.attack_packets =
        static_cast<std::uint64_t>(std::llround(f.attack_fraction * n));
    return acc;
}

std::vector<FlowStats> sorted_flows(
    std::unordered_map<FlowKey, Acc, FlowKeyHash>& groups) {
    std::vector<FlowStats> flows;
    flows.reserve(groups.size());
    for (const auto& [key, acc] : groups) flows.push_back(finalize(key, acc));
    std::sort(flows.begin(), flows.end(), [](const FlowStats& a, const FlowStats& b) {
        if (a.slice != b.slice) return a.slice < b.slice;
        if (a.src != b.src) return a.src < b.src;
        return a.dst < b.dst;
    });
    return flows;
}

} // namespace

std::vector<FlowStats> aggregate_flows(const std::vector<PacketRecord>& records,
                                       double slice_duration,
                                       std::optional<double> epoch0) {
    if (slice_duration <= 0.0) throw DataError("slice duration must be positive");
    if (records.empty()) return {};

    double origin;
    if (epoch0) {
        origin = *epoch0;
    } else {
        double first = records.front().ts;
        for (const PacketRecord& r : records) first = std::min(first, r.ts);
        origin = std::floor(first);
    }

    std::unordered_map<FlowKey, Acc, FlowKeyHash> groups;
    for (const PacketRecord& r : records) {
        const auto slice =
            static_cast<std::int64_t>(std::floor((r.ts - origin) / slice_duration));
        groups[{r.src, r.dst, slice}].add(static_cast<double>(r.length), r.ts,
                                          r.label == Label::attack);
    }
    return sorted_flows(groups);
}

std::vector<FlowStats> flow_direction_merge(const std::vector<FlowStats>& flows) {
    std::unordered_map<FlowKey, Acc, FlowKeyHash> groups;
    for (const FlowStats& f : flows) {
        const FlowKey key{std::min(f.src, f.dst), std::max(f.src, f.dst), f.slice};
        groups[key].merge(acc_of(f));
    }
    return sorted_flows(groups);
}

const char* flow_label_name(FlowLabel label) {
    return label == FlowLabel::attack ? "attack" : "normal";
}

void write_flow_csv(std::ostream& out, const std::vector<FlowStats>& flows) {
    out << "src,dst,slice,count,mean_len,stddev_len,min_len,max_len,first_ts,last_ts,"
           "attack_fraction,label\n";
    char buf[160];
    for (const FlowStats& f : flows) {
        std::snprintf(buf, sizeof buf, "%lld,%llu,%.12g,%.12g,%u,%u,%.6f,%.6f,%.12g",
                      static_cast<long long>(f.slice),
                      static_cast<unsigned long long>(f.count), f.mean_len, f.stddev_len,
                      f.min_len, f.max_len, f.first_ts, f.last_ts, f.attack_fraction);
        out << format_ip(f.src) << ',' << format_ip(f.dst) << ',' << buf << ','
            << flow_label_name(f.label) << '\n';
    }
}

} // namespace csight
