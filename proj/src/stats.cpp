#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "csight/error.hpp"
#include "csight/stats.hpp"

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

void finalize_histogram(Histogram& h) {
    h.total = 0;
    for (const auto c : h.counts) h.total += c;
    h.cumulative.assign(h.counts.size(), 0.0);
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        running += h.counts[i];
        h.cumulative[i] =
            h.total == 0 ? 0.0 : static_cast<double>(running) / static_cast<double>(h.total);
    }
}

} // namespace

HistogramPair stddev_histogram(const std::vector<FlowStats>& flows, double bin_width,
                               std::uint64_t min_count) {
    if (bin_width <= 0.0) throw DataError("histogram bin width must be positive");

    double max_stddev = 0.0;
    bool any = false;
    for (const FlowStats& f : flows) {
        if (f.count < min_count) continue;
        max_stddev = std::max(max_stddev, f.stddev_len);
        any = true;
    }

    HistogramPair pair;
    pair.normal.class_tag = FlowLabel::normal;
    pair.attack.class_tag = FlowLabel::attack;
    pair.normal.bin_width = pair.attack.bin_width = bin_width;
    if (!any) return pair;

    const std::size_t nbins = static_cast<std::size_t>(std::floor(max_stddev / bin_width)) + 1;
    for (Histogram* h : {&pair.normal, &pair.attack}) {
        h->lower_edges.resize(nbins);
        for (std::size_t i = 0; i < nbins; ++i)
            h->lower_edges[i] = static_cast<double>(i) * bin_width;
        h->counts.assign(nbins, 0);
    }

    for (const FlowStats& f : flows) {
        if (f.count < min_count) continue;
        auto idx = static_cast<std::size_t>(std::floor(f.stddev_len / bin_width));
        idx = std::min(idx, nbins - 1);
        Histogram& h = f.label == FlowLabel::attack ? pair.attack : pair.normal;
        ++h.counts[idx];
    }
    finalize_histogram(pair.normal);
    finalize_histogram(pair.attack);
    return pair;
}

HistogramPair packets_per_flow_distribution(const std::vector<FlowStats>& flows) {
    HistogramPair pair;
    pair.normal.class_tag = FlowLabel::normal;
    pair.attack.class_tag = FlowLabel::attack;
    if (flows.empty()) return pair;

    unsigned max_bin = 0;
    for (const FlowStats& f : flows)
        max_bin = std::max(max_bin, static_cast<unsigned>(std::bit_width(f.count) - 1));

    const std::size_t nbins = max_bin + 1;
    for (Histogram* h : {&pair.normal, &pair.attack}) {
        h->lower_edges.resize(nbins);
        for (std::size_t i = 0; i < nbins; ++i)
            h->lower_edges[i] = static_cast<double>(std::uint64_t{1} << i);
        h->counts.assign(nbins, 0);
    }

    for (const FlowStats& f : flows) {
        const unsigned idx = static_cast<unsigned>(std::bit_width(f.count) - 1);
        Histogram& h = f.label == FlowLabel::attack ? pair.attack : pair.normal;
        ++h.counts[idx];
    }
    finalize_histogram(pair.normal);
    finalize_histogram(pair.attack);
    return pair;
}

FlowLabel classify_by_stddev(const FlowStats& flow, double threshold_bytes,
                             std::uint64_t min_count) {
    if (threshold_bytes < 0.0) throw DataError("stddev threshold must be non-negative");
    return (flow.stddev_len <= threshold_bytes && flow.count >= min_count)
               ? FlowLabel::attack
               : FlowLabel::normal;
}

std::vector<FlowOccurrence> flow_occurrence_frequency(const std::vector<FlowStats>& flows) {
    struct Entry {
        std::uint64_t slices = 0;
        bool attack = false;
    };
    std::map<std::pair<IpAddr, IpAddr>, Entry> pairs;
    for (const FlowStats& f : flows) {
        Entry& e = pairs[{f.src, f.dst}];
        ++e.slices; // flows are unique per (src, dst, slice)
        e.attack |= f.label == FlowLabel::attack;
    }

    std::vector<FlowOccurrence> out;
    out.reserve(pairs.size());
    for (const auto& [key, e] : pairs)
        out.push_back({key.first, key.second, e.slices, e.attack});
    return out;
}

CoiResult coi_scores(const std::vector<PacketRecord>& records, const CoiConfig& config) {
    if (records.empty()) throw DataError("community scoring needs at least one record");
    if (config.bin_size_z <= 0.0) throw DataError("bin size Z must be positive");
    if (config.threshold < 0.0 || config.threshold > 1.0)
        throw DataError("membership threshold must lie in [0, 1]");

    double t0 = records.front().ts, t_end = records.front().ts;
    for (const PacketRecord& r : records) {
        t0 = std::min(t0, r.ts);
        t_end = std::max(t_end, r.ts);
    }

    const double period_y = config.period_y > 0.0 ? config.period_y
                                                  : std::max(t_end - t0, config.bin_size_z);
    if (config.bin_size_z > period_y)
        throw DataError("bin size Z must not exceed the scoring period Y");

    CoiResult result;
    result.window_start = t0;
    result.bin_count = static_cast<std::size_t>(std::floor(period_y / config.bin_size_z));

    const double window_end =
        t0 + static_cast<double>(result.bin_count) * config.bin_size_z;
    result.truncated = t_end >= window_end;

    std::unordered_map<PairKey, std::unordered_set<std::uint32_t>, PairKeyHash> bins;
    for (const PacketRecord& r : records) {
        if (r.ts >= window_end) continue;
        auto idx = static_cast<std::size_t>(std::floor((r.ts - t0) / config.bin_size_z));
        idx = std::min(idx, result.bin_count - 1);
        const PairKey key{std::min(r.src, r.dst), std::max(r.src, r.dst)};
        bins[key].insert(static_cast<std::uint32_t>(idx));
    }

    result.scores.reserve(bins.size());
    for (const auto& [key, hit] : bins) {
        CoiScore s;
        s.a = key.a;
        s.b = key.b;
        s.fraction =
            static_cast<double>(hit.size()) / static_cast<double>(result.bin_count);
        s.member = s.fraction >= config.threshold;
        result.scores.push_back(s);
    }
    std::sort(result.scores.begin(), result.scores.end(),
              [](const CoiScore& x, const CoiScore& y) {
                  if (x.a != y.a) return x.a < y.a;
                  return x.b < y.b;
              });
    return result;
}

void write_histogram_csv(std::ostream& out, const HistogramPair& pair) {
    out << "class,lower_edge,count,cumulative_fraction\n";
    char buf[64];
    for (const Histogram* h : {&pair.normal, &pair.attack}) {
        for (std::size_t i = 0; i < h->counts.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%llu,%.12g", h->lower_edges[i],
                          static_cast<unsigned long long>(h->counts[i]), h->cumulative[i]);
            out << flow_label_name(h->class_tag) << ',' << buf << '\n';
        }
    }
}

void write_occurrence_csv(std::ostream& out, const std::vector<FlowOccurrence>& occ) {
    out << "src,dst,slice_count,class\n";
    for (const FlowOccurrence& o : occ) {
        out << format_ip(o.src) << ',' << format_ip(o.dst) << ',' << o.slice_count << ','
            << (o.attack_pair ? "attack" : "normal") << '\n';
    }
}

void write_coi_csv(std::ostream& out, const CoiResult& result) {
    out << "src,dst,fraction,member\n";
    char buf[32];
    for (const CoiScore& s : result.scores) {
        std::snprintf(buf, sizeof buf, "%.12g", s.fraction);
        out << format_ip(s.a) << ',' << format_ip(s.b) << ',' << buf << ','
            << (s.member ? 1 : 0) << '\n';
    }
}

std::string histogram_svg(const HistogramPair& pair, const std::string& title,
                          const std::string& x_label) {
    const std::size_t nbins =
        std::max(pair.normal.counts.size(), pair.attack.counts.size());
    const double width = 960.0, height = 420.0;
    const double left = 70.0, right = 20.0, top = 48.0, bottom = 64.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::uint64_t max_count = 1;
    for (const Histogram* h : {&pair.normal, &pair.attack})
        for (const auto c : h->counts) max_count = std::max(max_count, c);

    std::string svg;
    svg.reserve(4096);
    char buf[512];
    const auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        svg += buf;
    };

    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
         "viewBox=\"0 0 %g %g\">\n",
         width, height, width, height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    emit("<text x=\"%g\" y=\"28\" font-family=\"sans-serif\" font-size=\"17\" "
         "text-anchor=\"middle\">%s</text>\n",
         width / 2.0, title.c_str());

    // axes
    emit("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", left,
         top + plot_h, left + plot_w, top + plot_h);
    emit("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", left, top,
         left, top + plot_h);
    emit("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\">%s</text>\n",
         left + plot_w / 2.0, height - 14.0, x_label.c_str());
    emit("<text x=\"18\" y=\"%g\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 18 %g)\">flows</text>\n",
         top + plot_h / 2.0, top + plot_h / 2.0);
    emit("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"end\">%llu</text>\n",
         left - 6.0, top + 10.0, static_cast<unsigned long long>(max_count));

    if (nbins > 0) {
        const double group_w = plot_w / static_cast<double>(nbins);
        const double bar_w = group_w * 0.4;
        const auto bar = [&](const Histogram& h, std::size_t i, double offset,
                             const char* color) {
            if (i >= h.counts.size() || h.counts[i] == 0) return;
            const double bh = plot_h * static_cast<double>(h.counts[i]) /
                              static_cast<double>(max_count);
            emit("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                 "fill=\"%s\"/>\n",
                 left + static_cast<double>(i) * group_w + offset, top + plot_h - bh, bar_w,
                 bh, color);
        };
        for (std::size_t i = 0; i < nbins; ++i) {
            bar(pair.normal, i, group_w * 0.08, "#4878a8");
            bar(pair.attack, i, group_w * 0.52, "#c44e52");
        }

        const std::size_t label_step = std::max<std::size_t>(1, nbins / 12);
        const std::vector<double>& edges = pair.normal.lower_edges.empty()
                                               ? pair.attack.lower_edges
                                               : pair.normal.lower_edges;
        for (std::size_t i = 0; i < edges.size(); i += label_step) {
            emit("<text x=\"%.2f\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
                 "text-anchor=\"middle\">%.10g</text>\n",
                 left + static_cast<double>(i) * group_w, top + plot_h + 16.0, edges[i]);
        }
    }

    // legend
    emit("<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"12\" fill=\"#4878a8\"/>\n",
         left + plot_w - 150.0, top + 4.0);
    emit("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\">normal "
         "(%llu)</text>\n",
         left + plot_w - 134.0, top + 14.0,
         static_cast<unsigned long long>(pair.normal.total));
    emit("<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"12\" fill=\"#c44e52\"/>\n",
         left + plot_w - 150.0, top + 22.0);
    emit("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\">attack "
         "(%llu)</text>\n",
         left + plot_w - 134.0, top + 32.0,
         static_cast<unsigned long long>(pair.attack.total));

    svg += "</svg>\n";
    return svg;
}

} // namespace csight
