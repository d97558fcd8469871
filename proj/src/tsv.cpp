#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "csight/error.hpp"
#include "csight/tsv.hpp"

namespace csight {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

template <typename T>
T parse_uint_field(std::string_view text, std::size_t line_no, const char* what,
                   unsigned long long max) {
    unsigned long long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || v > max)
        throw ParseError(line_no, std::string("bad ") + what + " '" + std::string(text) + "'");
    return static_cast<T>(v);
}

PacketRecord parse_line(std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 5 && fields.size() != 6)
        throw ParseError(line_no, "expected 5 or 6 tab-separated fields, got " +
                                      std::to_string(fields.size()));

    PacketRecord r;
    const auto src = parse_ip(fields[0]);
    if (!src) throw ParseError(line_no, "bad source address '" + std::string(fields[0]) + "'");
    const auto dst = parse_ip(fields[1]);
    if (!dst) throw ParseError(line_no, "bad destination address '" + std::string(fields[1]) + "'");
    r.src = *src;
    r.dst = *dst;

    r.length = parse_uint_field<std::uint16_t>(fields[2], line_no, "length", 65535);
    const unsigned min_len = (!is_ipv4(r.src) || !is_ipv4(r.dst)) ? 40 : 20;
    if (r.length < min_len)
        throw ParseError(line_no, "length " + std::to_string(r.length) + " below IP header minimum");

    r.ttl = parse_uint_field<std::uint8_t>(fields[3], line_no, "ttl", 255);

    double ts = 0.0;
    auto [p, ec] = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), ts);
    if (ec != std::errc{} || p != fields[4].data() + fields[4].size() || !std::isfinite(ts) ||
        ts < 0.0)
        throw ParseError(line_no, "bad timestamp '" + std::string(fields[4]) + "'");
    r.ts = ts;

    if (fields.size() == 6) {
        const auto v = parse_uint_field<std::uint8_t>(fields[5], line_no, "label", 255);
        if (v > 2) throw ParseError(line_no, "label must be 0, 1 or 2");
        r.label = static_cast<Label>(v);
    }
    return r;
}

} // namespace

void parse_header_tsv_stream(std::istream& in,
                             const std::function<void(const PacketRecord&)>& sink) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        sink(parse_line(line, line_no));
    }
}

std::vector<PacketRecord> parse_header_tsv(std::istream& in) {
    std::vector<PacketRecord> records;
    parse_header_tsv_stream(in, [&](const PacketRecord& r) { records.push_back(r); });
    return records;
}

void write_header_tsv(std::ostream& out, const std::vector<PacketRecord>& records) {
    const bool with_labels =
        std::any_of(records.begin(), records.end(),
                    [](const PacketRecord& r) { return r.label != Label::normal; });
    char ts_buf[32];
    for (const PacketRecord& r : records) {
        std::snprintf(ts_buf, sizeof ts_buf, "%.6f", r.ts);
        out << format_ip(r.src) << '\t' << format_ip(r.dst) << '\t' << r.length << '\t'
            << static_cast<unsigned>(r.ttl) << '\t' << ts_buf;
        if (with_labels) out << '\t' << static_cast<unsigned>(static_cast<std::uint8_t>(r.label));
        out << '\n';
    }
}

CaptureMeta meta_of(const std::vector<PacketRecord>& records) {
    CaptureMeta meta;
    meta.record_count = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i == 0) {
            meta.first_ts = meta.last_ts = records[i].ts;
        } else {
            meta.first_ts = std::min(meta.first_ts, records[i].ts);
            meta.last_ts = std::max(meta.last_ts, records[i].ts);
        }
    }
    return meta;
}

} // namespace csight
