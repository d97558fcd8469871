#include <array>
#include <charconv>
#include <cstdio>

#include "csight/ip.hpp"

namespace csight {

std::string format_ip(IpAddr ip) {
    char buf[48];
    if (is_ipv4(ip)) {
        const auto v = static_cast<std::uint32_t>(ip);
        std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", v >> 24, (v >> 16) & 0xff,
                      (v >> 8) & 0xff, v & 0xff);
    } else {
        std::array<unsigned, 8> g;
        for (int i = 0; i < 8; ++i)
            g[i] = static_cast<unsigned>((ip >> (112 - 16 * i)) & 0xffff);
        std::snprintf(buf, sizeof buf, "%x:%x:%x:%x:%x:%x:%x:%x", g[0], g[1], g[2], g[3],
                      g[4], g[5], g[6], g[7]);
    }
    return buf;
}

namespace {

std::optional<IpAddr> parse_ipv4(std::string_view text) {
    IpAddr out = 0;
    const char* p = text.data();
    const char* end = p + text.size();
    for (int part = 0; part < 4; ++part) {
        unsigned v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || v > 255 || next == p) return std::nullopt;
        out = (out << 8) | v;
        p = next;
        if (part < 3) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
    }
    if (p != end) return std::nullopt;
    return out;
}

std::optional<IpAddr> parse_ipv6(std::string_view text) {
    std::array<std::uint16_t, 8> groups{};
    std::array<std::uint16_t, 8> head{}, tail{};
    int head_n = 0, tail_n = 0;
    bool seen_gap = false;

    std::size_t pos = 0;
    if (text.substr(0, 2) == "::") {
        seen_gap = true;
        pos = 2;
    }
    while (pos < text.size()) {
        std::uint16_t v = 0;
        auto [next, ec] =
            std::from_chars(text.data() + pos, text.data() + text.size(), v, 16);
        if (ec != std::errc{} || next == text.data() + pos) return std::nullopt;
        if (seen_gap) {
            if (tail_n == 8) return std::nullopt;
            tail[tail_n++] = v;
        } else {
            if (head_n == 8) return std::nullopt;
            head[head_n++] = v;
        }
        pos = static_cast<std::size_t>(next - text.data());
        if (pos == text.size()) break;
        if (text[pos] != ':') return std::nullopt;
        ++pos;
        if (pos < text.size() && text[pos] == ':') {
            if (seen_gap) return std::nullopt;
            seen_gap = true;
            ++pos;
        } else if (pos == text.size()) {
            return std::nullopt; // single trailing colon
        }
    }

    if (seen_gap) {
        if (head_n + tail_n > 7) return std::nullopt;
        for (int i = 0; i < head_n; ++i) groups[i] = head[i];
        for (int i = 0; i < tail_n; ++i) groups[8 - tail_n + i] = tail[i];
    } else {
        if (head_n != 8) return std::nullopt;
        groups = head;
    }

    IpAddr out = 0;
    for (int i = 0; i < 8; ++i) out = (out << 16) | groups[i];
    return out;
}

} // namespace

std::optional<IpAddr> parse_ip(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (text.find(':') != std::string_view::npos) return parse_ipv6(text);
    return parse_ipv4(text);
}

} // namespace csight
