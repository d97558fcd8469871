#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace csight {

// Addresses are stored as unsigned 128-bit integers. IPv4 addresses occupy
// the low 32 bits (a.b.c.d -> a*2^24 + b*2^16 + c*2^8 + d), IPv6 addresses
// use the full width in network byte order.
using IpAddr = unsigned __int128;

constexpr IpAddr ipv4_addr(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return (static_cast<IpAddr>(a) << 24) | (static_cast<IpAddr>(b) << 16) |
           (static_cast<IpAddr>(c) << 8) | static_cast<IpAddr>(d);
}

constexpr bool is_ipv4(IpAddr ip) { return ip >> 32 == 0; }

constexpr std::uint64_t ip_high(IpAddr ip) { return static_cast<std::uint64_t>(ip >> 64); }
constexpr std::uint64_t ip_low(IpAddr ip) { return static_cast<std::uint64_t>(ip); }

// Dotted quad for IPv4 values, eight colon-separated hex groups otherwise.
std::string format_ip(IpAddr ip);

// Accepts dotted-quad IPv4 and colon-hex IPv6 (full or "::"-compressed).
// Returns nullopt on malformed text.
std::optional<IpAddr> parse_ip(std::string_view text);

struct IpAddrHash {
    std::size_t operator()(IpAddr ip) const {
        std::uint64_t h = ip_low(ip) * 0x9e3779b97f4a7c15ULL;
        h ^= ip_high(ip) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

} // namespace csight
