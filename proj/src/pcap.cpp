#include <algorithm>
#include <cstring>

#include "csight/error.hpp"
#include "csight/pcap.hpp"

namespace csight {
namespace {

constexpr std::uint32_t kMagicUsec = 0xa1b2c3d4;
constexpr std::uint32_t kMagicUsecSwapped = 0xd4c3b2a1;

constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRawBsd = 12;
constexpr std::uint32_t kLinkRaw = 101;

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherIpv6 = 0x86dd;

inline std::uint32_t load_u32(const unsigned char* p, bool swap) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return swap ? __builtin_bswap32(v) : v;
}

inline std::uint16_t be16(const unsigned char* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline std::uint32_t be32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

inline IpAddr be128(const unsigned char* p) {
    IpAddr v = 0;
    for (int i = 0; i < 16; ++i) v = (v << 8) | p[i];
    return v;
}

// Reads the fixed IP header at ip[0..len). Returns false when the frame is
// not parseable as IPv4/IPv6 (wrong version nibble, short header, bogus
// total length).
bool parse_ip_frame(const unsigned char* ip, std::size_t len, double ts, PacketRecord& out) {
    if (len < 1) return false;
    const unsigned version = ip[0] >> 4;
    if (version == 4) {
        if (len < 20) return false;
        const std::uint16_t total_len = be16(ip + 2);
        if (total_len < 20) return false;
        out.src = be32(ip + 12);
        out.dst = be32(ip + 16);
        out.length = total_len;
        out.ttl = ip[8];
    } else if (version == 6) {
        if (len < 40) return false;
        const std::uint32_t total = static_cast<std::uint32_t>(be16(ip + 4)) + 40;
        out.src = be128(ip + 8);
        out.dst = be128(ip + 24);
        out.length = static_cast<std::uint16_t>(std::min<std::uint32_t>(total, 65535));
        out.ttl = ip[7];
    } else {
        return false;
    }
    out.ts = ts;
    out.label = Label::normal;
    return true;
}

} // namespace

void parse_pcap_stream(std::istream& in,
                       const std::function<void(const PacketRecord&)>& sink,
                       CaptureMeta& meta) {
    meta = CaptureMeta{};

    unsigned char global[24];
    in.read(reinterpret_cast<char*>(global), sizeof global);
    if (in.gcount() != sizeof global)
        throw ParseError(0, "pcap stream shorter than the 24-byte global header");

    std::uint32_t magic;
    std::memcpy(&magic, global, 4);
    bool swap;
    if (magic == kMagicUsec) {
        swap = false;
    } else if (magic == kMagicUsecSwapped) {
        swap = true;
    } else {
        throw ParseError(0, "unrecognized pcap magic; classic microsecond pcap expected");
    }

    std::uint16_t version_major;
    std::memcpy(&version_major, global + 4, 2);
    if (swap) version_major = __builtin_bswap16(version_major);
    if (version_major != 2)
        throw ParseError(0, "unsupported pcap version " + std::to_string(version_major));

    const std::uint32_t linktype = load_u32(global + 20, swap);
    if (linktype != kLinkEthernet && linktype != kLinkRaw && linktype != kLinkRawBsd)
        throw ParseError(0, "unsupported link type " + std::to_string(linktype) +
                                " (Ethernet and raw IP are handled)");

    std::vector<unsigned char> frame;
    bool have_ts = false;

    for (;;) {
        unsigned char rec[16];
        in.read(reinterpret_cast<char*>(rec), sizeof rec);
        if (in.gcount() == 0) break; // clean end of file
        if (in.gcount() != sizeof rec) {
            ++meta.skipped_frames; // trailing partial record header
            break;
        }

        const std::uint32_t ts_sec = load_u32(rec, swap);
        const std::uint32_t ts_usec = load_u32(rec + 4, swap);
        const std::uint32_t incl_len = load_u32(rec + 8, swap);

        if (incl_len > (1u << 20)) {
            ++meta.skipped_frames; // absurd captured length; cannot resync past it
            break;
        }

        frame.resize(incl_len);
        if (incl_len > 0) {
            in.read(reinterpret_cast<char*>(frame.data()), incl_len);
            if (in.gcount() != static_cast<std::streamsize>(incl_len)) {
                ++meta.skipped_frames; // file ends mid-frame
                break;
            }
        }

        const double ts = static_cast<double>(ts_sec) + static_cast<double>(ts_usec) * 1e-6;

        const unsigned char* ip = frame.data();
        std::size_t ip_len = frame.size();
        if (linktype == kLinkEthernet) {
            if (frame.size() < 14) {
                ++meta.skipped_frames;
                continue;
            }
            const std::uint16_t ether_type = be16(frame.data() + 12);
            if (ether_type != kEtherIpv4 && ether_type != kEtherIpv6) {
                ++meta.skipped_frames;
                continue;
            }
            ip += 14;
            ip_len -= 14;
        }

        PacketRecord record;
        if (!parse_ip_frame(ip, ip_len, ts, record)) {
            ++meta.skipped_frames;
            continue;
        }

        ++meta.record_count;
        if (!have_ts) {
            meta.first_ts = meta.last_ts = ts;
            have_ts = true;
        } else {
            meta.first_ts = std::min(meta.first_ts, ts);
            meta.last_ts = std::max(meta.last_ts, ts);
        }
        sink(record);
    }
}

PcapResult parse_pcap(std::istream& in) {
    PcapResult result;
    parse_pcap_stream(in, [&](const PacketRecord& r) { result.records.push_back(r); },
                      result.meta);
    return result;
}

} // namespace csight
