#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "csight/error.hpp"
#include "csight/ip.hpp"
#include "csight/pcap.hpp"
#include "csight/rng.hpp"
#include "csight/tsv.hpp"

using namespace csight;

namespace {

// Classic pcap writer with selectable header byte order; frame bytes are
// written verbatim.
struct PcapBuilder {
    bool big_endian = false;
    std::string bytes;

    explicit PcapBuilder(std::uint32_t linktype, bool be = false) : big_endian(be) {
        u32(0xa1b2c3d4);
        u16(2);
        u16(4);
        u32(0);  // thiszone
        u32(0);  // sigfigs
        u32(65535);
        u32(linktype);
    }

    void u16(std::uint16_t v) {
        if (big_endian) {
            bytes.push_back(static_cast<char>(v >> 8));
            bytes.push_back(static_cast<char>(v & 0xff));
        } else {
            bytes.push_back(static_cast<char>(v & 0xff));
            bytes.push_back(static_cast<char>(v >> 8));
        }
    }

    void u32(std::uint32_t v) {
        if (big_endian) {
            for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<char>((v >> s) & 0xff));
        } else {
            for (int s = 0; s <= 24; s += 8) bytes.push_back(static_cast<char>((v >> s) & 0xff));
        }
    }

    void record(std::uint32_t sec, std::uint32_t usec, const std::string& frame,
                std::uint32_t orig_len_override = 0) {
        u32(sec);
        u32(usec);
        u32(static_cast<std::uint32_t>(frame.size()));
        u32(orig_len_override ? orig_len_override : static_cast<std::uint32_t>(frame.size()));
        bytes += frame;
    }

    // Record header announcing incl_len without supplying the frame bytes.
    void raw_record_header(std::uint32_t sec, std::uint32_t usec, std::uint32_t incl_len) {
        u32(sec);
        u32(usec);
        u32(incl_len);
        u32(incl_len);
    }

    std::istringstream stream() const { return std::istringstream(bytes); }
};

std::string ipv4_frame(std::uint32_t src, std::uint32_t dst, std::uint16_t total_len,
                       std::uint8_t ttl, const std::string& payload = "") {
    std::string f(20, '\0');
    f[0] = 0x45;
    f[2] = static_cast<char>(total_len >> 8);
    f[3] = static_cast<char>(total_len & 0xff);
    f[8] = static_cast<char>(ttl);
    f[9] = 6;  // protocol, ignored by the parser
    for (int i = 0; i < 4; ++i) {
        f[12 + i] = static_cast<char>((src >> (24 - 8 * i)) & 0xff);
        f[16 + i] = static_cast<char>((dst >> (24 - 8 * i)) & 0xff);
    }
    return f + payload;
}

std::string ipv6_frame(const unsigned char (&src)[16], const unsigned char (&dst)[16],
                       std::uint16_t payload_len, std::uint8_t hop,
                       const std::string& payload = "") {
    std::string f(40, '\0');
    f[0] = 0x60;
    f[4] = static_cast<char>(payload_len >> 8);
    f[5] = static_cast<char>(payload_len & 0xff);
    f[6] = 17;  // next header, ignored
    f[7] = static_cast<char>(hop);
    for (int i = 0; i < 16; ++i) {
        f[8 + i] = static_cast<char>(src[i]);
        f[24 + i] = static_cast<char>(dst[i]);
    }
    return f + payload;
}

std::string ether(std::uint16_t ether_type, const std::string& ip) {
    std::string f(12, '\x02');
    f.push_back(static_cast<char>(ether_type >> 8));
    f.push_back(static_cast<char>(ether_type & 0xff));
    return f + ip;
}

constexpr std::uint32_t kSrc4 = 0xc0a80001;  // 192.168.0.1
constexpr std::uint32_t kDst4 = 0x08080808;  // 8.8.8.8

} // namespace

TEST_CASE("ethernet IPv4 packets parse into header records") {
    for (const bool be : {false, true}) {
        PcapBuilder b(1, be);
        b.record(1000, 250000, ether(0x0800, ipv4_frame(kSrc4, kDst4, 1500, 64, "payload")));
        b.record(1001, 0, ether(0x0800, ipv4_frame(kDst4, kSrc4, 40, 128)));
        auto in = b.stream();
        const PcapResult r = parse_pcap(in);

        REQUIRE(r.records.size() == 2);
        CHECK(r.meta.record_count == 2);
        CHECK(r.meta.skipped_frames == 0);
        CHECK(r.records[0].src == ipv4_addr(192, 168, 0, 1));
        CHECK(r.records[0].dst == ipv4_addr(8, 8, 8, 8));
        CHECK(r.records[0].length == 1500);
        CHECK(r.records[0].ttl == 64);
        CHECK(r.records[0].ts == doctest::Approx(1000.25).epsilon(1e-12));
        CHECK(r.records[1].length == 40);
        CHECK(r.meta.first_ts == r.records[0].ts);
        CHECK(r.meta.last_ts == r.records[1].ts);
    }
}

TEST_CASE("raw IP link types skip the ethernet header") {
    for (const std::uint32_t linktype : {101u, 12u}) {
        PcapBuilder b(linktype);
        b.record(7, 1, ipv4_frame(kSrc4, kDst4, 576, 32));
        auto in = b.stream();
        const PcapResult r = parse_pcap(in);
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].length == 576);
        CHECK(r.records[0].ttl == 32);
    }
}

TEST_CASE("IPv6 length is the payload field plus the 40-byte header, clamped") {
    unsigned char src[16] = {0x20, 0x01, 0x0d, 0xb8};
    unsigned char dst[16] = {0xfe, 0x80};
    dst[15] = 1;
    PcapBuilder b(101);
    b.record(1, 0, ipv6_frame(src, dst, 1000, 55));
    b.record(2, 0, ipv6_frame(src, dst, 65535, 64));  // clamps to the field maximum
    auto in = b.stream();
    const PcapResult r = parse_pcap(in);

    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].length == 1040);
    CHECK(r.records[0].ttl == 55);
    CHECK(!is_ipv4(r.records[0].src));
    CHECK(format_ip(r.records[0].src) == "2001:db8:0:0:0:0:0:0");
    CHECK(format_ip(r.records[0].dst) == "fe80:0:0:0:0:0:0:1");
    CHECK(r.records[1].length == 65535);
}

TEST_CASE("records depend only on the fixed IP header bytes") {
    Rng rng(99);
    const auto build = [&] {
        PcapBuilder b(1);
        Rng payload_rng(rng.next_u64());  // fresh payload bytes every build
        for (int i = 0; i < 25; ++i) {
            std::string payload(40, '\0');
            for (auto& c : payload) c = static_cast<char>(payload_rng.bounded(256));
            b.record(100 + i, i * 1000,
                     ether(0x0800, ipv4_frame(kSrc4 + i, kDst4, 500 + i, 64, payload)));
        }
        auto in = b.stream();
        return parse_pcap(in).records;
    };
    const auto a = build();
    const auto c = build();
    REQUIRE(a.size() == 25);
    CHECK(a == c);  // different payload bytes, identical records
}

TEST_CASE("non-IP and malformed frames are counted, not parsed") {
    PcapBuilder b(1);
    b.record(1, 0, ether(0x0806, std::string(28, '\0')));         // ARP
    b.record(2, 0, std::string(10, '\0'));                        // short ethernet
    b.record(3, 0, ether(0x0800, std::string(8, '\x45')));        // truncated IPv4
    std::string bad_len = ipv4_frame(kSrc4, kDst4, 19, 64);       // total_len < 20
    b.record(4, 0, ether(0x0800, bad_len));
    std::string bad_ver = ipv4_frame(kSrc4, kDst4, 100, 64);
    bad_ver[0] = 0x55;                                            // version nibble 5
    b.record(5, 0, ether(0x0800, bad_ver));
    b.record(6, 0, ether(0x0800, ipv4_frame(kSrc4, kDst4, 200, 9)));  // one good frame

    auto in = b.stream();
    const PcapResult r = parse_pcap(in);
    CHECK(r.meta.skipped_frames == 5);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].ts == 6.0);
}

TEST_CASE("meta timestamps are min and max even when out of order") {
    PcapBuilder b(101);
    b.record(50, 0, ipv4_frame(kSrc4, kDst4, 100, 64));
    b.record(10, 500000, ipv4_frame(kSrc4, kDst4, 100, 64));
    b.record(30, 0, ipv4_frame(kSrc4, kDst4, 100, 64));
    auto in = b.stream();
    const PcapResult r = parse_pcap(in);
    CHECK(r.meta.first_ts == 10.5);
    CHECK(r.meta.last_ts == 50.0);
}

TEST_CASE("damaged pcap streams fail loudly or stop at the damage") {
    SUBCASE("wrong magic") {
        std::istringstream in("XXXXYYYYZZZZWWWWVVVVUUUU");
        CHECK_THROWS_AS(parse_pcap(in), ParseError);
    }
    SUBCASE("short global header") {
        std::istringstream in("\xa1\xb2\xc3\xd4 short");
        CHECK_THROWS_AS(parse_pcap(in), ParseError);
    }
    SUBCASE("unsupported version") {
        PcapBuilder b(1);
        b.bytes[4] = 3;  // version_major
        auto in = b.stream();
        CHECK_THROWS_AS(parse_pcap(in), ParseError);
    }
    SUBCASE("unsupported linktype") {
        PcapBuilder b(228);
        auto in = b.stream();
        CHECK_THROWS_AS(parse_pcap(in), ParseError);
    }
    SUBCASE("trailing partial record header counts as skipped") {
        PcapBuilder b(101);
        b.record(1, 0, ipv4_frame(kSrc4, kDst4, 100, 64));
        b.bytes += "\x01\x02\x03";
        auto in = b.stream();
        const PcapResult r = parse_pcap(in);
        CHECK(r.records.size() == 1);
        CHECK(r.meta.skipped_frames == 1);
    }
    SUBCASE("file ending mid-frame counts as skipped") {
        PcapBuilder b(101);
        b.record(1, 0, ipv4_frame(kSrc4, kDst4, 100, 64));
        b.raw_record_header(2, 0, 60);  // promises 60 bytes, delivers none
        auto in = b.stream();
        const PcapResult r = parse_pcap(in);
        CHECK(r.records.size() == 1);
        CHECK(r.meta.skipped_frames == 1);
    }
    SUBCASE("absurd captured length stops the parse") {
        PcapBuilder b(101);
        b.record(1, 0, ipv4_frame(kSrc4, kDst4, 100, 64));
        b.raw_record_header(2, 0, 0x40000000);
        b.record(3, 0, ipv4_frame(kSrc4, kDst4, 100, 64));  // unreachable
        auto in = b.stream();
        const PcapResult r = parse_pcap(in);
        CHECK(r.records.size() == 1);
        CHECK(r.meta.skipped_frames == 1);
    }
}

TEST_CASE("TSV round trip preserves records") {
    Rng rng(4242);
    std::vector<PacketRecord> records;
    for (int i = 0; i < 300; ++i) {
        PacketRecord r;
        const bool v6 = rng.bounded(4) == 0;
        if (v6) {
            r.src = (IpAddr{0x20010db8} << 96) | rng.next_u64();
            r.dst = (IpAddr{0xfe800000} << 96) | rng.next_u64();
            r.length = static_cast<std::uint16_t>(40 + rng.bounded(65535 - 40 + 1));
        } else {
            r.src = ipv4_addr(10, 0, static_cast<std::uint8_t>(rng.bounded(256)),
                              static_cast<std::uint8_t>(rng.bounded(256)));
            r.dst = ipv4_addr(192, 168, 1, static_cast<std::uint8_t>(rng.bounded(256)));
            r.length = static_cast<std::uint16_t>(20 + rng.bounded(65535 - 20 + 1));
        }
        r.ttl = static_cast<std::uint8_t>(rng.bounded(256));
        // Timestamps quantized to whole microseconds survive the %.6f format.
        r.ts = std::round(rng.uniform(0.0, 2e9) * 1e6) / 1e6;
        r.label = static_cast<Label>(rng.bounded(3));
        records.push_back(r);
    }

    std::ostringstream out;
    write_header_tsv(out, records);
    std::istringstream in(out.str());
    const std::vector<PacketRecord> parsed = parse_header_tsv(in);
    CHECK(parsed == records);

    // Writing the parsed records again reproduces the text byte for byte.
    std::ostringstream out2;
    write_header_tsv(out2, parsed);
    CHECK(out2.str() == out.str());
}

TEST_CASE("the label column appears exactly when some record is labeled") {
    PacketRecord r;
    r.src = ipv4_addr(1, 2, 3, 4);
    r.dst = ipv4_addr(5, 6, 7, 8);
    r.length = 100;
    r.ttl = 60;
    r.ts = 1.5;

    std::ostringstream plain;
    write_header_tsv(plain, {r});
    CHECK(plain.str() == "1.2.3.4\t5.6.7.8\t100\t60\t1.500000\n");

    PacketRecord labeled = r;
    labeled.label = Label::attack_reply;
    std::ostringstream tagged;
    write_header_tsv(tagged, {r, labeled});
    CHECK(tagged.str() ==
          "1.2.3.4\t5.6.7.8\t100\t60\t1.500000\t0\n"
          "1.2.3.4\t5.6.7.8\t100\t60\t1.500000\t2\n");
}

TEST_CASE("TSV parser accepts CRLF and blank lines, rejects bad fields") {
    const std::string good = "1.2.3.4\t5.6.7.8\t100\t60\t1.500000";
    {
        std::istringstream in(good + "\r\n\r\n" + good + "\n");
        CHECK(parse_header_tsv(in).size() == 2);
    }
    const auto rejects = [&](const std::string& line, std::size_t line_no = 1) {
        std::istringstream in(line + "\n");
        try {
            parse_header_tsv(in);
            FAIL_CHECK("accepted: " << line);
        } catch (const ParseError& e) {
            CHECK(e.line() == line_no);
        }
    };
    rejects("1.2.3.4\t5.6.7.8\t100\t60");                              // 4 fields
    rejects(good + "\t1\t1");                                          // 7 fields
    rejects("1.2.3.999\t5.6.7.8\t100\t60\t1.5");                       // bad src
    rejects("1.2.3.4\tnope\t100\t60\t1.5");                            // bad dst
    rejects("1.2.3.4\t5.6.7.8\t19\t60\t1.5");                          // below IPv4 minimum
    rejects("1.2.3.4\t2001:db8::1\t39\t60\t1.5");                      // below IPv6 minimum
    rejects("1.2.3.4\t5.6.7.8\t65536\t60\t1.5");                       // above field maximum
    rejects("1.2.3.4\t5.6.7.8\t100\t256\t1.5");                        // ttl
    rejects("1.2.3.4\t5.6.7.8\t100\t60\t-1.5");                        // negative ts
    rejects("1.2.3.4\t5.6.7.8\t100\t60\tinf");                         // non-finite ts
    rejects("1.2.3.4\t5.6.7.8\t100\t60\t1.5\t3");                      // label out of range
    rejects("1.2.3.4\t5.6.7.8\t1e2\t60\t1.5");                         // non-integer length
    {
        std::istringstream in(good + "\n" + good + "\tbad\n");
        try {
            parse_header_tsv(in);
            FAIL_CHECK("accepted bad second line");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);  // error reports the offending line
        }
    }
}

TEST_CASE("IPv6 length floor follows the address family") {
    // 40 is legal for IPv6 pairs, and 20..39 legal for IPv4 pairs.
    std::istringstream v6("2001:db8::1\t2001:db8::2\t40\t64\t1.0\n");
    CHECK(parse_header_tsv(v6).size() == 1);
    std::istringstream v4("1.2.3.4\t5.6.7.8\t20\t64\t1.0\n");
    CHECK(parse_header_tsv(v4).size() == 1);
}

TEST_CASE("address text round trips through parse and format") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        IpAddr a;
        if (i % 2 == 0) {
            a = ipv4_addr(static_cast<std::uint8_t>(rng.bounded(256)),
                          static_cast<std::uint8_t>(rng.bounded(256)),
                          static_cast<std::uint8_t>(rng.bounded(256)),
                          static_cast<std::uint8_t>(rng.bounded(256)));
        } else {
            a = (static_cast<IpAddr>(rng.next_u64()) << 64) | rng.next_u64();
            if (is_ipv4(a)) a |= IpAddr{1} << 64;
        }
        const auto back = parse_ip(format_ip(a));
        REQUIRE(back.has_value());
        CHECK(*back == a);
    }

    CHECK(format_ip(ipv4_addr(192, 168, 0, 1)) == "192.168.0.1");
    const auto v6 = parse_ip("2001:db8::1");
    REQUIRE(v6.has_value());
    CHECK(format_ip(*v6) == "2001:db8:0:0:0:0:0:1");
    CHECK(parse_ip("::") .has_value());
    CHECK(parse_ip("::1").has_value());
    CHECK(parse_ip("1::").has_value());
    CHECK(!parse_ip("256.1.1.1").has_value());
    CHECK(!parse_ip("1.2.3").has_value());
    CHECK(!parse_ip("1.2.3.4.5").has_value());
    CHECK(!parse_ip("2001:db8::1::2").has_value());
    CHECK(!parse_ip("1:2:3:4:5:6:7:8:9").has_value());
    CHECK(!parse_ip("2001:db8:").has_value());
    CHECK(!parse_ip("").has_value());
    CHECK(!parse_ip("not-an-address").has_value());
}
