#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "csight/error.hpp"
#include "csight/flow.hpp"
#include "csight/ip.hpp"
#include "csight/rng.hpp"

using namespace csight;

namespace {

const IpAddr A = ipv4_addr(10, 0, 0, 1);
const IpAddr B = ipv4_addr(10, 0, 0, 2);
const IpAddr C = ipv4_addr(10, 0, 0, 3);

PacketRecord packet(IpAddr src, IpAddr dst, std::uint16_t len, double ts,
                    Label label = Label::normal) {
    PacketRecord r;
    r.src = src;
    r.dst = dst;
    r.length = len;
    r.ttl = 64;
    r.ts = ts;
    r.label = label;
    return r;
}

// Direct two-pass mean/stddev over the packets of one flow.
std::pair<double, double> direct_moments(const std::vector<double>& lens) {
    double mean = 0.0;
    for (const double v : lens) mean += v;
    mean /= static_cast<double>(lens.size());
    double var = 0.0;
    for (const double v : lens) var += (v - mean) * (v - mean);
    var /= static_cast<double>(lens.size());
    return {mean, std::sqrt(var)};
}

} // namespace

TEST_CASE("two packet lengths produce the expected moments") {
    const auto flows = aggregate_flows({packet(A, B, 40, 10.0), packet(A, B, 1500, 11.0)});
    REQUIRE(flows.size() == 1);
    const FlowStats& f = flows[0];
    CHECK(f.count == 2);
    CHECK(f.mean_len == 770.0);
    CHECK(f.stddev_len == 730.0);
    CHECK(f.min_len == 40);
    CHECK(f.max_len == 1500);
    CHECK(f.first_ts == 10.0);
    CHECK(f.last_ts == 11.0);
    CHECK(f.attack_fraction == 0.0);
    CHECK(f.label == FlowLabel::normal);
}

TEST_CASE("single packet flows have zero spread") {
    const auto flows = aggregate_flows({packet(A, B, 333, 5.5)});
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].count == 1);
    CHECK(flows[0].mean_len == 333.0);
    CHECK(flows[0].stddev_len == 0.0);
}

TEST_CASE("slices split on floor((ts - epoch0) / duration)") {
    // epoch0 defaults to the first timestamp floored to whole seconds, so the
    // first slice here covers [12, 72).
    const auto flows = aggregate_flows({packet(A, B, 100, 12.7),
                                        packet(A, B, 100, 71.999),
                                        packet(A, B, 100, 72.0)},
                                       60.0);
    REQUIRE(flows.size() == 2);
    CHECK(flows[0].slice == 0);
    CHECK(flows[0].count == 2);
    CHECK(flows[1].slice == 1);
    CHECK(flows[1].count == 1);

    // An explicit epoch0 shifts the boundaries: [12.7, 72.7) holds both.
    const auto shifted = aggregate_flows({packet(A, B, 100, 12.7), packet(A, B, 100, 72.69)},
                                         60.0, 12.7);
    REQUIRE(shifted.size() == 1);
    CHECK(shifted[0].count == 2);
}

TEST_CASE("explicit epoch boundary puts an exact-edge packet in the next slice") {
    const auto flows =
        aggregate_flows({packet(A, B, 100, 0.0), packet(A, B, 100, 60.0)}, 60.0, 0.0);
    REQUIRE(flows.size() == 2);
    CHECK(flows[0].slice == 0);
    CHECK(flows[1].slice == 1);
}

TEST_CASE("directions and hosts key distinct flows") {
    const auto flows = aggregate_flows({packet(A, B, 100, 1.0), packet(B, A, 200, 2.0),
                                        packet(A, C, 300, 3.0)});
    REQUIRE(flows.size() == 3);
    // Sorted by (slice, src, dst).
    CHECK(flows[0].src == A);
    CHECK(flows[0].dst == B);
    CHECK(flows[1].src == A);
    CHECK(flows[1].dst == C);
    CHECK(flows[2].src == B);
    CHECK(flows[2].dst == A);
}

TEST_CASE("attack fraction counts only label one") {
    const auto flows = aggregate_flows({packet(A, B, 100, 1.0, Label::attack),
                                        packet(A, B, 100, 2.0, Label::attack_reply),
                                        packet(A, B, 100, 3.0),
                                        packet(A, B, 100, 4.0)});
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].attack_fraction == 0.25);
    CHECK(flows[0].label == FlowLabel::attack);

    const auto clean = aggregate_flows({packet(A, B, 100, 1.0, Label::attack_reply)});
    CHECK(clean[0].label == FlowLabel::normal);
    CHECK(clean[0].attack_fraction == 0.0);
}

TEST_CASE("input order does not matter") {
    Rng rng(77);
    std::vector<PacketRecord> records;
    for (int i = 0; i < 500; ++i) {
        records.push_back(packet(ipv4_addr(10, 0, 0, static_cast<std::uint8_t>(rng.bounded(4))),
                                 ipv4_addr(10, 0, 0, static_cast<std::uint8_t>(rng.bounded(4))),
                                 static_cast<std::uint16_t>(40 + rng.bounded(1400)),
                                 rng.uniform(100.0, 400.0),
                                 static_cast<Label>(rng.bounded(3))));
    }
    const auto sorted = aggregate_flows(records);

    std::vector<PacketRecord> shuffled = records;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.bounded(i)]);
    CHECK(aggregate_flows(shuffled) == sorted);
}

TEST_CASE("flow counts partition the packet count") {
    Rng rng(78);
    std::vector<PacketRecord> records;
    for (int i = 0; i < 700; ++i) {
        records.push_back(packet(ipv4_addr(10, 0, 0, static_cast<std::uint8_t>(rng.bounded(6))),
                                 ipv4_addr(10, 0, 1, static_cast<std::uint8_t>(rng.bounded(6))),
                                 static_cast<std::uint16_t>(40 + rng.bounded(1400)),
                                 rng.uniform(0.0, 1000.0)));
    }
    const auto flows = aggregate_flows(records, 45.0, 0.0);
    std::uint64_t total = 0;
    for (const FlowStats& f : flows) total += f.count;
    CHECK(total == records.size());

    // And the per-flow moments match a direct recomputation.
    for (const FlowStats& f : flows) {
        std::vector<double> lens;
        for (const PacketRecord& r : records) {
            if (r.src != f.src || r.dst != f.dst) continue;
            const auto slice = static_cast<std::int64_t>(std::floor((r.ts - 0.0) / 45.0));
            if (slice == f.slice) lens.push_back(r.length);
        }
        REQUIRE(lens.size() == f.count);
        const auto [mean, stddev] = direct_moments(lens);
        CHECK(f.mean_len == doctest::Approx(mean).epsilon(1e-12));
        CHECK(f.stddev_len == doctest::Approx(stddev).epsilon(1e-9));
    }
}

TEST_CASE("direction merge recombines opposite flows exactly") {
    const auto flows = aggregate_flows({packet(A, B, 60, 1.0), packet(A, B, 60, 2.0),
                                        packet(B, A, 100, 3.0, Label::attack)});
    REQUIRE(flows.size() == 2);
    const auto merged = flow_direction_merge(flows);
    REQUIRE(merged.size() == 1);
    const FlowStats& m = merged[0];
    CHECK(m.src == std::min(A, B));
    CHECK(m.dst == std::max(A, B));
    CHECK(m.count == 3);
    CHECK(m.mean_len == doctest::Approx(220.0 / 3.0).epsilon(1e-14));
    CHECK(m.stddev_len == doctest::Approx(18.856180831641268).epsilon(1e-12));
    CHECK(m.min_len == 60);
    CHECK(m.max_len == 100);
    CHECK(m.first_ts == 1.0);
    CHECK(m.last_ts == 3.0);
    CHECK(m.attack_fraction == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(m.label == FlowLabel::attack);

    // Merging equals aggregating with the unordered pair as the key.
    std::vector<PacketRecord> records{packet(A, B, 60, 1.0), packet(A, B, 60, 2.0),
                                      packet(B, A, 100, 3.0, Label::attack)};
    for (PacketRecord& r : records)
        if (r.src > r.dst) std::swap(r.src, r.dst);
    const auto direct = aggregate_flows(records);
    REQUIRE(direct.size() == 1);
    CHECK(m.mean_len == doctest::Approx(direct[0].mean_len).epsilon(1e-14));
    CHECK(m.stddev_len == doctest::Approx(direct[0].stddev_len).epsilon(1e-12));
}

TEST_CASE("merge normalizes lone flows to the unordered pair") {
    const auto flows = aggregate_flows({packet(B, A, 100, 1.0)});  // B > A
    const auto merged = flow_direction_merge(flows);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].src == A);
    CHECK(merged[0].dst == B);
    CHECK(merged[0].count == 1);

    // Flows in different slices stay apart.
    const auto two = flow_direction_merge(
        aggregate_flows({packet(A, B, 100, 1.0), packet(B, A, 100, 500.0)}));
    CHECK(two.size() == 2);
}

TEST_CASE("empty input and bad slice durations") {
    CHECK(aggregate_flows({}).empty());
    CHECK_THROWS_AS(aggregate_flows({packet(A, B, 100, 1.0)}, 0.0), DataError);
    CHECK_THROWS_AS(aggregate_flows({packet(A, B, 100, 1.0)}, -5.0), DataError);
}

TEST_CASE("flow csv carries the expected header and formatting") {
    const auto flows = aggregate_flows({packet(A, B, 40, 10.0), packet(A, B, 1500, 11.25)});
    std::ostringstream out;
    write_flow_csv(out, flows);
    CHECK(out.str() ==
          "src,dst,slice,count,mean_len,stddev_len,min_len,max_len,first_ts,last_ts,"
          "attack_fraction,label\n"
          "10.0.0.1,10.0.0.2,0,2,770,730,40,1500,10.000000,11.250000,0,normal\n");
}
