#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "oppnet/routing.hpp"

using namespace oppnet;

namespace {

struct Bench {
    NetworkLayout layout;
    ChannelParams params;
    std::vector<ActiveTransmission> on_air;

    HopContext ctx(double power, const ChannelSample& sample, std::uint32_t route = 0) const
    {
        HopContext c;
        c.layout = &layout;
        c.on_air = on_air;
        c.self_route = route;
        c.per_hop_power = power;
        c.sample = &sample;
        c.params = &params;
        return c;
    }
};

// Transmitter at (0.25, 0.25) in cell (0,0) of a 2x2 grid, m receivers on an
// arc of radius 0.5 around it, all inside cell (0,1).
Bench arc_bench(int m)
{
    std::vector<Point> pts{{0.25, 0.25}};
    for (int i = 0; i < m; ++i) {
        const double th = (-0.4 + 0.8 * (i + 0.5) / m);
        pts.push_back({0.25 + 0.5 * std::cos(th), 0.25 + 0.5 * std::sin(th)});
    }
    Bench b;
    b.layout = build_layout(pts, Placement::RandomUniform, 2);
    return b;
}

// Power at which a unit-gain link at distance r reaches SINR `s` with no interference.
double power_for(double s, double r, double alpha = 4.0) { return s * std::pow(r, alpha); }

} // namespace

TEST_CASE("parsers")
{
    CHECK(parse_engine("opp") == Engine::Opportunistic);
    CHECK(parse_engine("baseline") == Engine::Baseline);
    CHECK_THROWS_AS(parse_engine("x"), ConfigError);
    CHECK(parse_relay_rule("closest") == RelayRule::ClosestToDestination);
    CHECK_THROWS_AS(parse_relay_rule("best"), ConfigError);
}

TEST_CASE("mode 1: single decoding receiver is chosen")
{
    auto b = arc_bench(1);
    REQUIRE(b.layout.node_cell[1] == CellCoord{0, 1});
    ChannelSample none(StreamKey(1), 0, Fading::None);
    auto o = mode1_hop(b.ctx(power_for(2.0, 0.5), none), 0, {0, 1}, RelayRule::Uniform, {1, 0}, StreamKey(3));
    CHECK_FALSE(o.outage);
    CHECK(o.candidate_count == 1);
    REQUIRE(o.chosen_relay);
    CHECK(*o.chosen_relay == 1);
    CHECK(o.measured_sinr == doctest::Approx(2.0));
}

TEST_CASE("mode 1: outage when every SINR is below eta")
{
    auto b = arc_bench(6);
    ChannelSample none(StreamKey(1), 0, Fading::None);
    auto o = mode1_hop(b.ctx(power_for(0.99, 0.5), none), 0, {0, 1}, RelayRule::Uniform, {1, 0}, StreamKey(3));
    CHECK(o.outage);
    CHECK(o.candidate_count == 0);
    CHECK_FALSE(o.chosen_relay);
    CHECK(o.receivers == 6);
    CHECK(o.mean_signal == doctest::Approx(0.99));
}

TEST_CASE("mode 1: no-outage probability with independent links")
{
    const int m = 5;
    auto b = arc_bench(m);
    const double p = power_for(1.0, 0.5);  // mean SINR 1, q = exp(-1)
    const double q = std::exp(-1.0);
    const int trials = 40000;
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
        ChannelSample s(StreamKey(5), static_cast<std::uint64_t>(t), Fading::Rayleigh);
        auto o = mode1_hop(b.ctx(p, s), 0, {0, 1}, RelayRule::Uniform, {1, 0}, StreamKey(t));
        if (!o.outage) ++ok;
    }
    CHECK(std::abs(static_cast<double>(ok) / trials - (1 - std::pow(1 - q, m))) < 0.01);
}

TEST_CASE("mode 1: closest rule picks the decoder nearest the destination")
{
    auto b = arc_bench(5);
    ChannelSample none(StreamKey(1), 0, Fading::None);
    const Point dst{0.75, 0.49};
    auto o = mode1_hop(b.ctx(power_for(3.0, 0.5), none), 0, {0, 1}, RelayRule::ClosestToDestination, dst, StreamKey(1));
    REQUIRE(o.chosen_relay);
    for (NodeId d : o.decoders)
        CHECK(distance(b.layout.positions[*o.chosen_relay], dst) <= distance(b.layout.positions[d], dst));
}

TEST_CASE("mode 1: a stronger co-located transmitter blocks decoding")
{
    // tx 0 and interferer 1 share cell (0,0); receiver 2 is closer to 1.
    std::vector<Point> pts{{0.05, 0.25}, {0.45, 0.25}, {0.6, 0.25}};
    Bench b;
    b.layout = build_layout(pts, Placement::RandomUniform, 2);
    b.on_air.push_back({1, 7, 0, {0, 0}});
    ChannelSample none(StreamKey(1), 0, Fading::None);
    auto o = mode1_hop(b.ctx(1e6, none, 0), 0, {0, 1}, RelayRule::Uniform, {1, 0}, StreamKey(1));
    CHECK(o.outage);
    // the same transmission on the packet's own route is not an interferer
    auto own = mode1_hop(b.ctx(1e6, none, 7), 0, {0, 1}, RelayRule::Uniform, {1, 0}, StreamKey(1));
    CHECK_FALSE(own.outage);
}

TEST_CASE("mode 2 step 1: sub-cell partition")
{
    CHECK(subcells_per_side(1) == 1);
    CHECK(subcells_per_side(16) == 2);
    CHECK(subcells_per_side(17) == 3);
    CHECK(subcells_per_side(81) == 3);

    ChannelSample none(StreamKey(1), 0, Fading::None);
    {
        auto b = arc_bench(1);
        auto r = mode2_step1(b.ctx(power_for(2.0, 0.5), none), 0, {0, 1}, 999, StreamKey(1));
        CHECK(r.candidates == std::vector<NodeId>{1});
    }
    // 16 receivers on a 4x4 lattice in cell (0,1), tx close enough for all to decode.
    std::vector<Point> pts{{0.45, 0.25}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) pts.push_back({0.5 + (i + 0.5) / 8.0, (j + 0.5) / 8.0});
    Bench b;
    b.layout = build_layout(pts, Placement::RandomUniform, 2);
    auto r = mode2_step1(b.ctx(1e3, none), 0, {0, 1}, 999, StreamKey(2));
    CHECK(r.subcells_per_side == 2);
    REQUIRE(r.candidates.size() == 4);
    std::set<std::pair<int, int>> quads;
    for (NodeId c : r.candidates) {
        const Point p = b.layout.positions[c];
        quads.insert({p.x > 0.75, p.y > 0.25});
    }
    CHECK(quads.size() == 4);
    CHECK_FALSE(r.outcome.outage);

    auto dead = mode2_step1(b.ctx(1e-9, none), 0, {0, 1}, 999, StreamKey(2));
    CHECK(dead.candidates.empty());
    CHECK(dead.outcome.outage);
    CHECK(dead.fallback_candidates.size() == 4);

    // the destination never relays
    auto excl = mode2_step1(b.ctx(1e3, none), 0, {0, 1}, 1, StreamKey(2));
    CHECK(std::find(excl.candidates.begin(), excl.candidates.end(), 1u) == excl.candidates.end());
}

TEST_CASE("mode 2 step 2")
{
    // candidates 1..k at distance 0.5 from destination 0
    const int k = 4;
    std::vector<Point> pts{{0.25, 0.25}};
    for (int i = 0; i < k; ++i) {
        const double th = std::numbers::pi * (0.1 + 0.1 * i);
        pts.push_back({0.25 + 0.5 * std::cos(th) * 0.5, 0.25 + 0.5 * std::sin(th) * 0.5});
    }
    Bench b;
    b.layout = build_layout(pts, Placement::RandomUniform, 1);
    std::vector<NodeId> one{1};
    ChannelSample none(StreamKey(1), 0, Fading::None);
    auto o = mode2_step2(b.ctx(power_for(3.0, 0.25), none), one, 0, RelayRule::Uniform, StreamKey(1));
    CHECK_FALSE(o.outage);
    REQUIRE(o.chosen_relay);
    CHECK(*o.chosen_relay == 1);
    CHECK(o.measured_sinr == doctest::Approx(3.0));

    auto empty = mode2_step2(b.ctx(1.0, none), {}, 0, RelayRule::Uniform, StreamKey(1));
    CHECK(empty.outage);
    CHECK(empty.candidate_count == 0);

    std::vector<NodeId> all{1, 2, 3, 4};
    const double q = std::exp(-1.0);
    const int trials = 40000;
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
        ChannelSample s(StreamKey(6), static_cast<std::uint64_t>(t), Fading::Rayleigh);
        if (!mode2_step2(b.ctx(power_for(1.0, 0.25), s), all, 0, RelayRule::Uniform, StreamKey(t)).outage) ++ok;
    }
    CHECK(std::abs(static_cast<double>(ok) / trials - (1 - std::pow(1 - q, k))) < 0.01);
}

TEST_CASE("baseline hop is a deterministic threshold")
{
    std::vector<Point> pts{{0.25, 0.5}, {0.75, 0.5}};
    Bench b;
    b.layout = build_layout(pts, Placement::RandomUniform, 2);
    ChannelSample none(StreamKey(1), 0, Fading::None);
    auto ok = baseline_hop(b.ctx(power_for(2.0, 0.5), none), 0, 1);
    CHECK_FALSE(ok.outage);
    CHECK(ok.measured_sinr == doctest::Approx(2.0));
    auto fail = baseline_hop(b.ctx(power_for(0.99, 0.5), none), 0, 1);
    CHECK(fail.outage);
    auto again = baseline_hop(b.ctx(power_for(0.99, 0.5), none), 0, 1);
    CHECK(again.reference_sinr == fail.reference_sinr);
}

TEST_CASE("next slot time")
{
    CHECK(next_slot_time(-1, 0, 16) == 0);
    CHECK(next_slot_time(-1, 5, 16) == 5);
    CHECK(next_slot_time(5, 5, 16) == 21);
    for (std::int64_t after = -1; after < 50; ++after)
        for (int slot = 0; slot < 9; ++slot) {
            const auto t = next_slot_time(after, slot, 9);
            CHECK(static_cast<std::int64_t>(t) > after);
            CHECK(static_cast<std::int64_t>(t) - after <= 9);
            CHECK(static_cast<int>(t % 9) == slot);
        }
}

namespace {

struct Network {
    NetworkLayout layout;
    std::vector<SdRoute> routes;
    TdmaSchedule schedule{4};
    TrafficSnapshot snapshot;
    NetworkState state;
};

Network regular_network(Engine engine, std::size_t m, int g, double power)
{
    Network net;
    net.layout = build_layout(place_nodes(1024, Placement::RegularGrid, 0), Placement::RegularGrid, g);
    auto pairs = draw_sd_pairs(net.layout, m, PairPattern::RowSpan, StreamKey(21));
    net.routes = engine == Engine::Opportunistic ? build_opportunistic_routes(pairs)
                                                 : build_baseline_routes(net.layout, pairs);
    net.snapshot = TrafficSnapshot(net.layout, net.routes, net.schedule, engine, StreamKey(22));
    net.state.layout = &net.layout;
    net.state.routes = net.routes;
    net.state.snapshot = &net.snapshot;
    net.state.schedule = net.schedule;
    net.state.per_hop_power = power;
    net.state.engine = engine;
    net.state.fading = StreamKey(23);
    net.state.selection = StreamKey(24);
    return net;
}

} // namespace

TEST_CASE("snapshot places every route hop in its cell's slot")
{
    for (auto engine : {Engine::Opportunistic, Engine::Baseline}) {
        auto net = regular_network(engine, 6, 11, 1.0);
        std::size_t hops = 0;
        for (const auto& r : net.routes) hops += r.hop_count();
        CHECK(net.snapshot.size() == hops);
        for (int s = 0; s < net.snapshot.slot_count(); ++s)
            for (const auto& t : net.snapshot.slot(s)) {
                CHECK(net.schedule.slot_of(t.cell) == s);
                CHECK(net.layout.node_cell[t.node] == t.cell);
                const auto& r = net.routes[t.route];
                CHECK(r.hops[t.hop].from == t.cell);
                if (engine == Engine::Baseline) CHECK(t.node == r.relays[t.hop]);
                if (t.hop == 0) CHECK(t.node == r.pair.source);
            }
    }
}

TEST_CASE("single pair at high power is delivered over the whole route")
{
    for (auto engine : {Engine::Opportunistic, Engine::Baseline}) {
        auto net = regular_network(engine, 1, 11, 1e6);
        auto res = deliver_packet(net.state, 0);
        CHECK(res.delivered);
        CHECK(res.hops_taken == net.routes[0].hop_count());
        CHECK(res.per_hop.size() == net.routes[0].hop_count());
        for (std::size_t h = 1; h < res.per_hop.size(); ++h) CHECK(res.per_hop[h].time > res.per_hop[h - 1].time);
    }
}

TEST_CASE("zero power is an outage at the first hop")
{
    for (auto engine : {Engine::Opportunistic, Engine::Baseline}) {
        auto net = regular_network(engine, 1, 11, 0.0);
        auto res = deliver_packet(net.state, 0);
        CHECK_FALSE(res.delivered);
        REQUIRE(res.outage_hop);
        CHECK(*res.outage_hop == 0);
        CHECK(res.per_hop.size() == 1);
        DeliveryOptions probe;
        probe.continue_on_outage = true;
        auto all = deliver_packet(net.state, 0, probe);
        CHECK_FALSE(all.delivered);
        CHECK(all.per_hop.size() == net.routes[0].hop_count());
    }
}

TEST_CASE("delivery is reproducible")
{
    auto net = regular_network(Engine::Opportunistic, 8, 11, 0.01);
    for (std::size_t m = 0; m < 8; ++m) {
        auto a = deliver_packet(net.state, m);
        auto b = deliver_packet(net.state, m);
        CHECK(a.delivered == b.delivered);
        CHECK(a.per_hop.size() == b.per_hop.size());
        for (std::size_t h = 0; h < a.per_hop.size(); ++h) {
            CHECK(a.per_hop[h].decoders == b.per_hop[h].decoders);
            CHECK(a.per_hop[h].chosen_relay == b.per_hop[h].chosen_relay);
        }
    }
}

TEST_CASE("mean measured interference matches the expected power sum")
{
    // Expectation over fading of the interference at each hop's receivers is
    // the unfaded power sum over the other routes' transmitters.
    auto net = regular_network(Engine::Opportunistic, 8, 11, 1.0);
    const auto& route = net.routes[0];
    const auto& hop = route.hops[0];
    const int slot = net.schedule.slot_of(hop.from);
    std::vector<Point> others;
    for (const auto& t : net.snapshot.slot(slot))
        if (t.route != 0) others.push_back(net.layout.positions[t.node]);
    REQUIRE_FALSE(others.empty());
    double expected = 0.0;
    std::size_t receivers = 0;
    for (NodeId rx : net.layout.members(hop.to)) {
        const bool on_air = std::any_of(net.snapshot.slot(slot).begin(), net.snapshot.slot(slot).end(),
                                        [&](const auto& t) { return t.route != 0 && t.node == rx; });
        if (on_air || rx == route.pair.source) continue;
        expected += interference_sum(net.layout.positions[rx], others, 1.0, 1.0, 4.0);
        ++receivers;
    }
    expected /= static_cast<double>(receivers);

    double measured = 0.0;
    const int blocks = 4000;
    for (int t = 0; t < blocks; ++t) {
        ChannelSample s(StreamKey(31), static_cast<std::uint64_t>(t), Fading::Rayleigh);
        HopContext c;
        c.layout = &net.layout;
        c.on_air = net.snapshot.slot(slot);
        c.self_route = 0;
        c.per_hop_power = 1.0;
        c.sample = &s;
        c.params = &net.state.params;
        auto o = hop.mode == HopMode::Mode1
                     ? mode1_hop(c, route.pair.source, hop.to, RelayRule::Uniform, {}, StreamKey(1))
                     : mode2_step1(c, route.pair.source, hop.to, route.pair.destination, StreamKey(1)).outcome;
        CHECK(o.receivers == receivers);
        measured += o.mean_interference;
    }
    measured /= blocks;
    CHECK(std::abs(measured / expected - 1.0) < 0.10);
}
