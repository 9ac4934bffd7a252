#include <doctest.h>

#include <cmath>
#include <vector>

#include "oppnet/channel.hpp"

using namespace oppnet;

TEST_CASE("path gain")
{
    CHECK(path_gain(1.0, 4.0) == 1.0);
    CHECK(path_gain(0.5, 4.0) == doctest::Approx(16.0));
    CHECK(path_gain(2.0, 2.5) == doctest::Approx(0.1767766953));
    CHECK_THROWS(path_gain(0.0, 4.0));
}

TEST_CASE("channel parameters are validated")
{
    ChannelParams p;
    CHECK_NOTHROW(p.validate());
    p.alpha = 2.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.noise_power = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.eta = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK(parse_fading("none") == Fading::None);
    CHECK_THROWS_AS(parse_fading("rician"), ConfigError);
}

TEST_CASE("no-fading gains are exactly one")
{
    auto s = draw_block_fading(StreamKey(1), 5, Fading::None);
    for (NodeId a = 0; a < 20; ++a)
        for (NodeId b = 0; b < 20; ++b) CHECK(s.gain(a, b) == 1.0);
}

TEST_CASE("Rayleigh power gains follow the unit exponential")
{
    const StreamKey key = StreamKey(99).child(Stream::Fading);
    const int n = 1000000;
    double sum = 0.0;
    int above = 0;
    for (int i = 0; i < n; ++i) {
        // one link per block, so the draws are independent
        auto s = draw_block_fading(key, static_cast<std::uint64_t>(i), Fading::Rayleigh);
        const double g = s.gain(3, 4);
        sum += g;
        if (g > 1.0) ++above;
    }
    CHECK(std::abs(sum / n - 1.0) < 0.01);
    CHECK(std::abs(static_cast<double>(above) / n - std::exp(-1.0)) < 0.005);
}

TEST_CASE("fading is reproducible and link specific")
{
    auto a = draw_block_fading(StreamKey(4), 10, Fading::Rayleigh);
    auto b = draw_block_fading(StreamKey(4), 10, Fading::Rayleigh);
    std::vector<Link> links{{0, 1}, {1, 0}, {2, 5}};
    CHECK(sample_gains(a, links) == sample_gains(b, links));
    CHECK(a.gain(0, 1) != a.gain(1, 0));
    auto c = draw_block_fading(StreamKey(4), 11, Fading::Rayleigh);
    CHECK(a.gain(0, 1) != c.gain(0, 1));
}

TEST_CASE("SINR of hand-computed configurations")
{
    ChannelParams params;  // alpha 4, N0 1, eta 1
    std::vector<Point> pos{{0, 0}, {1, 0}, {1, 1}};
    auto none = draw_block_fading(StreamKey(1), 0, Fading::None);
    CHECK(sinr_at(1, 0, {}, 4.0, pos, none, params) == doctest::Approx(4.0));
    std::vector<NodeId> one{2};
    CHECK(sinr_at(1, 0, one, 4.0, pos, none, params) == doctest::Approx(0.8));
    std::vector<NodeId> self{0};
    CHECK_THROWS(sinr_at(1, 0, self, 4.0, pos, none, params));
}

TEST_CASE("SINR matches a brute-force power sum")
{
    ChannelParams params;
    params.alpha = 3.3;
    params.noise_power = 0.2;
    Rng rng(StreamKey(17));
    std::vector<Point> pos;
    for (int i = 0; i < 20; ++i) pos.push_back({rng.uniform(), rng.uniform()});
    auto sample = draw_block_fading(StreamKey(8), 3, Fading::Rayleigh);
    for (NodeId rx = 0; rx < 20; ++rx) {
        const NodeId tx = (rx + 1) % 20;
        std::vector<NodeId> intf;
        for (NodeId i = 0; i < 20; ++i)
            if (i != rx && i != tx && i % 3 == 0) intf.push_back(i);
        const double p = 0.7;
        double sig = sample.gain(tx, rx) * p *
                     std::pow(std::hypot(pos[tx].x - pos[rx].x, pos[tx].y - pos[rx].y), -params.alpha);
        double sum = 0.0;
        for (NodeId i : intf)
            sum += sample.gain(i, rx) * p * std::pow(std::hypot(pos[i].x - pos[rx].x, pos[i].y - pos[rx].y), -params.alpha);
        const double want = sig / (params.noise_power + sum);
        const double got = sinr_at(rx, tx, intf, p, pos, sample, params);
        CHECK(std::abs(got - want) <= 1e-12 * std::abs(want));
    }
}

TEST_CASE("analytic outage cdf")
{
    CHECK(analytic_outage_cdf(1, 1, 4, 1) == doctest::Approx(1 - std::exp(-1.0)));
    CHECK(analytic_outage_cdf(1e12, 1, 4, 1) < 1e-11);
    double prev = 1.0;
    for (double p = 0.01; p < 100; p *= 2) {
        const double v = analytic_outage_cdf(p, 2, 4, 1);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS(analytic_outage_cdf(0, 1, 4, 1));
}
