#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "oppnet/rng.hpp"

using namespace oppnet;

TEST_CASE("splitmix64 matches the reference sequence")
{
    // First outputs of the reference generator seeded with 0.
    std::uint64_t state = 0;
    CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
    state += 0x9e3779b97f4a7c15ULL;
    CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("stream keys are pure functions of their path")
{
    const StreamKey a = StreamKey(42).child(Stream::Fading).child(7);
    const StreamKey b = StreamKey(42).child(Stream::Fading).child(7);
    CHECK(a.state() == b.state());
    CHECK(a.bits(3) == b.bits(3));
    CHECK(StreamKey(42).child({3, 7}).state() == a.state());
    CHECK(StreamKey(42).child(Stream::Selection).child(7).state() != a.state());
    CHECK(StreamKey(43).child(Stream::Fading).child(7).state() != a.state());
}

TEST_CASE("uniform draws lie in [0,1) and are roughly flat")
{
    const StreamKey k(9);
    std::vector<int> bins(10, 0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = k.uniform(static_cast<std::uint64_t>(i));
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        ++bins[static_cast<std::size_t>(u * 10)];
    }
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
    CHECK(chi2 < 27.9);  // chi-square, 9 dof, p = 0.001
}

TEST_CASE("exponential draws have unit mean and the exponential tail")
{
    const StreamKey k(2024);
    const int n = 1000000;
    double sum = 0.0;
    int above = 0;
    for (int i = 0; i < n; ++i) {
        const double g = k.exponential(static_cast<std::uint64_t>(i));
        REQUIRE(g >= 0.0);
        sum += g;
        if (g > 1.0) ++above;
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(static_cast<double>(above) / n - std::exp(-1.0)) < 0.005);
}

TEST_CASE("Rng::index is in range and covers every value")
{
    Rng rng(StreamKey(5));
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = rng.index(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);
    CHECK_THROWS(rng.index(0));
}

TEST_CASE("shuffle is a deterministic permutation")
{
    std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto b = a;
    Rng r1(StreamKey(11)), r2(StreamKey(11));
    shuffle(a, r1);
    shuffle(b, r2);
    CHECK(a == b);
    CHECK(std::set<int>(a.begin(), a.end()).size() == 10);
}
