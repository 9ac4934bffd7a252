#include <doctest.h>

#include <cmath>
#include <vector>

#include "oppnet/analytics.hpp"
#include "oppnet/rng.hpp"

using namespace oppnet;

TEST_CASE("law values")
{
    CHECK(opp_delay(1024, 20, 1) == doctest::Approx(2.0));
    CHECK(opp_delay(1024, 40, 1) == doctest::Approx(4.0));
    CHECK(opp_pairs_refined(1024, 2, 1) == doctest::Approx(2 * std::log2(1.6)));
    CHECK(opp_power(1024, 10, 4, 1) == doctest::Approx(0.1));
    CHECK(base_power(2, 4, 1) == doctest::Approx(0.125));
    CHECK(base_delay(7, 1) == doctest::Approx(7.0));
    CHECK(cutset_bound(10, 1024, 1) == doctest::Approx(100.0));
    CHECK(cutset_bound(10, 1024, 1) / cutset_bound(10, 256, 1) == doctest::Approx(10.0 / 8.0));
}

TEST_CASE("refined delay inverts the refined pair count")
{
    for (double d : {0.3, 0.5, 0.8, 1.0}) {
        const double m = opp_pairs_refined(1024, d, 1.5);
        CHECK(opp_delay_refined(1024, m, 1.5) == doctest::Approx(d).epsilon(1e-9));
    }
    CHECK(std::isnan(opp_delay_refined(1024, 1e6, 1.0)));
}

TEST_CASE("power laws")
{
    std::vector<double> ms{10, 12, 15, 18, 22};
    auto curve = opp_power_curve(1024, ms, 4.0, 1.0);
    const double k0 = curve.samples[0].y * std::pow(ms[0], 3.0);
    for (std::size_t i = 0; i < ms.size(); ++i)
        CHECK(curve.samples[i].y * std::pow(ms[i], 3.0) == doctest::Approx(k0));
    for (double m : ms) CHECK(opp_power(1024, m, 4, 1) / base_power(m, 4, 1) == doctest::Approx(100.0));

    auto [bp, bd] = baseline_curves(1024, ms, 4.0, 1.0, 1.0);
    std::vector<double> lx, ly;
    for (auto& s : bp.samples) {
        lx.push_back(std::log(s.x));
        ly.push_back(std::log(s.y));
    }
    CHECK(linear_fit(lx, ly).slope == doctest::Approx(-3.0));
    CHECK(bd.samples[2].y == doctest::Approx(15.0));
}

TEST_CASE("regime marks")
{
    auto r = pair_regime(1024);
    CHECK(r.low == doctest::Approx(10.0));
    CHECK(r.high == doctest::Approx(std::pow(1024.0, 0.45)));
    std::vector<double> ms{5, 10, 20, 30};
    auto c = opp_delay_curve(1024, ms, 1.0);
    CHECK_FALSE(c.samples[0].in_regime);
    CHECK(c.samples[1].in_regime);
    CHECK(c.samples[2].in_regime);
    CHECK_FALSE(c.samples[3].in_regime);
    CHECK(parse_law("cutset") == Law::CutSet);
    for (Law l : kAllLaws) CHECK(parse_law(to_string(l)) == l);
}

TEST_CASE("fit recovers an exact constant")
{
    std::vector<double> x{2, 4, 8, 16}, y;
    for (double m : x) y.push_back(base_delay(m, 2.5));
    auto f = fit_constant(Law::BaseDelay, x, y, {});
    CHECK(f.constant == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(f.r2 == doctest::Approx(1.0));

    for (Law law : {Law::OppPower, Law::OppDelay, Law::BasePower, Law::CutSet, Law::OppDelayRefined}) {
        std::vector<double> xs{2, 3, 5, 8}, ys;
        FitInput in;
        in.n = 1e6;  // the refined law cannot reach M = 2 at small n
        for (double m : xs) ys.push_back(law_value(law, m, 0.7, in));
        auto g = fit_constant(law, xs, ys, in);
        CHECK(g.constant == doctest::Approx(0.7).epsilon(1e-6));
    }
}

TEST_CASE("fit under 5% multiplicative noise")
{
    int within = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Rng rng(StreamKey(100 + rep));
        std::vector<double> x{10, 14, 20, 28, 40}, y;
        for (double m : x) y.push_back(opp_power(1024, m, 4, 3.0) * (1 + 0.05 * (2 * rng.uniform() - 1)));
        auto f = fit_constant(Law::OppPower, x, y, {});
        if (std::abs(f.constant / 3.0 - 1) <= 0.10) ++within;
    }
    CHECK(within == 100);
}

TEST_CASE("fit preconditions")
{
    std::vector<double> two{1, 8}, y2{1, 8};
    CHECK_THROWS_AS(fit_constant(Law::BaseDelay, two, y2, {}), FitError);
    std::vector<double> narrow{2, 3, 4}, y3{2, 3, 4};
    CHECK_THROWS_AS(fit_constant(Law::BaseDelay, narrow, y3, {}), FitError);
    std::vector<double> x{1, 2, 8}, bad{1, -1, 2};
    CHECK_THROWS_AS(fit_constant(Law::BaseDelay, x, bad, {}), FitError);
}

TEST_CASE("outage fit on synthetic critical powers")
{
    // P_crit = s / g with g unit exponential, so P(P_crit <= x) = exp(-s / x).
    const double s = 0.8, delay = 2.0, alpha = 4.0;
    const StreamKey k(55);
    std::vector<double> crit;
    for (int i = 0; i < 20000; ++i) crit.push_back(s / k.exponential(static_cast<std::uint64_t>(i)));
    const double c4 = fit_outage_c4(crit, delay, alpha);
    CHECK(c4 / std::pow(delay, alpha - 1) == doctest::Approx(s).epsilon(0.03));
    CHECK(outage_ks_distance(crit, c4, delay, alpha) < 0.02);
    CHECK(outage_ks_distance(crit, 3 * c4, delay, alpha) > 0.1);

    // cdf form: outage at power P is 1 - exp(-c4 / (P D^(alpha-1)))
    const double p = 1.3;
    double frac = 0.0;
    for (double v : crit) frac += v > p;
    frac /= static_cast<double>(crit.size());
    CHECK(std::abs(frac - law_value(Law::OutageCdf, p, c4, {1024, alpha, delay})) < 0.02);
}

TEST_CASE("trend helpers and linear fit")
{
    std::vector<double> up{1, 2, 3}, flat{1, 1, 2}, down{3, 2, 1};
    CHECK(strictly_increasing(up));
    CHECK_FALSE(strictly_increasing(flat));
    CHECK(strictly_decreasing(down));
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    auto f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    std::vector<double> cx{1, 1};
    CHECK_THROWS_AS(linear_fit(cx, cx), FitError);
}
