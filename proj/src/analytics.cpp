#include "oppnet/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace oppnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive(double v, const char* what)
{
    if (!(v > 0.0)) throw std::invalid_argument(fmt::format("{} must be positive, got {}", what, v));
}

} // namespace

const char* to_string(Law law) noexcept
{
    switch (law) {
    case Law::OppPower: return "opp_power";
    case Law::OppDelay: return "opp_delay";
    case Law::OppPowerRefined: return "opp_power_refined";
    case Law::OppDelayRefined: return "opp_delay_refined";
    case Law::BasePower: return "base_power";
    case Law::BaseDelay: return "base_delay";
    case Law::CutSet: return "cutset";
    case Law::OutageCdf: return "outage_cdf";
    }
    return "?";
}

Law parse_law(const std::string& s)
{
    for (Law l : kAllLaws) {
        if (s == to_string(l)) return l;
    }
    throw std::invalid_argument(fmt::format("unknown law '{}'", s));
}

Regime pair_regime(std::size_t n, double eps)
{
    const double dn = static_cast<double>(n);
    return {std::log2(dn), std::pow(dn, 0.5 - eps)};
}

double opp_delay(double n, double m, double c)
{
    require_positive(c, "c");
    return m / (c * std::log2(n));
}

double opp_pairs_refined(double n, double d, double c)
{
    return c * d * std::log2(std::sqrt(n) / (d * std::log2(n)));
}

double opp_delay_refined(double n, double m, double c)
{
    require_positive(c, "c");
    // f(D) = c D log2(a / D) rises on (0, a/e].
    const double a = std::sqrt(n) / std::log2(n);
    double lo = 0.0;
    double hi = a / std::exp(1.0);
    if (!(m > 0.0) || m > opp_pairs_refined(n, hi, c)) return kNaN;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (opp_pairs_refined(n, mid, c) < m) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double opp_power(double n, double m, double alpha, double c)
{
    return c * std::pow(std::log2(n), alpha - 2.0) / std::pow(m, alpha - 1.0);
}

double opp_power_refined(double n, double m, double alpha, double c)
{
    const double d = opp_delay_refined(n, m, 1.0);
    return c / (m * std::pow(d, alpha - 2.0));
}

double base_power(double m, double alpha, double c_p)
{
    return c_p * std::pow(m, 1.0 - alpha);
}

double base_delay(double m, double c_d)
{
    return c_d * m;
}

double cutset_bound(double m, double n, double c5)
{
    require_positive(c5, "c5");
    return c5 * m * std::log2(n);
}

double law_value(Law law, double x, double c, const FitInput& in)
{
    switch (law) {
    case Law::OppPower: return opp_power(in.n, x, in.alpha, c);
    case Law::OppDelay: return opp_delay(in.n, x, c);
    case Law::OppPowerRefined: return opp_power_refined(in.n, x, in.alpha, c);
    case Law::OppDelayRefined: return opp_delay_refined(in.n, x, c);
    case Law::BasePower: return base_power(x, in.alpha, c);
    case Law::BaseDelay: return base_delay(x, c);
    case Law::CutSet: return cutset_bound(x, in.n, c);
    case Law::OutageCdf: return -std::expm1(-c / (x * std::pow(in.delay, in.alpha - 1.0)));
    }
    return kNaN;
}

namespace {

ScalingCurve sample_curve(Law law, std::span<const double> xs, double c, const FitInput& in, std::size_t n,
                          bool regime_applies)
{
    ScalingCurve curve;
    curve.law = law;
    curve.constants["c"] = c;
    const Regime reg = pair_regime(n);
    for (double x : xs) {
        curve.samples.push_back({x, law_value(law, x, c, in), !regime_applies || reg.contains(x)});
    }
    return curve;
}

} // namespace

ScalingCurve opp_delay_curve(std::size_t n, std::span<const double> ms, double c, bool refined)
{
    return sample_curve(refined ? Law::OppDelayRefined : Law::OppDelay, ms, c, {static_cast<double>(n), 4.0, 1.0}, n,
                        true);
}

ScalingCurve opp_power_curve(std::size_t n, std::span<const double> ms, double alpha, double c, bool refined)
{
    return sample_curve(refined ? Law::OppPowerRefined : Law::OppPower, ms, c, {static_cast<double>(n), alpha, 1.0},
                        n, true);
}

std::pair<ScalingCurve, ScalingCurve> baseline_curves(std::size_t n, std::span<const double> ms, double alpha,
                                                      double c_p, double c_d)
{
    const FitInput in{static_cast<double>(n), alpha, 1.0};
    return {sample_curve(Law::BasePower, ms, c_p, in, n, true), sample_curve(Law::BaseDelay, ms, c_d, in, n, true)};
}

ScalingCurve cutset_curve(std::size_t n, std::span<const double> ms, double c5)
{
    return sample_curve(Law::CutSet, ms, c5, {static_cast<double>(n), 4.0, 1.0}, n, true);
}

ScalingCurve outage_curve(std::span<const double> powers, double delay, double alpha, double c4)
{
    auto curve = sample_curve(Law::OutageCdf, powers, c4, {1024.0, alpha, delay}, 1024, false);
    curve.constants["D"] = delay;
    return curve;
}

FitResult fit_constant(Law law, std::span<const double> x, std::span<const double> y, const FitInput& in)
{
    if (x.size() != y.size()) throw FitError("fit: x and y differ in length");
    if (x.size() < 3) throw FitError(fmt::format("fit {}: need >= 3 records, got {}", to_string(law), x.size()));
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (!(*mn > 0.0) || *mx < 4.0 * *mn) {
        throw FitError(fmt::format("fit {}: x must span a factor >= 4 (got {} .. {})", to_string(law), *mn, *mx));
    }
    // Every law is y = c * shape(x) or, for the delay laws, y = shape(x) / c.
    // OppDelayRefined and OutageCdf are not separable in c; those are fitted
    // by a ternary search over log c.
    std::vector<double> ly;
    for (double v : y) {
        if (!(v > 0.0)) throw FitError(fmt::format("fit {}: non-positive y {}", to_string(law), v));
        ly.push_back(std::log(v));
    }
    auto residuals_for = [&](double c) {
        std::vector<double> r;
        for (std::size_t i = 0; i < x.size(); ++i) r.push_back(ly[i] - std::log(law_value(law, x[i], c, in)));
        return r;
    };
    auto sse = [](const std::vector<double>& r) {
        double s = 0.0;
        for (double v : r) s += std::isfinite(v) ? v * v : 1e300;
        return s;
    };

    FitResult res;
    if (law != Law::OppDelayRefined && law != Law::OutageCdf) {
        const bool inverse = law == Law::OppDelay;
        double mean = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) mean += ly[i] - std::log(law_value(law, x[i], 1.0, in));
        mean /= static_cast<double>(x.size());
        res.constant = inverse ? std::exp(-mean) : std::exp(mean);
    } else {
        double lo = std::log(1e-6);
        double hi = std::log(1e6);
        for (int i = 0; i < 200; ++i) {
            const double a = lo + (hi - lo) / 3.0;
            const double b = hi - (hi - lo) / 3.0;
            if (sse(residuals_for(std::exp(a))) < sse(residuals_for(std::exp(b)))) hi = b;
            else lo = a;
        }
        res.constant = std::exp(0.5 * (lo + hi));
    }
    res.residuals = residuals_for(res.constant);
    double mean_ly = 0.0;
    for (double v : ly) mean_ly += v;
    mean_ly /= static_cast<double>(ly.size());
    double sst = 0.0;
    for (double v : ly) sst += (v - mean_ly) * (v - mean_ly);
    const double ssr = sse(res.residuals);
    res.r2 = sst > 0.0 ? 1.0 - ssr / sst : (ssr == 0.0 ? 1.0 : 0.0);
    return res;
}

double fit_outage_c4(std::span<const double> critical_powers, double delay, double alpha)
{
    if (critical_powers.empty()) throw FitError("fit_outage_c4: no samples");
    double s = 0.0;
    for (double v : critical_powers) {
        require_positive(v, "critical power");
        s += 1.0 / v;
    }
    const double rate = static_cast<double>(critical_powers.size()) / s;
    return rate * std::pow(delay, alpha - 1.0);
}

double outage_ks_distance(std::span<const double> critical_powers, double c4, double delay, double alpha)
{
    std::vector<double> v(critical_powers.begin(), critical_powers.end());
    std::sort(v.begin(), v.end());
    const double scale = c4 / std::pow(delay, alpha - 1.0);
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = std::exp(-scale / v[i]);  // P(P_crit <= x)
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

bool strictly_increasing(std::span<const double> v)
{
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
    }
    return true;
}

bool strictly_decreasing(std::span<const double> v)
{
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) return false;
    }
    return true;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw FitError("linear_fit: need >= 2 paired samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw FitError("linear_fit: constant x");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

} // namespace oppnet
