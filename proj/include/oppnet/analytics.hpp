#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oppnet {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Law {
    OppPower,
    OppDelay,
    OppPowerRefined,
    OppDelayRefined,
    BasePower,
    BaseDelay,
    CutSet,
    OutageCdf,
};

inline constexpr Law kAllLaws[] = {Law::OppPower,  Law::OppDelay,  Law::OppPowerRefined, Law::OppDelayRefined,
                                   Law::BasePower, Law::BaseDelay, Law::CutSet,          Law::OutageCdf};

const char* to_string(Law law) noexcept;
Law parse_law(const std::string& s);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    bool in_regime = true;
};

struct ScalingCurve {
    Law law = Law::OppPower;
    std::map<std::string, double> constants;
    std::vector<CurvePoint> samples;
};

inline constexpr double kRegimeEpsilon = 0.05;

// [log2 n, n^(1/2 - eps)]
struct Regime {
    double low = 0.0;
    double high = 0.0;
    [[nodiscard]] bool contains(double m) const noexcept { return m >= low && m <= high; }
};
Regime pair_regime(std::size_t n, double eps = kRegimeEpsilon);

// D = M / (c log2 n)
double opp_delay(double n, double m, double c);
// M = c D log2(sqrt(n) / (D log2 n)), the refined form; only meaningful
// while the log argument exceeds 1.
double opp_pairs_refined(double n, double d, double c);
// Inverse of opp_pairs_refined on its increasing branch; NaN when M is out of reach.
double opp_delay_refined(double n, double m, double c);
// P = c (log2 n)^(alpha - 2) / M^(alpha - 1)
double opp_power(double n, double m, double alpha, double c);
// P = c / (M D^(alpha - 2)) with D from the refined delay.
double opp_power_refined(double n, double m, double alpha, double c);
double base_power(double m, double alpha, double c_p);
double base_delay(double m, double c_d);
// c5 M log2 n
double cutset_bound(double m, double n, double c5);

ScalingCurve opp_delay_curve(std::size_t n, std::span<const double> ms, double c, bool refined = false);
ScalingCurve opp_power_curve(std::size_t n, std::span<const double> ms, double alpha, double c, bool refined = false);
// Returns {power curve, delay curve}.
std::pair<ScalingCurve, ScalingCurve> baseline_curves(std::size_t n, std::span<const double> ms, double alpha,
                                                      double c_p, double c_d);
ScalingCurve cutset_curve(std::size_t n, std::span<const double> ms, double c5);
ScalingCurve outage_curve(std::span<const double> powers, double delay, double alpha, double c4);

struct FitInput {
    double n = 1024;
    double alpha = 4.0;
    double delay = 1.0;  // OutageCdf only
};

struct FitResult {
    double constant = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;  // log domain
};

// y(x) = law with one leading constant, fitted by least squares on log y.
// Needs >= 3 points spanning a factor >= 4 in x.
FitResult fit_constant(Law law, std::span<const double> x, std::span<const double> y, const FitInput& in);

// Law value with the leading constant c.
double law_value(Law law, double x, double c, const FitInput& in);

// Outage of an isolated link: with per-block critical per-pair power
// P_crit = eta N0 r^alpha D / |g|^2, the outage at power P is P(P_crit > P).
// Maximum-likelihood c4 and the Kolmogorov-Smirnov distance between the
// empirical outage curve and 1 - exp(-c4 / (P D^(alpha - 1))).
double fit_outage_c4(std::span<const double> critical_powers, double delay, double alpha);
double outage_ks_distance(std::span<const double> critical_powers, double c4, double delay, double alpha);

// Simple trend checks used by the sweep summary.
bool strictly_increasing(std::span<const double> v);
bool strictly_decreasing(std::span<const double> v);

// Least squares y = a + b x with coefficient of determination.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

} // namespace oppnet
