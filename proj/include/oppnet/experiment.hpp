#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppnet/channel.hpp"
#include "oppnet/routing.hpp"
#include "oppnet/tdma.hpp"
#include "oppnet/topology.hpp"

namespace oppnet {

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Formula: g = max(k, round(factor * D)).
// MatchDelay: the g whose Monte Carlo mean nominal hop count is closest to D.
enum class GridSizing { Formula, MatchDelay };
const char* to_string(GridSizing g) noexcept;
GridSizing parse_grid_sizing(const std::string& s);

// How M* is found for a sweep point.
//   Balance - power puts mean P_r at 1, then M is moved until mean P_I is 1.
//   Outage  - largest M whose delivery rate is >= 1 - epsilon0.
enum class MSearch { Balance, Outage };
const char* to_string(MSearch m) noexcept;
MSearch parse_m_search(const std::string& s);

enum class PowerPolicy { Fixed, NormalizeSignal, NormalizeInterference };
const char* to_string(PowerPolicy p) noexcept;
PowerPolicy parse_power_policy(const std::string& s);

struct SimConfig {
    std::size_t n = 1024;
    Placement placement = Placement::RegularGrid;
    PairPattern pairs = PairPattern::Random;
    ChannelParams channel;
    int tdma_k = 5;
    int baseline_tdma_k = 3;
    double grid_factor = 3.75;
    double baseline_grid_factor = 1.5;
    GridSizing grid_sizing = GridSizing::Formula;
    RelayRule relay_rule = RelayRule::Uniform;
    MSearch m_search = MSearch::Balance;
    PowerPolicy power_policy = PowerPolicy::NormalizeInterference;
    double fixed_power = 1.0;
    double epsilon0 = 0.05;
    double pr_tolerance = 0.02;
    double pi_tolerance = 0.10;
    std::size_t trials = 2000;
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;

    void validate() const;
    [[nodiscard]] int tdma_for(Engine e) const noexcept { return e == Engine::Opportunistic ? tdma_k : baseline_tdma_k; }
};

// n = 1024 regular grid, alpha = 4, 16-TDMA, routes spanning a row.
SimConfig regular_grid_preset();

int cells_per_side_for(const SimConfig& cfg, Engine engine, double delay);

// Mean nominal hops per route at grid size g.
double expected_hops(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t samples = 64);

// Everything fixed within one trial: placement, pairs, routes, the
// steady-state transmitter snapshot.
struct TrialSetup {
    NetworkLayout layout;
    std::vector<SdRoute> routes;
    TrafficSnapshot snapshot;
    TdmaSchedule schedule{3};
};

TrialSetup make_trial(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t pairs,
                      std::size_t trial);

struct TrialResult {
    std::vector<PacketResult> packets;
};

TrialResult simulate_trial(const SimConfig& cfg, Engine engine, const TrialSetup& setup, double per_hop_power,
                           std::size_t trial, bool probe);

struct Measurement {
    std::size_t trials = 0;
    std::size_t packets = 0;
    std::size_t delivered = 0;
    std::size_t hop_samples = 0;  // (hop, receiver) pairs
    double mean_pr = 0.0;         // desired-signal power, averaged over receivers
    double mean_pi = 0.0;         // interference power at the same receivers
    double mean_hops_delivered = kNaN;
    double mean_nominal_hops = 0.0;
    double mean_candidates = 0.0;
    std::vector<double> delivered_per_trial;

    [[nodiscard]] double delivery_rate() const noexcept
    {
        return packets ? static_cast<double>(delivered) / static_cast<double>(packets) : 0.0;
    }
    [[nodiscard]] double outage_rate() const noexcept { return 1.0 - delivery_rate(); }
};

// Runs cfg.trials trials. Hops keep going past an outage (probe mode) so the
// power statistics cover every hop; delivery is decided by the first outage.
Measurement measure(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t pairs, double per_hop_power);

enum class PowerTarget { Signal, Interference };

struct Calibration {
    double power = 0.0;
    double achieved = 0.0;
    Measurement measurement;
    int iterations = 0;
};

// Finds p with quantity(probe(p)) = target within a relative tolerance.
// Bracketing search in log p; steps use the local log-log slope and fall back
// to bisection whenever they would leave the bracket.
Calibration calibrate_power(const std::function<Measurement(double)>& probe, PowerTarget quantity, double target,
                            double tolerance, int max_iters, double initial_power = 1.0);

Calibration calibrate_power(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t pairs,
                            PowerTarget quantity, double target, double tolerance, int max_iters = 60,
                            double initial_power = 1.0);

struct MaxPairsResult {
    std::size_t m_star = 0;
    double per_hop_power = 0.0;
    Measurement at_star;
    bool bracket_validated = false;
    std::string diagnostics;
};

MaxPairsResult find_max_pairs(const SimConfig& cfg, Engine engine, int cells_per_side, double epsilon0);

struct OperatingPoint {
    Engine engine = Engine::Opportunistic;
    std::size_t n = 0;
    double alpha = 0.0;
    double d_target = 0.0;
    int cells_per_side = 0;
    std::size_t m_star = 0;
    double per_hop_power = 0.0;
    double d_measured = 0.0;
    double p_total = 0.0;
    double mean_pi = 0.0;
    double mean_pr = 0.0;
    double outage = 0.0;
    double throughput = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool accepted = false;
    std::string errors;
};

// Balance search: M moves until mean P_I falls in 1 +- pi_tolerance, power
// re-calibrated to mean P_r = 1 at every M.
OperatingPoint balance_operating_point(const SimConfig& cfg, Engine engine, double delay);

OperatingPoint tradeoff_point(const SimConfig& cfg, Engine engine, double delay);

// Points grouped by engine in the given order, sorted by M within each engine.
std::vector<OperatingPoint> run_tradeoff_sweep(const SimConfig& cfg, const std::vector<Engine>& engines,
                                               const std::vector<double>& delays);

struct BootstrapCi {
    double low = 0.0;
    double high = 0.0;
};

// Percentile bootstrap of the mean.
BootstrapCi bootstrap_mean_ci(const std::vector<double>& samples, std::size_t resamples, double level,
                              StreamKey key);

enum class Lemma { Occupancy = 1, PathsPerCell = 2, Interference = 3 };
const char* to_string(Lemma l) noexcept;

struct ConcentrationRequest {
    Lemma which = Lemma::Occupancy;
    double delay = 2.0;     // sets the grid through cfg's sizing rule
    std::size_t pairs = 0;  // paths per cell, interference
    std::size_t seeds = 100;
    std::size_t blocks = 1000;  // interference check only
    double delta = 0.5;
    double required_fraction = 0.95;
};

struct ConcentrationReport {
    Lemma which = Lemma::Occupancy;
    std::size_t instances = 0;
    std::size_t passed = 0;
    double pass_fraction = 0.0;
    double empirical_mean = 0.0;
    double bound_low = 0.0;
    double bound_high = 0.0;
    double required_fraction = 0.0;
    int cells_per_side = 0;
    bool pass = false;
};

// Occupancy: one instance per seed, passing when every cell count is inside
//          (1 +- delta) * n / g^2.
// Paths per cell: one instance per seed, passing when the largest paths-per-cell
//          count is inside (1 +- delta) * its mean over seeds.
// Interference: one instance per (receiver, block), passing when P_I is at most
//          (1 + delta) times that receiver's mean over fading.
ConcentrationReport verify_concentration(const SimConfig& cfg, const ConcentrationRequest& req);

// Runs fn(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

} // namespace oppnet
