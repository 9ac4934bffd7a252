#include "oppnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <mutex>
#include <thread>

namespace oppnet {

const char* to_string(GridSizing g) noexcept
{
    return g == GridSizing::Formula ? "formula" : "match_delay";
}

GridSizing parse_grid_sizing(const std::string& s)
{
    if (s == "formula") return GridSizing::Formula;
    if (s == "match_delay") return GridSizing::MatchDelay;
    throw ConfigError(fmt::format("grid_sizing: expected formula|match_delay, got '{}'", s));
}

const char* to_string(MSearch m) noexcept
{
    return m == MSearch::Balance ? "balance" : "outage";
}

MSearch parse_m_search(const std::string& s)
{
    if (s == "balance") return MSearch::Balance;
    if (s == "outage") return MSearch::Outage;
    throw ConfigError(fmt::format("m_search: expected balance|outage, got '{}'", s));
}

const char* to_string(PowerPolicy p) noexcept
{
    switch (p) {
    case PowerPolicy::Fixed: return "fixed";
    case PowerPolicy::NormalizeSignal: return "signal";
    case PowerPolicy::NormalizeInterference: return "interference";
    }
    return "?";
}

PowerPolicy parse_power_policy(const std::string& s)
{
    if (s == "fixed") return PowerPolicy::Fixed;
    if (s == "signal") return PowerPolicy::NormalizeSignal;
    if (s == "interference") return PowerPolicy::NormalizeInterference;
    throw ConfigError(fmt::format("power_policy: expected fixed|signal|interference, got '{}'", s));
}

const char* to_string(Lemma l) noexcept
{
    switch (l) {
    case Lemma::Occupancy: return "lemma1";
    case Lemma::PathsPerCell: return "lemma2";
    case Lemma::Interference: return "lemma3";
    }
    return "?";
}

void SimConfig::validate() const
{
    channel.validate();
    if (n < 4) throw ConfigError(fmt::format("n must be >= 4, got {}", n));
    TdmaSchedule{tdma_k};
    TdmaSchedule{baseline_tdma_k};
    if (!(grid_factor > 0.0)) throw ConfigError("grid_factor must be > 0");
    if (!(baseline_grid_factor > 0.0)) throw ConfigError("baseline_grid_factor must be > 0");
    if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) throw ConfigError(fmt::format("epsilon0 must be in (0,1), got {}", epsilon0));
    if (!(pr_tolerance > 0.0)) throw ConfigError("pr_tolerance must be > 0");
    if (!(pi_tolerance > 0.0)) throw ConfigError("pi_tolerance must be > 0");
    if (trials == 0) throw ConfigError("trials must be >= 1");
    if (jobs == 0) throw ConfigError("jobs must be >= 1");
    if (!(fixed_power > 0.0)) throw ConfigError("power must be > 0");
    if (placement == Placement::RegularGrid) place_nodes(n, placement, seed);
    if (placement != Placement::RegularGrid && pairs != PairPattern::Random) {
        throw ConfigError("pairs=row and pairs=row_span need placement=regular");
    }
}

SimConfig regular_grid_preset()
{
    SimConfig cfg;
    cfg.n = 1024;
    cfg.placement = Placement::RegularGrid;
    cfg.pairs = PairPattern::RowSpan;
    cfg.channel.alpha = 4.0;
    cfg.tdma_k = 4;
    cfg.baseline_tdma_k = 3;
    cfg.grid_sizing = GridSizing::MatchDelay;
    return cfg;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn)
{
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::min<std::size_t>(count, 256))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

StreamKey root(const SimConfig& cfg)
{
    return StreamKey(cfg.seed);
}

std::vector<Point> trial_positions(const SimConfig& cfg, std::size_t trial)
{
    return place_nodes(cfg.n, cfg.placement, root(cfg).child(Stream::Topology).child(trial).state());
}

int max_cells_per_side(const SimConfig& cfg)
{
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(cfg.n)))));
}

} // namespace

namespace {

struct RouteShape {
    double hops = 0.0;
    double advances = 0.0;
};

RouteShape route_shape(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t samples)
{
    const StreamKey key = root(cfg).child(Stream::GridSizing);
    const std::size_t pairs = std::max<std::size_t>(1, std::min<std::size_t>(8, cfg.n / 8));
    RouteShape shape;
    std::size_t count = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        auto layout = build_layout(place_nodes(cfg.n, cfg.placement, key.child(s).state()), cfg.placement,
                                   cells_per_side);
        auto sd = draw_sd_pairs(layout, pairs, cfg.pairs, key.child({s, 1}));
        auto routes = engine == Engine::Opportunistic ? build_opportunistic_routes(sd) : build_baseline_routes(layout, sd);
        for (const auto& r : routes) {
            shape.hops += static_cast<double>(r.hop_count());
            shape.advances += static_cast<double>(r.cell_path.size() - 1);
            ++count;
        }
    }
    if (count) {
        shape.hops /= static_cast<double>(count);
        shape.advances /= static_cast<double>(count);
    }
    return shape;
}

} // namespace

double expected_hops(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t samples)
{
    return route_shape(cfg, engine, cells_per_side, samples).hops;
}

int cells_per_side_for(const SimConfig& cfg, Engine engine, double delay)
{
    const int k = cfg.tdma_for(engine);
    if (cfg.grid_sizing == GridSizing::Formula) {
        const double factor = engine == Engine::Opportunistic ? cfg.grid_factor : cfg.baseline_grid_factor;
        return cells_per_side_for_delay(delay, factor, k);
    }
    if (!(delay >= 1.0)) throw ConfigError(fmt::format("target delay must be >= 1 hop, got {}", delay));
    // Closest mean hop count wins; among equally close grids prefer the one
    // whose hops advance by the nominal step (2.5 cells opportunistic, 1 cell
    // baseline), which avoids padded in-cell hops.
    const double nominal_step = engine == Engine::Opportunistic ? 2.5 : 1.0;
    int best = k;
    double best_err = std::numeric_limits<double>::infinity();
    double best_step_err = std::numeric_limits<double>::infinity();
    for (int g = k; g <= max_cells_per_side(cfg); ++g) {
        RouteShape shape;
        try {
            shape = route_shape(cfg, engine, g, 64);
        } catch (const ConfigError&) {
            break;  // pairs no longer fit the pattern at this resolution
        }
        const double err = std::abs(shape.hops - delay);
        const double step_err = shape.hops > 0.0 ? std::abs(shape.advances / shape.hops - nominal_step) : 1e9;
        if (err < best_err - 1e-9 || (err <= best_err + 1e-9 && step_err < best_step_err - 1e-9)) {
            best_err = err;
            best_step_err = step_err;
            best = g;
        }
    }
    return best;
}

TrialSetup make_trial(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t pairs, std::size_t trial)
{
    TrialSetup s;
    s.schedule = TdmaSchedule(cfg.tdma_for(engine));
    if (cells_per_side < s.schedule.k()) {
        throw ConfigError(fmt::format("{}x{} cells is too coarse for {}-TDMA", cells_per_side, cells_per_side,
                                      s.schedule.slot_count()));
    }
    s.layout = build_layout(trial_positions(cfg, trial), cfg.placement, cells_per_side);
    const auto sd = draw_sd_pairs(s.layout, pairs, cfg.pairs, root(cfg).child(Stream::Pairs).child(trial));
    s.routes = engine == Engine::Opportunistic ? build_opportunistic_routes(sd) : build_baseline_routes(s.layout, sd);
    s.snapshot = TrafficSnapshot(s.layout, s.routes, s.schedule, engine, root(cfg).child(Stream::Snapshot).child(trial));
    return s;
}

TrialResult simulate_trial(const SimConfig& cfg, Engine engine, const TrialSetup& setup, double per_hop_power,
                           std::size_t trial, bool probe)
{
    NetworkState st;
    st.layout = &setup.layout;
    st.routes = setup.routes;
    st.snapshot = &setup.snapshot;
    st.schedule = setup.schedule;
    st.params = cfg.channel;
    st.per_hop_power = per_hop_power;
    st.engine = engine;
    st.relay_rule = cfg.relay_rule;
    st.fading = root(cfg).child(Stream::Fading).child(trial);
    st.selection = root(cfg).child(Stream::Selection).child(trial);
    TrialResult out;
    out.packets.reserve(setup.routes.size());
    for (std::size_t m = 0; m < setup.routes.size(); ++m) {
        out.packets.push_back(deliver_packet(st, m, {probe}));
    }
    return out;
}

namespace {

struct TrialStats {
    std::size_t packets = 0;
    std::size_t delivered = 0;
    std::size_t hop_samples = 0;
    std::size_t candidate_samples = 0;
    double sum_pr = 0.0;
    double sum_pi = 0.0;
    double sum_hops_delivered = 0.0;
    double sum_nominal = 0.0;
    double sum_candidates = 0.0;
};

} // namespace

Measurement measure(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t pairs, double per_hop_power)
{
    if (pairs == 0) throw ConfigError("pairs must be >= 1");
    std::vector<TrialStats> stats(cfg.trials);
    // Placement and routes fail the same way in every trial; surface config
    // errors before fanning out.
    (void)make_trial(cfg, engine, cells_per_side, pairs, 0);
    parallel_for(cfg.trials, cfg.jobs, [&](std::size_t t) {
        const auto setup = make_trial(cfg, engine, cells_per_side, pairs, t);
        const auto res = simulate_trial(cfg, engine, setup, per_hop_power, t, true);
        TrialStats& s = stats[t];
        for (std::size_t m = 0; m < res.packets.size(); ++m) {
            const auto& pk = res.packets[m];
            const double nominal = static_cast<double>(setup.routes[m].hop_count());
            ++s.packets;
            s.sum_nominal += nominal;
            if (pk.delivered) {
                ++s.delivered;
                s.sum_hops_delivered += static_cast<double>(pk.hops_taken);
            }
            for (const auto& h : pk.per_hop) {
                if (h.receivers > 0) {
                    const double w = static_cast<double>(h.receivers);
                    s.hop_samples += h.receivers;
                    s.sum_pr += w * h.mean_signal;
                    s.sum_pi += w * h.mean_interference;
                }
                if (!pk.outage_hop || h.hop_index <= *pk.outage_hop) {
                    ++s.candidate_samples;
                    s.sum_candidates += static_cast<double>(h.candidate_count);
                }
            }
        }
    });

    Measurement out;
    out.trials = cfg.trials;
    TrialStats total;
    out.delivered_per_trial.reserve(cfg.trials);
    for (const auto& s : stats) {
        total.packets += s.packets;
        total.delivered += s.delivered;
        total.hop_samples += s.hop_samples;
        total.candidate_samples += s.candidate_samples;
        total.sum_pr += s.sum_pr;
        total.sum_pi += s.sum_pi;
        total.sum_hops_delivered += s.sum_hops_delivered;
        total.sum_nominal += s.sum_nominal;
        total.sum_candidates += s.sum_candidates;
        out.delivered_per_trial.push_back(static_cast<double>(s.delivered));
    }
    out.packets = total.packets;
    out.delivered = total.delivered;
    out.hop_samples = total.hop_samples;
    if (total.hop_samples) {
        out.mean_pr = total.sum_pr / static_cast<double>(total.hop_samples);
        out.mean_pi = total.sum_pi / static_cast<double>(total.hop_samples);
    }
    if (total.delivered) out.mean_hops_delivered = total.sum_hops_delivered / static_cast<double>(total.delivered);
    if (total.packets) out.mean_nominal_hops = total.sum_nominal / static_cast<double>(total.packets);
    if (total.candidate_samples) out.mean_candidates = total.sum_candidates / static_cast<double>(total.candidate_samples);
    return out;
}

Calibration calibrate_power(const std::function<Measurement(double)>& probe, PowerTarget quantity, double target,
                            double tolerance, int max_iters, double initial_power)
{
    if (!(target > 0.0) || !(tolerance > 0.0) || !(initial_power > 0.0)) {
        throw std::invalid_argument("calibrate_power: target, tolerance and initial power must be positive");
    }
    auto value = [&](const Measurement& m) { return quantity == PowerTarget::Signal ? m.mean_pr : m.mean_pi; };
    const double log_target = std::log(target);
    double lo = -std::numeric_limits<double>::infinity();  // log p with value below target
    double hi = std::numeric_limits<double>::infinity();   // log p with value above target
    double x = std::log(initial_power);
    double prev_x = 0.0;
    double prev_y = 0.0;
    bool have_prev = false;
    Calibration c;
    std::string trail;
    for (int it = 1; it <= max_iters; ++it) {
        const double p = std::exp(x);
        Measurement m = probe(p);
        const double v = value(m);
        c.iterations = it;
        trail += fmt::format(" {:.4g}->{:.4g}", p, v);
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw CalibrationError(fmt::format("calibration: measured quantity {} at power {:.6g}", v, p));
        }
        if (std::abs(v / target - 1.0) <= tolerance) {
            c.power = p;
            c.achieved = v;
            c.measurement = std::move(m);
            return c;
        }
        const double y = std::log(v) - log_target;
        if (y < 0) lo = std::max(lo, x);
        else hi = std::min(hi, x);

        double slope = 1.0;
        if (have_prev && std::abs(x - prev_x) > 1e-12) {
            slope = std::clamp((y - prev_y) / (x - prev_x), 0.25, 4.0);
        }
        double next = x - y / slope;
        const bool bracketed = std::isfinite(lo) && std::isfinite(hi);
        if (bracketed && !(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (bracketed && hi - lo < 1e-13) break;
        prev_x = x;
        prev_y = y;
        have_prev = true;
        x = next;
    }
    throw CalibrationError(fmt::format("calibration did not reach {} +- {} in {} iterations (power->value:{})", target,
                                       tolerance, max_iters, trail));
}

Calibration calibrate_power(const SimConfig& cfg, Engine engine, int cells_per_side, std::size_t pairs,
                            PowerTarget quantity, double target, double tolerance, int max_iters, double initial_power)
{
    return calibrate_power([&](double p) { return measure(cfg, engine, cells_per_side, pairs, p); }, quantity, target,
                           tolerance, max_iters, initial_power);
}

namespace {

// Rough power putting the mean received power near 1 for a hop of a few cells.
double initial_power_guess(const SimConfig& cfg, int cells_per_side)
{
    return std::pow(2.5 / cells_per_side, cfg.channel.alpha);
}

struct PolicyProbe {
    double power = 0.0;
    Measurement m;
};

PolicyProbe probe_with_policy(const SimConfig& cfg, Engine engine, int g, std::size_t pairs, double& warm_start)
{
    const int iters = 60;
    switch (cfg.power_policy) {
    case PowerPolicy::Fixed:
        return {cfg.fixed_power, measure(cfg, engine, g, pairs, cfg.fixed_power)};
    case PowerPolicy::NormalizeSignal: {
        auto c = calibrate_power(cfg, engine, g, pairs, PowerTarget::Signal, 1.0, cfg.pr_tolerance, iters, warm_start);
        warm_start = c.power;
        return {c.power, std::move(c.measurement)};
    }
    case PowerPolicy::NormalizeInterference: {
        // No interference at all (single route, nothing co-active): fall back to
        // the received-power normalisation.
        auto first = measure(cfg, engine, g, pairs, warm_start);
        if (!(first.mean_pi > 0.0)) {
            auto c = calibrate_power(cfg, engine, g, pairs, PowerTarget::Signal, 1.0, cfg.pr_tolerance, iters,
                                     warm_start);
            warm_start = c.power;
            return {c.power, std::move(c.measurement)};
        }
        auto c = calibrate_power(cfg, engine, g, pairs, PowerTarget::Interference, 1.0, cfg.pr_tolerance, iters,
                                 warm_start / first.mean_pi);
        warm_start = c.power;
        return {c.power, std::move(c.measurement)};
    }
    }
    return {};
}

} // namespace

MaxPairsResult find_max_pairs(const SimConfig& cfg, Engine engine, int cells_per_side, double epsilon0)
{
    MaxPairsResult res;
    double warm = cfg.power_policy == PowerPolicy::Fixed ? cfg.fixed_power : initial_power_guess(cfg, cells_per_side);
    std::map<std::size_t, std::optional<PolicyProbe>> seen;  // nullopt: infeasible
    std::map<std::size_t, std::string> notes;
    auto feasible = [&](std::size_t m) -> bool {
        auto it = seen.find(m);
        if (it == seen.end()) {
            std::optional<PolicyProbe> r;
            try {
                auto pr = probe_with_policy(cfg, engine, cells_per_side, m, warm);
                if (pr.m.delivery_rate() >= 1.0 - epsilon0) r = std::move(pr);
                else notes[m] = fmt::format("delivery {:.4f}", pr.m.delivery_rate());
            } catch (const ConfigError& e) {
                notes[m] = e.what();
            }
            it = seen.emplace(m, std::move(r)).first;
        }
        return it->second.has_value();
    };

    if (!feasible(1)) {
        res.diagnostics = fmt::format("M=1 infeasible: {}", notes[1]);
        return res;
    }
    const std::size_t cap = cfg.n / 2;
    std::size_t good = 1;
    std::size_t bad = 0;
    for (std::size_t m = 2; m <= cap; m *= 2) {
        if (feasible(m)) {
            good = m;
        } else {
            bad = m;
            break;
        }
    }
    if (bad == 0) {
        if (good < cap && !feasible(cap)) bad = cap;
        else good = cap;
    }
    if (bad != 0) {
        while (bad - good > 1) {
            const std::size_t mid = good + (bad - good) / 2;
            if (feasible(mid)) good = mid;
            else bad = mid;
        }
    }
    res.m_star = good;
    const auto& star = *seen[good];
    res.per_hop_power = star.power;
    res.at_star = star.m;
    res.bracket_validated = bad == 0 ? true : (feasible(good) && !feasible(good + 1));
    if (bad != 0) res.diagnostics = fmt::format("M={} infeasible: {}", good + 1, notes[good + 1]);
    else res.diagnostics = "feasible up to 2M = n";
    return res;
}

BootstrapCi bootstrap_mean_ci(const std::vector<double>& samples, std::size_t resamples, double level, StreamKey key)
{
    if (samples.empty()) return {kNaN, kNaN};
    if (resamples == 0) throw std::invalid_argument("bootstrap: zero resamples");
    Rng rng(key);
    std::vector<double> means;
    means.reserve(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) s += samples[rng.index(samples.size())];
        means.push_back(s / static_cast<double>(samples.size()));
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    auto at = [&](double q) {
        auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1) + 0.5));
        return means[std::min(i, resamples - 1)];
    };
    return {at(tail), at(1.0 - tail)};
}

namespace {

void fill_point(OperatingPoint& op, const SimConfig& cfg, std::size_t m, double power, const Measurement& meas)
{
    op.m_star = m;
    op.per_hop_power = power;
    op.mean_pi = meas.mean_pi;
    op.mean_pr = meas.mean_pr;
    op.outage = meas.outage_rate();
    if (meas.delivered > 0) {
        op.d_measured = meas.mean_hops_delivered;
    } else {
        op.d_measured = meas.mean_nominal_hops;
        if (!op.errors.empty()) op.errors += "; ";
        op.errors += "no packet delivered, delay from nominal hops";
    }
    op.p_total = power * op.d_measured;
    op.throughput = static_cast<double>(m) * meas.delivery_rate();
    const auto ci = bootstrap_mean_ci(meas.delivered_per_trial, cfg.bootstrap, 0.95,
                                      root(cfg).child(Stream::Bootstrap).child({static_cast<std::uint64_t>(op.engine), m}));
    op.ci_low = ci.low;
    op.ci_high = ci.high;
}

} // namespace

OperatingPoint balance_operating_point(const SimConfig& cfg, Engine engine, double delay)
{
    OperatingPoint op;
    op.engine = engine;
    op.n = cfg.n;
    op.alpha = cfg.channel.alpha;
    op.d_target = delay;
    const int g = cells_per_side_for(cfg, engine, delay);
    op.cells_per_side = g;

    struct Probe {
        double power;
        Measurement m;
    };
    std::map<std::size_t, Probe> seen;
    std::size_t cap = cfg.n / 2;
    double warm = initial_power_guess(cfg, g);
    auto eval = [&](std::size_t m) -> const Probe* {
        if (auto it = seen.find(m); it != seen.end()) return &it->second;
        try {
            auto c = calibrate_power(cfg, engine, g, m, PowerTarget::Signal, 1.0, cfg.pr_tolerance, 60, warm);
            warm = c.power;
            return &seen.emplace(m, Probe{c.power, std::move(c.measurement)}).first->second;
        } catch (const ConfigError&) {
            cap = std::min(cap, m - 1);
            return nullptr;
        }
    };
    auto in_window = [&](const Probe& p) { return std::abs(p.m.mean_pi - 1.0) <= cfg.pi_tolerance; };

    std::size_t m = std::clamp<std::size_t>(8, 1, cap);
    std::size_t chosen = 0;
    for (int iter = 0; iter < 24 && m >= 1; ++iter) {
        const Probe* p = eval(m);
        if (!p) {
            if (cap == 0) break;
            m = std::min(m, cap);
            continue;
        }
        if (in_window(*p)) {
            chosen = m;
            break;
        }
        // Nearest evaluated points below and above the target.
        const std::pair<const std::size_t, Probe>* below = nullptr;
        const std::pair<const std::size_t, Probe>* above = nullptr;
        for (const auto& e : seen) {
            if (e.second.m.mean_pi < 1.0) {
                if (!below || e.first > below->first) below = &e;
            } else if (!above || e.first < above->first) {
                above = &e;
            }
        }
        double guess = 0.0;
        if (below && above) {
            const double x0 = static_cast<double>(below->first), y0 = below->second.m.mean_pi;
            const double x1 = static_cast<double>(above->first), y1 = above->second.m.mean_pi;
            guess = x0 + (1.0 - y0) * (x1 - x0) / (y1 - y0);
        } else if (p->m.mean_pi > 0.0) {
            guess = static_cast<double>(m) / p->m.mean_pi;
        } else {
            guess = 2.0 * static_cast<double>(m);
        }
        std::size_t next = static_cast<std::size_t>(std::clamp(std::llround(guess), 1LL, static_cast<long long>(cap)));
        if (below && above) {
            if (above->first - below->first <= 1) break;  // adjacent M straddle the window
            next = std::clamp(next, below->first + 1, above->first - 1);
        }
        if (seen.count(next)) {
            const bool up = p->m.mean_pi < 1.0;
            next = up ? m + 1 : (m > 1 ? m - 1 : 1);
            if (seen.count(next) || next > cap) break;
        }
        m = next;
    }

    if (seen.empty()) {
        op.errors = "no feasible pair count";
        return op;
    }
    if (chosen == 0) {
        chosen = seen.begin()->first;
        for (const auto& e : seen) {
            if (std::abs(e.second.m.mean_pi - 1.0) < std::abs(seen.at(chosen).m.mean_pi - 1.0)) chosen = e.first;
        }
        op.errors = fmt::format("mean P_I {:.4f} outside 1 +- {}", seen.at(chosen).m.mean_pi, cfg.pi_tolerance);
    }
    const Probe& best = seen.at(chosen);
    fill_point(op, cfg, chosen, best.power, best.m);
    op.accepted = in_window(best) && std::abs(best.m.mean_pr - 1.0) <= cfg.pr_tolerance;
    return op;
}

OperatingPoint tradeoff_point(const SimConfig& cfg, Engine engine, double delay)
{
    if (cfg.m_search == MSearch::Balance) return balance_operating_point(cfg, engine, delay);
    OperatingPoint op;
    op.engine = engine;
    op.n = cfg.n;
    op.alpha = cfg.channel.alpha;
    op.d_target = delay;
    op.cells_per_side = cells_per_side_for(cfg, engine, delay);
    auto r = find_max_pairs(cfg, engine, op.cells_per_side, cfg.epsilon0);
    if (r.m_star == 0) {
        op.errors = r.diagnostics;
        return op;
    }
    if (!r.bracket_validated) op.errors = "non-monotone delivery around M*";
    fill_point(op, cfg, r.m_star, r.per_hop_power, r.at_star);
    op.accepted = r.bracket_validated && op.outage <= cfg.epsilon0;
    return op;
}

std::vector<OperatingPoint> run_tradeoff_sweep(const SimConfig& cfg, const std::vector<Engine>& engines,
                                               const std::vector<double>& delays)
{
    std::vector<OperatingPoint> out;
    for (Engine e : engines) {
        std::vector<OperatingPoint> pts;
        for (double d : delays) {
            try {
                pts.push_back(tradeoff_point(cfg, e, d));
            } catch (const std::exception& ex) {
                OperatingPoint op;
                op.engine = e;
                op.n = cfg.n;
                op.alpha = cfg.channel.alpha;
                op.d_target = d;
                op.errors = ex.what();
                pts.push_back(std::move(op));
            }
        }
        std::stable_sort(pts.begin(), pts.end(),
                         [](const OperatingPoint& a, const OperatingPoint& b) { return a.m_star < b.m_star; });
        out.insert(out.end(), pts.begin(), pts.end());
    }
    return out;
}

namespace {

ConcentrationReport finish(ConcentrationReport r)
{
    r.pass_fraction = r.instances ? static_cast<double>(r.passed) / static_cast<double>(r.instances) : 0.0;
    r.pass = r.instances > 0 && r.pass_fraction >= r.required_fraction;
    return r;
}

ConcentrationReport verify_occupancy(const SimConfig& cfg, const ConcentrationRequest& req, int g)
{
    ConcentrationReport r;
    r.which = Lemma::Occupancy;
    r.cells_per_side = g;
    r.required_fraction = req.required_fraction;
    const double mean = static_cast<double>(cfg.n) / (static_cast<double>(g) * g);
    r.empirical_mean = mean;
    r.bound_low = (1.0 - req.delta) * mean;
    r.bound_high = (1.0 + req.delta) * mean;
    std::vector<char> ok(req.seeds, 0);
    parallel_for(req.seeds, cfg.jobs, [&](std::size_t s) {
        const auto layout = build_layout(trial_positions(cfg, s), cfg.placement, g);
        bool all = true;
        for (const auto& cell : layout.cell_members) {
            const double c = static_cast<double>(cell.size());
            if (!(c > r.bound_low && c < r.bound_high)) {
                all = false;
                break;
            }
        }
        ok[s] = all;
    });
    r.instances = req.seeds;
    r.passed = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    return finish(r);
}

ConcentrationReport verify_paths(const SimConfig& cfg, const ConcentrationRequest& req, int g)
{
    ConcentrationReport r;
    r.which = Lemma::PathsPerCell;
    r.cells_per_side = g;
    r.required_fraction = req.required_fraction;
    std::vector<double> maxima(req.seeds, 0.0);
    parallel_for(req.seeds, cfg.jobs, [&](std::size_t s) {
        const auto layout = build_layout(trial_positions(cfg, s), cfg.placement, g);
        const auto sd = draw_sd_pairs(layout, req.pairs, cfg.pairs, root(cfg).child(Stream::Pairs).child(s));
        const auto routes = build_opportunistic_routes(sd);
        const auto counts = paths_per_cell(layout.grid, routes);
        maxima[s] = *std::max_element(counts.begin(), counts.end());
    });
    double mean = 0.0;
    for (double v : maxima) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(1, maxima.size()));
    r.empirical_mean = mean;
    r.bound_low = (1.0 - req.delta) * mean;
    r.bound_high = (1.0 + req.delta) * mean;
    r.instances = maxima.size();
    for (double v : maxima) {
        if (v >= r.bound_low && v <= r.bound_high) ++r.passed;
    }
    return finish(r);
}

ConcentrationReport verify_interference(const SimConfig& cfg, const ConcentrationRequest& req, int g)
{
    ConcentrationReport r;
    r.which = Lemma::Interference;
    r.cells_per_side = g;
    r.required_fraction = req.required_fraction;
    r.bound_low = 0.0;
    r.bound_high = 1.0 + req.delta;
    struct SeedTally {
        std::size_t instances = 0;
        std::size_t passed = 0;
        double sum_mean = 0.0;
        std::size_t receivers = 0;
    };
    std::vector<SeedTally> tally(req.seeds);
    const double p = 1.0;
    parallel_for(req.seeds, cfg.jobs, [&](std::size_t s) {
        const auto setup = make_trial(cfg, Engine::Opportunistic, g, req.pairs, s);
        const auto& pos = setup.layout.positions;
        const StreamKey fading = root(cfg).child(Stream::Fading).child(s);
        struct Link {
            NodeId tx;
            double weight;
        };
        struct Receiver {
            NodeId rx;
            std::vector<Link> links;
            double mean = 0.0;
        };
        std::vector<Receiver> receivers;
        for (int slot = 0; slot < setup.snapshot.slot_count(); ++slot) {
            const auto on_air = setup.snapshot.slot(slot);
            auto on_air_node = [&](NodeId id) {
                return std::any_of(on_air.begin(), on_air.end(), [&](const auto& t) { return t.node == id; });
            };
            for (const auto& self : on_air) {
                const auto& route = setup.routes[self.route];
                const auto& hop = route.hops[self.hop];
                std::vector<NodeId> rxs;
                if (hop.mode == HopMode::Mode2Step2) {
                    rxs.push_back(route.pair.destination);
                } else {
                    for (NodeId id : setup.layout.members(hop.to)) {
                        if (id != route.pair.destination && !on_air_node(id)) rxs.push_back(id);
                    }
                }
                for (NodeId rx : rxs) {
                    Receiver rec;
                    rec.rx = rx;
                    for (const auto& t : on_air) {
                        if (t.route == self.route || t.node == rx) continue;
                        const double w = p * path_gain(distance(pos[t.node], pos[rx]), cfg.channel.alpha);
                        rec.links.push_back({t.node, w});
                        rec.mean += w;
                    }
                    if (rec.mean > 0.0) receivers.push_back(std::move(rec));
                }
            }
        }
        SeedTally& st = tally[s];
        for (const auto& rec : receivers) {
            st.sum_mean += rec.mean;
            ++st.receivers;
            const double limit = (1.0 + req.delta) * rec.mean;
            for (std::size_t b = 0; b < req.blocks; ++b) {
                const ChannelSample sample(fading, b, cfg.channel.fading);
                double pi = 0.0;
                for (const auto& l : rec.links) pi += sample.gain(l.tx, rec.rx) * l.weight;
                ++st.instances;
                if (pi <= limit) ++st.passed;
            }
        }
    });
    std::size_t receivers = 0;
    double sum_mean = 0.0;
    for (const auto& t : tally) {
        r.instances += t.instances;
        r.passed += t.passed;
        receivers += t.receivers;
        sum_mean += t.sum_mean;
    }
    r.empirical_mean = receivers ? sum_mean / static_cast<double>(receivers) : 0.0;
    return finish(r);
}

} // namespace

ConcentrationReport verify_concentration(const SimConfig& cfg, const ConcentrationRequest& req)
{
    if (req.which != Lemma::Interference && !(req.delta > 0.0 && req.delta <= 1.0)) {
        throw ConfigError(fmt::format("delta must be in (0, 1], got {}", req.delta));
    }
    if (!(req.delta > 0.0)) throw ConfigError(fmt::format("delta must be > 0, got {}", req.delta));
    if (req.seeds == 0) throw ConfigError("seeds must be >= 1");
    const int g = cells_per_side_for(cfg, Engine::Opportunistic, req.delay);
    switch (req.which) {
    case Lemma::Occupancy: return verify_occupancy(cfg, req, g);
    case Lemma::PathsPerCell:
        if (req.pairs == 0) throw ConfigError("lemma 2 needs pairs >= 1");
        return verify_paths(cfg, req, g);
    case Lemma::Interference:
        if (req.pairs == 0) throw ConfigError("lemma 3 needs pairs >= 1");
        if (req.blocks == 0) throw ConfigError("lemma 3 needs blocks >= 1");
        return verify_interference(cfg, req, g);
    }
    return {};
}

} // namespace oppnet
