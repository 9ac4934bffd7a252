#include "oppnet/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "oppnet/analytics.hpp"
#include "oppnet/csv.hpp"

namespace oppnet {

namespace fs = std::filesystem;

namespace {

fs::path prepare_output(const RunConfig& cfg)
{
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    std::ofstream echo(dir / "config.resolved");
    write_resolved_config(echo, cfg);
    return dir;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    return out;
}

} // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log)
{
    validate(cfg);
    const auto dir = prepare_output(cfg);
    auto out = open_output(dir / "trials.csv");
    CsvWriter w(out);
    w.comment("oppnet trials v1");
    w.row({"engine", "trial", "M", "D_target", "cells_per_side", "per_hop_power", "packets", "delivered",
           "outage_rate", "mean_hops_delivered", "mean_PI", "mean_Pr"});
    std::ofstream trace_file;
    std::optional<CsvWriter> trace;
    if (cfg.trace) {
        trace_file = open_output(dir / "trace.csv");
        trace.emplace(trace_file);
        trace->comment("oppnet trace v1");
        trace->row({"engine", "trial", "pair", "hop", "mode", "slot", "candidates", "sinr", "interference",
                    "outcome"});
    }

    for (Engine engine : cfg.engines) {
        const int g = cells_per_side_for(cfg.sim, engine, cfg.delay);
        double power = cfg.power;
        if (power <= 0.0) {
            power = calibrate_power(cfg.sim, engine, g, cfg.pairs, PowerTarget::Signal, 1.0, cfg.sim.pr_tolerance, 60,
                                    std::pow(2.5 / g, cfg.sim.channel.alpha))
                        .power;
        }
        std::size_t delivered_total = 0;
        std::size_t packets_total = 0;
        for (std::size_t t = 0; t < cfg.sim.trials; ++t) {
            const auto setup = make_trial(cfg.sim, engine, g, cfg.pairs, t);
            if (t == 0 && setup.layout.occupancy_warning) {
                fmt::print(log, "warning: expected cell occupancy {:.3g} is below {}\n",
                           setup.layout.expected_occupancy(), kMinExpectedOccupancy);
            }
            const auto res = simulate_trial(cfg.sim, engine, setup, power, t, false);
            std::size_t delivered = 0;
            double hops = 0.0, pi = 0.0, pr = 0.0;
            std::size_t samples = 0;
            for (const auto& pk : res.packets) {
                if (pk.delivered) {
                    ++delivered;
                    hops += static_cast<double>(pk.hops_taken);
                }
                for (const auto& h : pk.per_hop) {
                    if (h.receivers > 0) {
                        const double wgt = static_cast<double>(h.receivers);
                        pi += wgt * h.mean_interference;
                        pr += wgt * h.mean_signal;
                        samples += h.receivers;
                    }
                    if (trace) {
                        trace->row({to_string(engine), std::to_string(t), std::to_string(pk.pair_index),
                                    std::to_string(h.hop_index), to_string(h.mode),
                                    std::to_string(h.time % static_cast<std::uint64_t>(setup.schedule.slot_count())),
                                    std::to_string(h.candidate_count), format_number(h.measured_sinr),
                                    format_number(h.measured_interference), h.outage ? "outage" : "ok"});
                    }
                }
            }
            delivered_total += delivered;
            packets_total += res.packets.size();
            const double np = static_cast<double>(res.packets.size());
            w.row({to_string(engine), std::to_string(t), std::to_string(cfg.pairs), format_number(cfg.delay),
                   std::to_string(g), format_number(power), std::to_string(res.packets.size()),
                   std::to_string(delivered), format_number(1.0 - static_cast<double>(delivered) / np),
                   format_number(delivered ? hops / static_cast<double>(delivered) : kNaN),
                   format_number(samples ? pi / static_cast<double>(samples) : kNaN),
                   format_number(samples ? pr / static_cast<double>(samples) : kNaN)});
        }
        fmt::print(log, "{}: g={} power={:.6g} delivered {}/{}\n", to_string(engine), g, power, delivered_total,
                   packets_total);
    }
    fmt::print(log, "wrote {}\n", (dir / "trials.csv").string());
    return kExitOk;
}

TrendVerdict trend_verdict(const std::vector<OperatingPoint>& points, Engine engine)
{
    std::vector<const OperatingPoint*> pts;
    for (const auto& p : points) {
        if (p.engine == engine && p.m_star > 0) pts.push_back(&p);
    }
    TrendVerdict v;
    if (pts.size() < 2) return v;
    auto by_d = pts;
    std::sort(by_d.begin(), by_d.end(), [](auto a, auto b) { return a->d_target < b->d_target; });
    std::vector<double> m;
    for (auto p : by_d) m.push_back(static_cast<double>(p->m_star));
    v.m_increasing_in_d = strictly_increasing(m);
    auto by_m = pts;
    std::sort(by_m.begin(), by_m.end(), [](auto a, auto b) { return a->m_star < b->m_star; });
    std::vector<double> p_total;
    for (std::size_t i = 0; i < by_m.size(); ++i) {
        if (i && by_m[i]->m_star == by_m[i - 1]->m_star) return v;  // ties cannot be strictly ordered
        p_total.push_back(by_m[i]->p_total);
    }
    v.power_decreasing_in_m = strictly_decreasing(p_total);
    return v;
}

DominanceCheck power_dominance(const std::vector<OperatingPoint>& points, double tolerance)
{
    DominanceCheck c;
    bool all_lower = true;
    for (const auto& o : points) {
        if (o.engine != Engine::Opportunistic || o.m_star == 0) continue;
        bool matched = false;
        for (const auto& b : points) {
            if (b.engine != Engine::Baseline || b.m_star == 0) continue;
            if (std::abs(b.d_measured - o.d_measured) <= tolerance * o.d_measured) {
                matched = true;
                if (!(o.p_total < b.p_total)) all_lower = false;
            }
        }
        if (matched) ++c.matched;
        else ++c.unmatched;
    }
    c.pass = c.matched > 0 && c.unmatched == 0 && all_lower;
    return c;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log)
{
    validate(cfg);
    const auto dir = prepare_output(cfg);
    const auto points = run_tradeoff_sweep(cfg.sim, cfg.engines, cfg.delays);
    {
        auto out = open_output(dir / "tradeoff.csv");
        write_tradeoff_csv(out, points);
    }
    for (const auto& p : points) {
        fmt::print(log, "{:<13} D={:<3} g={:<3} M*={:<4} p={:.4g} P={:.4g} D_meas={:.3f} P_I={:.3f} P_r={:.3f} "
                        "outage={:.3f} {}{}\n",
                   to_string(p.engine), p.d_target, p.cells_per_side, p.m_star, p.per_hop_power, p.p_total,
                   p.d_measured, p.mean_pi, p.mean_pr, p.outage, p.accepted ? "accepted" : "not accepted",
                   p.errors.empty() ? "" : " (" + p.errors + ")");
    }
    for (Engine e : cfg.engines) {
        const auto v = trend_verdict(points, e);
        fmt::print(log, "{}: M* increasing in D: {}; P_total decreasing in M*: {}\n", to_string(e),
                   v.m_increasing_in_d ? "yes" : "no", v.power_decreasing_in_m ? "yes" : "no");
    }
    if (cfg.engines.size() == 2) {
        const auto d = power_dominance(points);
        fmt::print(log, "opportunistic P_total below baseline at matched delay: {} ({} matched, {} unmatched)\n",
                   d.pass ? "yes" : "no", d.matched, d.unmatched);
    }
    fmt::print(log, "wrote {}\n", (dir / "tradeoff.csv").string());
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const std::vector<Lemma>& lemmas, std::ostream& log)
{
    validate(cfg);
    const auto dir = prepare_output(cfg);
    auto out = open_output(dir / "verify.csv");
    CsvWriter w(out);
    w.comment("oppnet verify v1");
    w.row({"lemma", "cells_per_side", "instances", "passed", "pass_fraction", "required", "empirical_mean",
           "bound_low", "bound_high", "result"});
    bool all = true;
    for (Lemma l : lemmas) {
        SimConfig sim = cfg.sim;
        sim.placement = Placement::RandomUniform;
        sim.pairs = PairPattern::Random;
        sim.grid_sizing = GridSizing::Formula;
        sim.tdma_k = cfg.verify_tdma_k;
        ConcentrationRequest req;
        req.which = l;
        req.delta = cfg.delta;
        req.seeds = cfg.verify_seeds;
        req.blocks = cfg.blocks;
        switch (l) {
        case Lemma::Occupancy:
            sim.n = cfg.verify_n;
            req.delay = cfg.lemma1_delay;
            req.required_fraction = 0.95;
            break;
        case Lemma::PathsPerCell:
            sim.n = cfg.verify_n;
            req.delay = cfg.lemma2_delay;
            req.pairs = cfg.lemma2_pairs;
            req.required_fraction = 0.95;
            break;
        case Lemma::Interference:
            sim.n = cfg.lemma3_n;
            req.delay = cfg.lemma3_delay;
            req.pairs = cfg.lemma3_pairs;
            req.seeds = cfg.lemma3_seeds;
            req.required_fraction = 0.99;
            break;
        }
        const auto r = verify_concentration(sim, req);
        all = all && r.pass;
        fmt::print(log, "[{}] g={} instances={} pass_fraction={:.4f} required={:.2f} mean={:.5g} bounds=[{:.5g}, {:.5g}] {}\n",
                   to_string(l), r.cells_per_side, r.instances, r.pass_fraction, r.required_fraction,
                   r.empirical_mean, r.bound_low, r.bound_high, r.pass ? "PASS" : "FAIL");
        w.row({to_string(l), std::to_string(r.cells_per_side), std::to_string(r.instances), std::to_string(r.passed),
               format_number(r.pass_fraction), format_number(r.required_fraction), format_number(r.empirical_mean),
               format_number(r.bound_low), format_number(r.bound_high), r.pass ? "pass" : "fail"});
    }
    return all ? kExitOk : kExitVerification;
}

namespace {

std::vector<double> log_space(double lo, double hi, std::size_t count)
{
    std::vector<double> v;
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        v.push_back(lo * std::pow(hi / lo, f));
    }
    return v;
}

struct LawSource {
    Law law;
    Engine engine;
    const char* key;
};

constexpr LawSource kOverlaySources[] = {
    {Law::OppPower, Engine::Opportunistic, "c_opp_power"},
    {Law::OppDelay, Engine::Opportunistic, "c_opp_delay"},
    {Law::BasePower, Engine::Baseline, "c_base_power"},
    {Law::BaseDelay, Engine::Baseline, "c_base_delay"},
};

double measured_y(Law law, const OperatingPoint& p)
{
    return (law == Law::OppDelay || law == Law::BaseDelay) ? p.d_measured : p.p_total;
}

} // namespace

int cmd_curves(const RunConfig& cfg, std::ostream& log)
{
    validate(cfg);
    const auto dir = prepare_output(cfg);
    const double n = static_cast<double>(cfg.sim.n);
    const double alpha = cfg.sim.channel.alpha;
    const FitInput in{n, alpha, cfg.outage_delay};

    std::optional<std::vector<OperatingPoint>> records;
    if (std::ifstream f(dir / "tradeoff.csv"); f) {
        records = read_tradeoff_csv(f);
    }

    std::map<std::string, double> constants;
    std::map<std::string, std::string> origin;
    std::map<std::string, double> r2;
    for (const char* k : {"c_opp_power", "c_opp_delay", "c_base_power", "c_base_delay", "c_cutset", "c4"}) {
        constants[k] = 1.0;
        origin[k] = "default";
    }
    if (records) {
        for (const auto& src : kOverlaySources) {
            std::vector<double> x, y;
            for (const auto& p : *records) {
                if (p.engine != src.engine || p.m_star == 0) continue;
                x.push_back(static_cast<double>(p.m_star));
                y.push_back(measured_y(src.law, p));
            }
            try {
                const auto fit = fit_constant(src.law, x, y, in);
                constants[src.key] = fit.constant;
                origin[src.key] = "fitted";
                r2[src.key] = fit.r2;
            } catch (const std::exception& e) {
                fmt::print(log, "fit {}: {}\n", to_string(src.law), e.what());
            }
        }
    }
    for (const auto& [k, v] : cfg.constants) {
        constants[k] = v;
        origin[k] = "supplied";
    }

    const Regime reg = pair_regime(cfg.sim.n);
    const auto ms = log_space(reg.low, reg.high, cfg.curve_points);
    std::vector<ScalingCurve> curves;
    curves.push_back(opp_power_curve(cfg.sim.n, ms, alpha, constants["c_opp_power"]));
    curves.push_back(opp_delay_curve(cfg.sim.n, ms, constants["c_opp_delay"]));
    curves.push_back(opp_power_curve(cfg.sim.n, ms, alpha, constants["c_opp_power"], true));
    curves.push_back(opp_delay_curve(cfg.sim.n, ms, constants["c_opp_delay"], true));
    auto [bp, bd] = baseline_curves(cfg.sim.n, ms, alpha, constants["c_base_power"], constants["c_base_delay"]);
    curves.push_back(std::move(bp));
    curves.push_back(std::move(bd));
    curves.push_back(cutset_curve(cfg.sim.n, ms, constants["c_cutset"]));
    const double scale = constants["c4"] / std::pow(cfg.outage_delay, alpha - 1.0);
    curves.push_back(outage_curve(log_space(0.01 * scale, 100.0 * scale, cfg.curve_points), cfg.outage_delay, alpha,
                                  constants["c4"]));
    {
        auto out = open_output(dir / "curves.csv");
        write_curves_csv(out, curves);
    }
    fmt::print(log, "regime M in [{:.4g}, {:.4g}]\n", reg.low, reg.high);
    for (const auto& [k, v] : constants) fmt::print(log, "{} = {:.6g} ({})\n", k, v, origin[k]);

    if (records) {
        auto out = open_output(dir / "overlay.csv");
        CsvWriter w(out);
        w.comment("oppnet overlay v1");
        w.row({"law", "engine", "M", "measured", "theory", "constant", "r2", "source"});
        for (const auto& src : kOverlaySources) {
            for (const auto& p : *records) {
                if (p.engine != src.engine || p.m_star == 0) continue;
                const double m = static_cast<double>(p.m_star);
                w.row({to_string(src.law), to_string(p.engine), std::to_string(p.m_star),
                       format_number(measured_y(src.law, p)), format_number(law_value(src.law, m, constants[src.key], in)),
                       format_number(constants[src.key]), r2.count(src.key) ? format_number(r2[src.key]) : "nan",
                       origin[src.key]});
            }
        }
        for (const auto& p : *records) {
            if (p.m_star == 0) continue;
            const double m = static_cast<double>(p.m_star);
            w.row({to_string(Law::CutSet), to_string(p.engine), std::to_string(p.m_star), format_number(p.throughput),
                   format_number(cutset_bound(m, n, constants["c_cutset"])), format_number(constants["c_cutset"]),
                   "nan", origin["c_cutset"]});
        }
        fmt::print(log, "wrote {}\n", (dir / "overlay.csv").string());
    }
    fmt::print(log, "wrote {}\n", (dir / "curves.csv").string());
    return kExitOk;
}

} // namespace oppnet
