#include <CLI11.hpp>
#include <fmt/format.h>
#include <iostream>
#include <string>
#include <vector>

#include "oppnet/commands.hpp"

using namespace oppnet;

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> settings;
    std::string seed, trials, jobs, output_dir, grid_factor;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("-c,--config", c.config_file, "key=value config file");
    cmd->add_option("--set", c.settings, "override one setting, KEY=VALUE (repeatable)");
    cmd->add_option("--seed", c.seed, "root seed");
    cmd->add_option("--trials", c.trials, "trials per probe");
    cmd->add_option("--jobs", c.jobs, "worker threads");
    cmd->add_option("-o,--output-dir", c.output_dir, "output directory");
    cmd->add_option("--grid-factor", c.grid_factor, "cells per side per hop of target delay");
}

RunConfig resolve(const Common& c, const std::vector<std::pair<std::string, std::string>>& extra)
{
    RunConfig cfg;
    if (!c.config_file.empty()) load_config_file(cfg, c.config_file);
    for (const auto& s : c.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects KEY=VALUE, got '{}'", s));
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    const std::pair<const char*, const std::string*> flags[] = {{"seed", &c.seed},
                                                                {"trials", &c.trials},
                                                                {"jobs", &c.jobs},
                                                                {"output_dir", &c.output_dir},
                                                                {"grid_factor", &c.grid_factor}};
    for (const auto& [key, value] : flags) {
        if (!value->empty()) apply_setting(cfg, key, *value);
    }
    for (const auto& [k, v] : extra) apply_setting(cfg, k, v);
    validate(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo simulator for opportunistic multi-hop routing in dense wireless networks"};
    app.require_subcommand(1);

    Common sim_opts, sweep_opts, verify_opts, curves_opts;
    auto* simulate = app.add_subcommand("simulate", "deliver packets over calibrated routes, write trials.csv");
    add_common(simulate, sim_opts);
    bool trace = false;
    std::string m_flag, d_flag;
    simulate->add_flag("--trace", trace, "also write per-hop trace.csv");
    simulate->add_option("-M,--pairs", m_flag, "number of S-D pairs");
    simulate->add_option("-D,--delay", d_flag, "target delay in hops");

    auto* sweep = app.add_subcommand("sweep", "power-delay trade-off sweep, write tradeoff.csv");
    add_common(sweep, sweep_opts);

    auto* verify = app.add_subcommand("verify", "empirical concentration checks, write verify.csv");
    add_common(verify, verify_opts);
    std::vector<int> lemmas;
    bool all = false;
    verify->add_option("--lemma", lemmas, "lemma to check: 1 (occupancy), 2 (paths per cell), 3 (interference)")
        ->check(CLI::Range(1, 3));
    verify->add_flag("--all", all, "run all three checks in order");

    auto* curves = app.add_subcommand("curves", "scaling-law curves, write curves.csv (+ overlay.csv)");
    add_common(curves, curves_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (simulate->parsed()) {
            std::vector<std::pair<std::string, std::string>> extra;
            if (trace) extra.emplace_back("trace", "true");
            if (!m_flag.empty()) extra.emplace_back("M", m_flag);
            if (!d_flag.empty()) extra.emplace_back("D", d_flag);
            return cmd_simulate(resolve(sim_opts, extra), std::cout);
        }
        if (sweep->parsed()) return cmd_sweep(resolve(sweep_opts, {}), std::cout);
        if (verify->parsed()) {
            std::vector<Lemma> selected;
            if (all || lemmas.empty()) {
                selected = {Lemma::Occupancy, Lemma::PathsPerCell, Lemma::Interference};
            } else {
                for (int l : lemmas) selected.push_back(static_cast<Lemma>(l));
            }
            return cmd_verify(resolve(verify_opts, {}), selected, std::cout);
        }
        if (curves->parsed()) return cmd_curves(resolve(curves_opts, {}), std::cout);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kExitConfig;
    } catch (const CalibrationError& e) {
        fmt::print(stderr, "calibration error: {}\n", e.what());
        return kExitCalibration;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
