#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oppnet/experiment.hpp"

namespace oppnet {

struct RunConfig {
    SimConfig sim = regular_grid_preset();
    std::vector<Engine> engines{Engine::Opportunistic, Engine::Baseline};
    std::vector<double> delays{2.0, 4.0, 8.0};

    // simulate
    std::size_t pairs = 8;
    double delay = 2.0;
    double power = 0.0;  // 0: calibrate mean P_r to 1
    bool trace = false;

    // verify
    std::size_t verify_n = 4096;
    int verify_tdma_k = 5;
    std::size_t verify_seeds = 100;
    double delta = 0.5;
    double lemma1_delay = 2.0;
    double lemma2_delay = 8.0;
    std::size_t lemma2_pairs = 64;
    std::size_t lemma3_n = 1024;
    double lemma3_delay = 1.0;
    std::size_t lemma3_pairs = 256;
    std::size_t lemma3_seeds = 4;
    std::size_t blocks = 1000;

    // curves; unset constants are fitted from tradeoff.csv when present, else 1
    std::size_t curve_points = 32;
    std::map<std::string, double> constants;
    double outage_delay = 2.0;

    std::string output_dir = "out";
};

// Keys accepted in config files and by --set, in documentation order.
const std::vector<std::string>& config_keys();

// Applies one key=value; throws ConfigError naming the key on unknown keys or
// bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value text, '#' starts a comment.
void load_config(RunConfig& cfg, std::istream& in, const std::string& source = "config");
void load_config_file(RunConfig& cfg, const std::string& path);

// Cross-field checks after all settings are applied.
void validate(const RunConfig& cfg);

// Every key with its resolved value, one per line, in config_keys() order.
void write_resolved_config(std::ostream& out, const RunConfig& cfg);

} // namespace oppnet
