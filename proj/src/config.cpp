#include "oppnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

#include "oppnet/csv.hpp"

namespace oppnet {

namespace {

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
    }
    return out;
}

int parse_int(const std::string& key, const std::string& v)
{
    const auto u = parse_u64(key, v);
    if (u > 1'000'000) throw ConfigError(fmt::format("{}: value {} too large", key, v));
    return static_cast<int>(u);
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(fmt::format("{}: expected true|false, got '{}'", key, v));
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '[' || c == ']') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string join_numbers(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_number(v[i]);
    }
    return s;
}

const std::vector<std::string> kConstantKeys = {"c_opp_power", "c_opp_delay", "c_base_power",
                                                "c_base_delay", "c_cutset", "c4"};

struct KeySpec {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string engines_string(const RunConfig& c)
{
    if (c.engines.size() == 2) return "both";
    return c.engines.empty() ? "" : to_string(c.engines.front());
}

const std::vector<KeySpec>& specs()
{
    static const std::vector<KeySpec> s = [] {
        std::vector<KeySpec> v;
        auto num = [&v](std::string k, double SimConfig::*m) {
            v.push_back({k, [k, m](RunConfig& c, const std::string& x) { c.sim.*m = parse_double(k, x); },
                         [m](const RunConfig& c) { return format_number(c.sim.*m); }});
        };
        v.push_back({"n", [](RunConfig& c, const std::string& x) { c.sim.n = parse_u64("n", x); },
                     [](const RunConfig& c) { return std::to_string(c.sim.n); }});
        v.push_back({"placement", [](RunConfig& c, const std::string& x) { c.sim.placement = parse_placement(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.placement)); }});
        v.push_back({"pair_pattern", [](RunConfig& c, const std::string& x) { c.sim.pairs = parse_pair_pattern(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.pairs)); }});
        v.push_back({"alpha", [](RunConfig& c, const std::string& x) { c.sim.channel.alpha = parse_double("alpha", x); },
                     [](const RunConfig& c) { return format_number(c.sim.channel.alpha); }});
        v.push_back({"N0", [](RunConfig& c, const std::string& x) { c.sim.channel.noise_power = parse_double("N0", x); },
                     [](const RunConfig& c) { return format_number(c.sim.channel.noise_power); }});
        v.push_back({"eta", [](RunConfig& c, const std::string& x) { c.sim.channel.eta = parse_double("eta", x); },
                     [](const RunConfig& c) { return format_number(c.sim.channel.eta); }});
        v.push_back({"fading", [](RunConfig& c, const std::string& x) { c.sim.channel.fading = parse_fading(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.channel.fading)); }});
        v.push_back({"tdma_k", [](RunConfig& c, const std::string& x) { c.sim.tdma_k = parse_int("tdma_k", x); },
                     [](const RunConfig& c) { return std::to_string(c.sim.tdma_k); }});
        v.push_back({"baseline_tdma_k",
                     [](RunConfig& c, const std::string& x) { c.sim.baseline_tdma_k = parse_int("baseline_tdma_k", x); },
                     [](const RunConfig& c) { return std::to_string(c.sim.baseline_tdma_k); }});
        v.push_back({"engine",
                     [](RunConfig& c, const std::string& x) {
                         if (x == "both") c.engines = {Engine::Opportunistic, Engine::Baseline};
                         else c.engines = {parse_engine(x)};
                     },
                     engines_string});
        v.push_back({"D_list",
                     [](RunConfig& c, const std::string& x) {
                         c.delays.clear();
                         for (const auto& item : split_list(x)) c.delays.push_back(parse_double("D_list", item));
                     },
                     [](const RunConfig& c) { return join_numbers(c.delays); }});
        num("epsilon0", &SimConfig::epsilon0);
        v.push_back({"trials", [](RunConfig& c, const std::string& x) { c.sim.trials = parse_u64("trials", x); },
                     [](const RunConfig& c) { return std::to_string(c.sim.trials); }});
        v.push_back({"seed", [](RunConfig& c, const std::string& x) { c.sim.seed = parse_u64("seed", x); },
                     [](const RunConfig& c) { return std::to_string(c.sim.seed); }});
        num("grid_factor", &SimConfig::grid_factor);
        num("baseline_grid_factor", &SimConfig::baseline_grid_factor);
        v.push_back({"grid_sizing", [](RunConfig& c, const std::string& x) { c.sim.grid_sizing = parse_grid_sizing(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.grid_sizing)); }});
        v.push_back({"relay_rule", [](RunConfig& c, const std::string& x) { c.sim.relay_rule = parse_relay_rule(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.relay_rule)); }});
        v.push_back({"m_search", [](RunConfig& c, const std::string& x) { c.sim.m_search = parse_m_search(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.m_search)); }});
        v.push_back({"power_policy",
                     [](RunConfig& c, const std::string& x) { c.sim.power_policy = parse_power_policy(x); },
                     [](const RunConfig& c) { return std::string(to_string(c.sim.power_policy)); }});
        num("fixed_power", &SimConfig::fixed_power);
        num("pr_tolerance", &SimConfig::pr_tolerance);
        num("pi_tolerance", &SimConfig::pi_tolerance);
        v.push_back({"bootstrap", [](RunConfig& c, const std::string& x) { c.sim.bootstrap = parse_u64("bootstrap", x); },
                     [](const RunConfig& c) { return std::to_string(c.sim.bootstrap); }});
        v.push_back({"jobs", [](RunConfig& c, const std::string& x) { c.sim.jobs = static_cast<unsigned>(parse_int("jobs", x)); },
                     [](const RunConfig& c) { return std::to_string(c.sim.jobs); }});
        v.push_back({"M", [](RunConfig& c, const std::string& x) { c.pairs = parse_u64("M", x); },
                     [](const RunConfig& c) { return std::to_string(c.pairs); }});
        v.push_back({"D", [](RunConfig& c, const std::string& x) { c.delay = parse_double("D", x); },
                     [](const RunConfig& c) { return format_number(c.delay); }});
        v.push_back({"power", [](RunConfig& c, const std::string& x) { c.power = parse_double("power", x); },
                     [](const RunConfig& c) { return format_number(c.power); }});
        v.push_back({"trace", [](RunConfig& c, const std::string& x) { c.trace = parse_bool("trace", x); },
                     [](const RunConfig& c) { return std::string(c.trace ? "true" : "false"); }});
        auto size_key = [&v](std::string k, std::size_t RunConfig::*m) {
            v.push_back({k, [k, m](RunConfig& c, const std::string& x) { c.*m = parse_u64(k, x); },
                         [m](const RunConfig& c) { return std::to_string(c.*m); }});
        };
        auto dbl_key = [&v](std::string k, double RunConfig::*m) {
            v.push_back({k, [k, m](RunConfig& c, const std::string& x) { c.*m = parse_double(k, x); },
                         [m](const RunConfig& c) { return format_number(c.*m); }});
        };
        size_key("verify_n", &RunConfig::verify_n);
        v.push_back({"verify_tdma_k",
                     [](RunConfig& c, const std::string& x) { c.verify_tdma_k = parse_int("verify_tdma_k", x); },
                     [](const RunConfig& c) { return std::to_string(c.verify_tdma_k); }});
        size_key("verify_seeds", &RunConfig::verify_seeds);
        dbl_key("delta", &RunConfig::delta);
        dbl_key("lemma1_D", &RunConfig::lemma1_delay);
        dbl_key("lemma2_D", &RunConfig::lemma2_delay);
        size_key("lemma2_M", &RunConfig::lemma2_pairs);
        size_key("lemma3_n", &RunConfig::lemma3_n);
        dbl_key("lemma3_D", &RunConfig::lemma3_delay);
        size_key("lemma3_M", &RunConfig::lemma3_pairs);
        size_key("lemma3_seeds", &RunConfig::lemma3_seeds);
        size_key("blocks", &RunConfig::blocks);
        size_key("curve_points", &RunConfig::curve_points);
        for (const auto& k : kConstantKeys) {
            v.push_back({k, [k](RunConfig& c, const std::string& x) { c.constants[k] = parse_double(k, x); },
                         [k](const RunConfig& c) {
                             auto it = c.constants.find(k);
                             return it == c.constants.end() ? std::string("auto") : format_number(it->second);
                         }});
        }
        dbl_key("outage_D", &RunConfig::outage_delay);
        v.push_back({"output_dir", [](RunConfig& c, const std::string& x) { c.output_dir = x; },
                     [](const RunConfig& c) { return c.output_dir; }});
        return v;
    }();
    return s;
}

} // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& s : specs()) k.push_back(s.name);
        return k;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& s : specs()) {
        if (s.name == key) {
            if (std::find(kConstantKeys.begin(), kConstantKeys.end(), key) != kConstantKeys.end() && value == "auto") {
                cfg.constants.erase(key);
                return;
            }
            s.set(cfg, value);
            return;
        }
    }
    throw ConfigError(fmt::format("unknown config key '{}'", key));
}

void load_config(RunConfig& cfg, std::istream& in, const std::string& source)
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("{}:{}: expected key=value", source, lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_setting(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}:{}: {}", source, lineno, e.what()));
        }
    }
}

void load_config_file(RunConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
    load_config(cfg, in, path);
}

void validate(const RunConfig& cfg)
{
    cfg.sim.validate();
    if (cfg.engines.empty()) throw ConfigError("engine: at least one engine required");
    for (double d : cfg.delays) {
        if (!(d >= 1.0)) throw ConfigError(fmt::format("D_list: delay {} is below 1 hop", d));
    }
    if (!(cfg.delay >= 1.0)) throw ConfigError(fmt::format("D: delay {} is below 1 hop", cfg.delay));
    if (cfg.pairs == 0) throw ConfigError("M: must be >= 1");
    if (2 * cfg.pairs > cfg.sim.n) {
        throw ConfigError(fmt::format("M: {} pairs violates 2M <= n (n={})", cfg.pairs, cfg.sim.n));
    }
    if (cfg.power < 0.0) throw ConfigError("power: must be >= 0");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
    if (cfg.curve_points < 2) throw ConfigError("curve_points: must be >= 2");
    for (const auto& [k, v] : cfg.constants) {
        if (!(v > 0.0)) throw ConfigError(fmt::format("{}: constant must be > 0", k));
    }
}

void write_resolved_config(std::ostream& out, const RunConfig& cfg)
{
    fmt::print(out, "# oppnet resolved config v1\n");
    for (const auto& s : specs()) fmt::print(out, "{}={}\n", s.name, s.get(cfg));
}

} // namespace oppnet
