#include "oppnet/channel.hpp"

#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace oppnet {

const char* to_string(Fading f) noexcept
{
    return f == Fading::Rayleigh ? "rayleigh" : "none";
}

Fading parse_fading(const std::string& s)
{
    if (s == "rayleigh") return Fading::Rayleigh;
    if (s == "none") return Fading::None;
    throw ConfigError(fmt::format("fading: expected rayleigh|none, got '{}'", s));
}

void ChannelParams::validate() const
{
    if (!(alpha > 2.0)) throw ConfigError(fmt::format("alpha must be > 2, got {}", alpha));
    if (!(noise_power > 0.0)) throw ConfigError(fmt::format("N0 must be > 0, got {}", noise_power));
    if (!(eta > 0.0)) throw ConfigError(fmt::format("eta must be > 0, got {}", eta));
}

double path_gain(double r, double alpha)
{
    if (!(r > 0.0)) {
        throw std::domain_error(fmt::format("path_gain: non-positive distance {}", r));
    }
    return std::pow(r, -alpha);
}

ChannelSample draw_block_fading(StreamKey fading_stream, std::uint64_t block_id, Fading mode)
{
    return ChannelSample(fading_stream, block_id, mode);
}

std::map<Link, double> sample_gains(const ChannelSample& sample, std::span<const Link> links)
{
    std::map<Link, double> out;
    for (const auto& l : links) {
        out.emplace(l, sample.gain(l.first, l.second));
    }
    return out;
}

SinrTerms sinr_terms(NodeId rx, Transmitter tx, std::span<const Transmitter> interferers,
                     std::span<const Point> positions, const ChannelSample& sample,
                     const ChannelParams& params)
{
    const Point at = positions[rx];
    SinrTerms t;
    t.signal = sample.gain(tx.node, rx) * path_gain(distance(positions[tx.node], at), params.alpha) * tx.power;
    for (const auto& i : interferers) {
        t.interference += sample.gain(i.node, rx) * path_gain(distance(positions[i.node], at), params.alpha) * i.power;
    }
    t.sinr = t.signal / (params.noise_power + t.interference);
    return t;
}

double sinr_at(NodeId rx, NodeId tx, std::span<const NodeId> interferers, double per_hop_power,
               std::span<const Point> positions, const ChannelSample& sample, const ChannelParams& params)
{
    std::vector<Transmitter> txs;
    txs.reserve(interferers.size());
    for (NodeId i : interferers) {
        if (i == tx) throw std::invalid_argument("sinr_at: transmitter listed as its own interferer");
        txs.push_back({i, per_hop_power});
    }
    return sinr_terms(rx, {tx, per_hop_power}, txs, positions, sample, params).sinr;
}

double analytic_outage_cdf(double per_pair_power, double delay, double alpha, double c4)
{
    if (!(per_pair_power > 0.0) || !(delay > 0.0) || !(c4 > 0.0)) {
        throw std::invalid_argument("analytic_outage_cdf: P, D and c4 must be positive");
    }
    return -std::expm1(-c4 / (per_pair_power * std::pow(delay, alpha - 1.0)));
}

} // namespace oppnet
