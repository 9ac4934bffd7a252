#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "oppnet/rng.hpp"
#include "oppnet/topology.hpp"

namespace oppnet {

enum class Fading { Rayleigh, None };
const char* to_string(Fading f) noexcept;
Fading parse_fading(const std::string& s);

struct ChannelParams {
    double alpha = 4.0;        // path-loss exponent, > 2
    double noise_power = 1.0;  // N0
    double eta = 1.0;          // SINR decode threshold
    Fading fading = Fading::Rayleigh;

    void validate() const;
};

// Power gain r^-alpha. Throws on r <= 0.
double path_gain(double r, double alpha);

// Squared fading magnitudes for one block. Gains are drawn on demand from a
// counter-based stream keyed by (block, tx, rx), so every link of the block is
// well defined without materialising all n^2 of them, and repeated lookups of
// the same link return the same value.
class ChannelSample {
public:
    ChannelSample(StreamKey fading_stream, std::uint64_t block_id, Fading mode) noexcept
        : key_(fading_stream.child(block_id)), block_id_(block_id), mode_(mode)
    {
    }

    [[nodiscard]] double gain(NodeId tx, NodeId rx) const noexcept
    {
        if (mode_ == Fading::None) return 1.0;
        return key_.exponential((static_cast<std::uint64_t>(tx) << 32) | rx);
    }
    [[nodiscard]] std::uint64_t block_id() const noexcept { return block_id_; }
    [[nodiscard]] Fading mode() const noexcept { return mode_; }

private:
    StreamKey key_;
    std::uint64_t block_id_;
    Fading mode_;
};

using Link = std::pair<NodeId, NodeId>;  // (tx, rx)

ChannelSample draw_block_fading(StreamKey fading_stream, std::uint64_t block_id, Fading mode);

// Materialised gains for an explicit link set.
std::map<Link, double> sample_gains(const ChannelSample& sample, std::span<const Link> links);

struct Transmitter {
    NodeId node = 0;
    double power = 0.0;
};

struct SinrTerms {
    double signal = 0.0;
    double interference = 0.0;
    double sinr = 0.0;
};

// SINR at `rx` for the signal of `tx`; `interferers` must not contain tx.
SinrTerms sinr_terms(NodeId rx, Transmitter tx, std::span<const Transmitter> interferers,
                     std::span<const Point> positions, const ChannelSample& sample,
                     const ChannelParams& params);

double sinr_at(NodeId rx, NodeId tx, std::span<const NodeId> interferers, double per_hop_power,
               std::span<const Point> positions, const ChannelSample& sample, const ChannelParams& params);

// 1 - exp(-c4 / (P * D^(alpha - 1))).
double analytic_outage_cdf(double per_pair_power, double delay, double alpha, double c4);

} // namespace oppnet
