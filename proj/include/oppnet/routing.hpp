#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oppnet/channel.hpp"
#include "oppnet/rng.hpp"
#include "oppnet/tdma.hpp"
#include "oppnet/topology.hpp"

namespace oppnet {

enum class Engine { Opportunistic, Baseline };
const char* to_string(Engine e) noexcept;
Engine parse_engine(const std::string& s);

// How a relay is picked among the nodes that decoded a hop.
enum class RelayRule { Uniform, ClosestToDestination };
const char* to_string(RelayRule r) noexcept;
RelayRule parse_relay_rule(const std::string& s);

// One transmission that is on the air in its cell's slot. In steady state
// every route keeps a packet in flight on every hop, so each (route, hop)
// contributes one transmitter. A packet only sees other routes' transmitters
// as interference.
struct ActiveTransmission {
    NodeId node = 0;
    std::uint32_t route = 0;
    std::uint32_t hop = 0;
    CellCoord cell;
};

class TrafficSnapshot {
public:
    TrafficSnapshot() = default;
    // Opportunistic routes: the source transmits hop 0, a uniformly drawn
    // member of the hop's origin cell transmits every later hop.
    // Baseline routes: the pre-determined relays transmit.
    TrafficSnapshot(const NetworkLayout& layout, std::span<const SdRoute> routes, const TdmaSchedule& schedule,
                    Engine engine, StreamKey key);

    [[nodiscard]] std::span<const ActiveTransmission> slot(int s) const { return by_slot_[static_cast<std::size_t>(s)]; }
    [[nodiscard]] int slot_count() const noexcept { return static_cast<int>(by_slot_.size()); }
    [[nodiscard]] std::size_t size() const noexcept;

private:
    std::vector<std::vector<ActiveTransmission>> by_slot_;
};

// Everything a single hop evaluation needs besides the transmitter and the
// receivers. Snapshot entries of `self_route` are not interferers; the
// entry (self_route, self_hop) is the one replaced by the transmitter under test.
struct HopContext {
    const NetworkLayout* layout = nullptr;
    std::span<const ActiveTransmission> on_air;
    std::uint32_t self_route = 0;
    std::uint32_t self_hop = 0;
    double per_hop_power = 0.0;
    const ChannelSample* sample = nullptr;
    const ChannelParams* params = nullptr;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct HopOutcome {
    std::size_t hop_index = 0;
    HopMode mode = HopMode::Mode1;
    std::uint64_t time = 0;  // global slot counter; also the fading block id
    NodeId transmitter = 0;
    std::vector<NodeId> decoders;
    std::optional<NodeId> chosen_relay;
    bool outage = true;
    std::size_t candidate_count = 0;
    double measured_sinr = kNaN;          // at chosen relay
    double measured_interference = kNaN;  // at chosen relay
    // Best receiver of the hop (largest SINR), whether or not it decoded.
    std::optional<NodeId> reference_node;
    double reference_signal = kNaN;
    double reference_interference = kNaN;
    double reference_sinr = kNaN;
    // Averages over every receiver that listened on this hop (for step 2:
    // over every candidate link into the destination).
    std::size_t receivers = 0;
    double mean_signal = kNaN;
    double mean_interference = kNaN;
};

struct PacketResult {
    std::size_t pair_index = 0;
    bool delivered = false;
    std::size_t hops_taken = 0;
    std::optional<std::size_t> outage_hop;
    std::vector<HopOutcome> per_hop;
};

// Received signal, interference and SINR of `tx` at `rx` given everything on
// the air except the context's own entry.
SinrTerms hop_sinr(const HopContext& ctx, NodeId tx, NodeId rx);

// True when some other transmission in the slot comes from `node`.
bool is_transmitting(const HopContext& ctx, NodeId node);

// Mode 1: decode in the target cell; a receiver counts as a decoder when its
// SINR >= eta and `tx` is its strongest transmitter among those in tx's cell.
HopOutcome mode1_hop(const HopContext& ctx, NodeId tx, CellCoord target, RelayRule rule, Point destination,
                     StreamKey selection);

struct Step1Result {
    HopOutcome outcome;  // decoders = union over sub-cells; chosen_relay unset
    std::vector<NodeId> candidates;           // one per sub-cell with a decoder
    std::vector<NodeId> fallback_candidates;  // best receiver per non-empty sub-cell
    int subcells_per_side = 1;
};

// ceil(m^(1/4)) sub-cells per side, so about sqrt(m) sub-cells.
int subcells_per_side(std::size_t cell_population);

// Mode 2, step 1: partition cell F and keep one decoder per sub-cell.
// `exclude` (the destination) never acts as a relay.
Step1Result mode2_step1(const HopContext& ctx, NodeId tx, CellCoord cell_f, NodeId exclude, StreamKey selection);

// Mode 2, step 2: the destination probes the candidates and one with
// SINR >= eta delivers the packet.
HopOutcome mode2_step2(const HopContext& ctx, std::span<const NodeId> candidates, NodeId destination,
                       RelayRule rule, StreamKey selection);

// Non-opportunistic hop to a fixed relay.
HopOutcome baseline_hop(const HopContext& ctx, NodeId tx, NodeId relay);

struct NetworkState {
    const NetworkLayout* layout = nullptr;
    std::span<const SdRoute> routes;
    const TrafficSnapshot* snapshot = nullptr;
    TdmaSchedule schedule{4};
    ChannelParams params;
    double per_hop_power = 1.0;
    Engine engine = Engine::Opportunistic;
    RelayRule relay_rule = RelayRule::Uniform;
    StreamKey fading;
    StreamKey selection;
};

struct DeliveryOptions {
    // Keep walking the route after an outage, relaying through the best
    // receiver, so every hop of the route gets measured.
    bool continue_on_outage = false;
};

// First global slot strictly after `after` in which `slot` is active.
std::uint64_t next_slot_time(std::int64_t after, int slot, int slot_count);

PacketResult deliver_packet(const NetworkState& state, std::size_t route_index, DeliveryOptions options = {});

} // namespace oppnet
