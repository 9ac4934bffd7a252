#include "oppnet/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace oppnet {

const char* to_string(Engine e) noexcept
{
    return e == Engine::Opportunistic ? "opportunistic" : "baseline";
}

Engine parse_engine(const std::string& s)
{
    if (s == "opportunistic" || s == "opp") return Engine::Opportunistic;
    if (s == "baseline" || s == "base") return Engine::Baseline;
    throw ConfigError(fmt::format("engine: expected opportunistic|baseline, got '{}'", s));
}

const char* to_string(RelayRule r) noexcept
{
    return r == RelayRule::Uniform ? "uniform" : "closest";
}

RelayRule parse_relay_rule(const std::string& s)
{
    if (s == "uniform") return RelayRule::Uniform;
    if (s == "closest") return RelayRule::ClosestToDestination;
    throw ConfigError(fmt::format("relay_rule: expected uniform|closest, got '{}'", s));
}

TrafficSnapshot::TrafficSnapshot(const NetworkLayout& layout, std::span<const SdRoute> routes,
                                 const TdmaSchedule& schedule, Engine engine, StreamKey key)
    : by_slot_(static_cast<std::size_t>(schedule.slot_count()))
{
    for (std::size_t m = 0; m < routes.size(); ++m) {
        const auto& r = routes[m];
        Rng rng(key.child(m));
        for (std::size_t h = 0; h < r.hops.size(); ++h) {
            const CellCoord cell = r.hops[h].from;
            NodeId node = 0;
            if (engine == Engine::Baseline) {
                if (r.relays.size() != r.hops.size() + 1) {
                    throw ConfigError("baseline route without relays");
                }
                node = r.relays[h];
            } else if (h == 0) {
                node = r.pair.source;
            } else {
                auto members = layout.members(cell);
                if (members.empty()) continue;
                node = members[rng.index(members.size())];
            }
            by_slot_[static_cast<std::size_t>(schedule.slot_of(cell))].push_back(
                {node, static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(h), cell});
        }
    }
}

std::size_t TrafficSnapshot::size() const noexcept
{
    std::size_t s = 0;
    for (const auto& v : by_slot_) s += v.size();
    return s;
}

namespace {

double link_gain(Point a, Point b, double alpha)
{
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double r2 = dx * dx + dy * dy;
    if (!(r2 > 0.0)) {
        throw std::domain_error("path_gain: co-located transmitter and receiver");
    }
    if (alpha == 4.0) return 1.0 / (r2 * r2);
    return std::pow(r2, -0.5 * alpha);
}

bool is_self(const HopContext& ctx, const ActiveTransmission& t)
{
    return t.route == ctx.self_route;
}

double received(const HopContext& ctx, NodeId tx, NodeId rx)
{
    const auto& pos = ctx.layout->positions;
    return ctx.sample->gain(tx, rx) * link_gain(pos[tx], pos[rx], ctx.params->alpha) * ctx.per_hop_power;
}

double interference_at(const HopContext& ctx, NodeId rx)
{
    double sum = 0.0;
    for (const auto& t : ctx.on_air) {
        // A node never interferes with itself.
        if (is_self(ctx, t) || t.node == rx) continue;
        sum += received(ctx, t.node, rx);
    }
    return sum;
}

// Per-receiver view of one transmission, shared by Mode 1 and Mode 2 step 1.
struct Reception {
    NodeId rx = 0;
    SinrTerms terms;
    bool decoded = false;
};

std::vector<Reception> receive_in_cell(const HopContext& ctx, NodeId tx, CellCoord cell, NodeId exclude,
                                       bool has_exclude)
{
    std::vector<Reception> out;
    const CellCoord tx_cell = ctx.layout->node_cell[tx];
    for (NodeId rx : ctx.layout->members(cell)) {
        if (rx == tx || (has_exclude && rx == exclude) || is_transmitting(ctx, rx)) continue;
        Reception r;
        r.rx = rx;
        r.terms.signal = received(ctx, tx, rx);
        r.terms.interference = interference_at(ctx, rx);
        r.terms.sinr = r.terms.signal / (ctx.params->noise_power + r.terms.interference);
        bool strongest = true;
        for (const auto& t : ctx.on_air) {
            if (is_self(ctx, t) || t.cell != tx_cell || t.node == rx || t.node == tx) continue;
            if (received(ctx, t.node, rx) > r.terms.signal) {
                strongest = false;
                break;
            }
        }
        r.decoded = strongest && r.terms.sinr >= ctx.params->eta;
        out.push_back(r);
    }
    return out;
}

void set_reference(HopOutcome& o, const std::vector<Reception>& rx)
{
    const Reception* best = nullptr;
    for (const auto& r : rx) {
        if (!best || r.terms.sinr > best->terms.sinr) best = &r;
    }
    if (!best) return;
    o.reference_node = best->rx;
    o.reference_signal = best->terms.signal;
    o.reference_interference = best->terms.interference;
    o.reference_sinr = best->terms.sinr;
}

void set_means(HopOutcome& o, const std::vector<Reception>& rx)
{
    o.receivers = rx.size();
    if (rx.empty()) return;
    double s = 0.0, i = 0.0;
    for (const auto& r : rx) {
        s += r.terms.signal;
        i += r.terms.interference;
    }
    o.mean_signal = s / static_cast<double>(rx.size());
    o.mean_interference = i / static_cast<double>(rx.size());
}

void set_chosen(HopOutcome& o, const Reception& r)
{
    o.chosen_relay = r.rx;
    o.measured_sinr = r.terms.sinr;
    o.measured_interference = r.terms.interference;
}

} // namespace

SinrTerms hop_sinr(const HopContext& ctx, NodeId tx, NodeId rx)
{
    SinrTerms t;
    t.signal = received(ctx, tx, rx);
    t.interference = interference_at(ctx, rx);
    t.sinr = t.signal / (ctx.params->noise_power + t.interference);
    return t;
}

bool is_transmitting(const HopContext& ctx, NodeId node)
{
    for (const auto& t : ctx.on_air) {
        if (!is_self(ctx, t) && t.node == node) return true;
    }
    return false;
}

HopOutcome mode1_hop(const HopContext& ctx, NodeId tx, CellCoord target, RelayRule rule, Point destination,
                     StreamKey selection)
{
    HopOutcome o;
    o.mode = HopMode::Mode1;
    o.transmitter = tx;
    const auto rx = receive_in_cell(ctx, tx, target, 0, false);
    set_reference(o, rx);
    set_means(o, rx);
    std::vector<const Reception*> dec;
    for (const auto& r : rx) {
        if (r.decoded) {
            dec.push_back(&r);
            o.decoders.push_back(r.rx);
        }
    }
    o.candidate_count = dec.size();
    o.outage = dec.empty();
    if (o.outage) return o;
    const Reception* pick = nullptr;
    if (rule == RelayRule::Uniform) {
        Rng rng(selection);
        pick = dec[rng.index(dec.size())];
    } else {
        double best = 0.0;
        for (const auto* r : dec) {
            const double d = distance(ctx.layout->positions[r->rx], destination);
            if (!pick || d < best) {
                pick = r;
                best = d;
            }
        }
    }
    set_chosen(o, *pick);
    return o;
}

int subcells_per_side(std::size_t cell_population)
{
    if (cell_population <= 1) return 1;
    int s = static_cast<int>(std::ceil(std::pow(static_cast<double>(cell_population), 0.25) - 1e-12));
    return std::max(1, s);
}

Step1Result mode2_step1(const HopContext& ctx, NodeId tx, CellCoord cell_f, NodeId exclude, StreamKey selection)
{
    Step1Result res;
    HopOutcome& o = res.outcome;
    o.mode = HopMode::Mode2Step1;
    o.transmitter = tx;
    const auto& grid = ctx.layout->grid;
    const int s = subcells_per_side(ctx.layout->members(cell_f).size());
    res.subcells_per_side = s;

    const auto rx = receive_in_cell(ctx, tx, cell_f, exclude, true);
    set_reference(o, rx);
    set_means(o, rx);

    const double side = grid.cell_side();
    const double x0 = cell_f.col * side;
    const double y0 = cell_f.row * side;
    auto sub_of = [&](NodeId id) {
        const Point p = ctx.layout->positions[id];
        int sx = std::clamp(static_cast<int>((p.x - x0) / side * s), 0, s - 1);
        int sy = std::clamp(static_cast<int>((p.y - y0) / side * s), 0, s - 1);
        return static_cast<std::size_t>(sy * s + sx);
    };

    const std::size_t nsub = static_cast<std::size_t>(s) * s;
    std::vector<std::vector<const Reception*>> decoded(nsub);
    std::vector<const Reception*> best(nsub, nullptr);
    for (const auto& r : rx) {
        const auto k = sub_of(r.rx);
        if (r.decoded) {
            decoded[k].push_back(&r);
            o.decoders.push_back(r.rx);
        }
        if (!best[k] || r.terms.sinr > best[k]->terms.sinr) best[k] = &r;
    }
    Rng rng(selection);
    for (std::size_t k = 0; k < nsub; ++k) {
        if (!decoded[k].empty()) {
            res.candidates.push_back(decoded[k][rng.index(decoded[k].size())]->rx);
        }
        if (best[k]) res.fallback_candidates.push_back(best[k]->rx);
    }
    o.candidate_count = res.candidates.size();
    o.outage = res.candidates.empty();
    return res;
}

HopOutcome mode2_step2(const HopContext& ctx, std::span<const NodeId> candidates, NodeId destination,
                       RelayRule rule, StreamKey selection)
{
    HopOutcome o;
    o.mode = HopMode::Mode2Step2;
    if (candidates.empty()) return o;
    o.transmitter = candidates.front();
    std::vector<Reception> rx;
    rx.reserve(candidates.size());
    for (NodeId c : candidates) {
        Reception r;
        r.rx = c;  // here: the candidate relay; the receiver is the destination
        r.terms = hop_sinr(ctx, c, destination);
        r.decoded = r.terms.sinr >= ctx.params->eta;
        rx.push_back(r);
    }
    set_reference(o, rx);
    set_means(o, rx);
    std::vector<const Reception*> ok;
    for (const auto& r : rx) {
        if (r.decoded) {
            ok.push_back(&r);
            o.decoders.push_back(r.rx);
        }
    }
    o.candidate_count = ok.size();
    o.outage = ok.empty();
    if (o.outage) return o;
    const Reception* pick = nullptr;
    if (rule == RelayRule::Uniform) {
        Rng rng(selection);
        pick = ok[rng.index(ok.size())];
    } else {
        pick = *std::min_element(ok.begin(), ok.end(), [&](const Reception* a, const Reception* b) {
            const auto& pos = ctx.layout->positions;
            return distance(pos[a->rx], pos[destination]) < distance(pos[b->rx], pos[destination]);
        });
    }
    set_chosen(o, *pick);
    o.transmitter = pick->rx;
    return o;
}

HopOutcome baseline_hop(const HopContext& ctx, NodeId tx, NodeId relay)
{
    HopOutcome o;
    o.mode = HopMode::Direct;
    o.transmitter = tx;
    const auto t = hop_sinr(ctx, tx, relay);
    o.reference_node = relay;
    o.reference_signal = t.signal;
    o.reference_interference = t.interference;
    o.reference_sinr = t.sinr;
    o.receivers = 1;
    o.mean_signal = t.signal;
    o.mean_interference = t.interference;
    o.outage = !(t.sinr >= ctx.params->eta);
    o.candidate_count = o.outage ? 0 : 1;
    if (!o.outage) {
        o.decoders.push_back(relay);
        o.chosen_relay = relay;
        o.measured_sinr = t.sinr;
        o.measured_interference = t.interference;
    }
    return o;
}

std::uint64_t next_slot_time(std::int64_t after, int slot, int slot_count)
{
    const std::int64_t t = after + 1;
    const std::int64_t wait = ((slot - t) % slot_count + slot_count) % slot_count;
    return static_cast<std::uint64_t>(t + wait);
}

PacketResult deliver_packet(const NetworkState& state, std::size_t route_index, DeliveryOptions options)
{
    if (route_index >= state.routes.size()) {
        throw std::out_of_range("deliver_packet: route index");
    }
    if (state.snapshot->slot_count() != state.schedule.slot_count()) {
        throw ConfigError("deliver_packet: snapshot and schedule disagree on slot count");
    }
    const SdRoute& route = state.routes[route_index];
    const bool opp = state.engine == Engine::Opportunistic;
    if (!opp && route.relays.size() != route.hops.size() + 1) {
        throw ConfigError("deliver_packet: baseline route without relays");
    }
    const Fading fading = opp ? state.params.fading : Fading::None;
    const Point dst_pos = state.layout->positions[route.pair.destination];

    PacketResult res;
    res.pair_index = route_index;
    res.per_hop.reserve(route.hops.size());
    std::int64_t t = -1;
    NodeId tx = route.pair.source;
    std::vector<NodeId> candidates;
    bool stopped = false;

    for (std::size_t h = 0; h < route.hops.size() && !stopped; ++h) {
        const CellHop& hop = route.hops[h];
        const int slot = state.schedule.slot_of(hop.from);
        const auto time = next_slot_time(t, slot, state.schedule.slot_count());
        t = static_cast<std::int64_t>(time);
        const ChannelSample sample(state.fading, time, fading);
        HopContext ctx;
        ctx.layout = state.layout;
        ctx.on_air = state.snapshot->slot(slot);
        ctx.self_route = static_cast<std::uint32_t>(route_index);
        ctx.self_hop = static_cast<std::uint32_t>(h);
        ctx.per_hop_power = state.per_hop_power;
        ctx.sample = &sample;
        ctx.params = &state.params;
        const StreamKey sel = state.selection.child({route_index, h});

        HopOutcome o;
        if (!opp) {
            o = baseline_hop(ctx, tx, route.relays[h + 1]);
            tx = route.relays[h + 1];
        } else if (hop.mode == HopMode::Mode1) {
            o = mode1_hop(ctx, tx, hop.to, state.relay_rule, dst_pos, sel);
            if (o.chosen_relay) {
                tx = *o.chosen_relay;
            } else if (options.continue_on_outage && o.reference_node) {
                tx = *o.reference_node;
            } else {
                stopped = true;
            }
        } else if (hop.mode == HopMode::Mode2Step1) {
            auto s1 = mode2_step1(ctx, tx, hop.to, route.pair.destination, sel);
            o = std::move(s1.outcome);
            if (!o.outage) {
                candidates = std::move(s1.candidates);
            } else if (options.continue_on_outage && !s1.fallback_candidates.empty()) {
                candidates = std::move(s1.fallback_candidates);
            } else {
                stopped = true;
            }
        } else {
            o = mode2_step2(ctx, candidates, route.pair.destination, state.relay_rule, sel);
        }
        o.hop_index = h;
        o.time = time;
        if (o.outage && !res.outage_hop) res.outage_hop = h;
        res.per_hop.push_back(std::move(o));
        if (res.outage_hop && !options.continue_on_outage) stopped = true;
    }
    res.delivered = !res.outage_hop && res.per_hop.size() == route.hops.size();
    res.hops_taken = res.outage_hop ? *res.outage_hop + 1 : res.per_hop.size();
    return res;
}

} // namespace oppnet
