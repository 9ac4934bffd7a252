#include "oppnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <map>
#include <ostream>

namespace oppnet {

double distance(Point a, Point b) noexcept
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

const char* to_string(Placement p) noexcept
{
    return p == Placement::RegularGrid ? "regular" : "random";
}

const char* to_string(PairPattern p) noexcept
{
    switch (p) {
    case PairPattern::Random: return "random";
    case PairPattern::Row: return "row";
    case PairPattern::RowSpan: return "row_span";
    }
    return "?";
}

Placement parse_placement(const std::string& s)
{
    if (s == "random") return Placement::RandomUniform;
    if (s == "regular") return Placement::RegularGrid;
    throw ConfigError(fmt::format("placement: expected random|regular, got '{}'", s));
}

PairPattern parse_pair_pattern(const std::string& s)
{
    if (s == "random") return PairPattern::Random;
    if (s == "row") return PairPattern::Row;
    if (s == "row_span") return PairPattern::RowSpan;
    throw ConfigError(fmt::format("pairs: expected random|row|row_span, got '{}'", s));
}

const char* to_string(HopMode m) noexcept
{
    switch (m) {
    case HopMode::Mode1: return "mode1";
    case HopMode::Mode2Step1: return "mode2_step1";
    case HopMode::Mode2Step2: return "mode2_step2";
    case HopMode::Direct: return "direct";
    }
    return "?";
}

CellGrid::CellGrid(int cells_per_side) : g_(cells_per_side)
{
    if (cells_per_side < 1) {
        throw ConfigError("cells_per_side must be >= 1");
    }
}

CellCoord CellGrid::cell_of(Point p) const noexcept
{
    auto clamp = [this](double v) {
        int i = static_cast<int>(std::floor(v * g_));
        return std::clamp(i, 0, g_ - 1);
    };
    return {clamp(p.y), clamp(p.x)};
}

Point CellGrid::center(CellCoord c) const noexcept
{
    return {(c.col + 0.5) * cell_side(), (c.row + 0.5) * cell_side()};
}

namespace {

std::size_t lattice_side(std::size_t n)
{
    auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (side * side != n) {
        throw ConfigError(fmt::format("regular placement needs a perfect-square n, got n={}", n));
    }
    return side;
}

} // namespace

std::vector<Point> place_nodes(std::size_t n, Placement placement, std::uint64_t seed)
{
    if (n < 4) {
        throw ConfigError(fmt::format("n must be >= 4, got {}", n));
    }
    std::vector<Point> pts;
    pts.reserve(n);
    if (placement == Placement::RegularGrid) {
        const std::size_t side = lattice_side(n);
        for (std::size_t i = 0; i < side; ++i) {
            for (std::size_t j = 0; j < side; ++j) {
                pts.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(side),
                               (static_cast<double>(j) + 0.5) / static_cast<double>(side)});
            }
        }
        return pts;
    }
    Rng rng(StreamKey(seed).child(Stream::Topology));
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.uniform();
        double y = rng.uniform();
        pts.push_back({x, y});
    }
    return pts;
}

int cells_per_side_for_delay(double delay, double grid_factor, int min_cells)
{
    if (!(delay >= 1.0)) {
        throw ConfigError(fmt::format("target delay must be >= 1 hop, got {}", delay));
    }
    if (!(grid_factor > 0.0)) {
        throw ConfigError("grid_factor must be > 0");
    }
    int g = static_cast<int>(std::lround(grid_factor * delay));
    return std::max(min_cells, g);
}

NetworkLayout build_layout(std::vector<Point> positions, Placement placement, int cells_per_side)
{
    NetworkLayout layout;
    layout.n = positions.size();
    layout.placement = placement;
    layout.grid = CellGrid(cells_per_side);
    layout.positions = std::move(positions);
    layout.cell_members.assign(layout.grid.cell_count(), {});
    layout.node_cell.reserve(layout.n);
    for (NodeId id = 0; id < layout.n; ++id) {
        CellCoord c = layout.grid.cell_of(layout.positions[id]);
        layout.node_cell.push_back(c);
        layout.cell_members[layout.grid.index(c)].push_back(id);
    }
    layout.occupancy_warning = layout.expected_occupancy() < kMinExpectedOccupancy;
    return layout;
}

namespace {

SdPair make_pair(const NetworkLayout& layout, NodeId s, NodeId d)
{
    return {s, d, layout.node_cell[s], layout.node_cell[d]};
}

// Lattice row of a regular-grid node.
int lattice_row(const NetworkLayout& layout, NodeId id, std::size_t side)
{
    return static_cast<int>(std::lround(layout.positions[id].y * static_cast<double>(side) - 0.5));
}

std::vector<SdPair> draw_random(const NetworkLayout& layout, std::size_t count, Rng& rng)
{
    std::vector<NodeId> ids(layout.n);
    for (NodeId i = 0; i < layout.n; ++i) ids[i] = i;
    for (std::size_t i = 0; i < 2 * count; ++i) {
        std::size_t j = i + rng.index(layout.n - i);
        std::swap(ids[i], ids[j]);
    }
    std::vector<SdPair> pairs;
    pairs.reserve(count);
    for (std::size_t m = 0; m < count; ++m) {
        pairs.push_back(make_pair(layout, ids[2 * m], ids[2 * m + 1]));
    }
    return pairs;
}

std::vector<SdPair> draw_rows(const NetworkLayout& layout, std::size_t count, bool span, Rng& rng)
{
    if (layout.placement != Placement::RegularGrid) {
        throw ConfigError("row pair patterns require regular placement");
    }
    const std::size_t side = lattice_side(layout.n);
    const int last_col = layout.grid.cells_per_side() - 1;
    // Per lattice row: candidate sources and destinations, in id order.
    std::vector<std::vector<NodeId>> src_pool(side);
    std::vector<std::vector<NodeId>> dst_pool(side);
    for (NodeId id = 0; id < layout.n; ++id) {
        auto row = static_cast<std::size_t>(lattice_row(layout, id, side));
        int col = layout.node_cell[id].col;
        if (!span) {
            src_pool[row].push_back(id);
        } else {
            if (col == 0) src_pool[row].push_back(id);
            if (col == last_col && last_col > 0) dst_pool[row].push_back(id);
        }
    }
    std::vector<SdPair> pairs;
    pairs.reserve(count);
    std::vector<std::pair<std::size_t, std::size_t>> eligible;  // (row, index in src_pool)
    for (std::size_t m = 0; m < count; ++m) {
        eligible.clear();
        for (std::size_t r = 0; r < side; ++r) {
            const bool ok = span ? !dst_pool[r].empty() : src_pool[r].size() >= 2;
            if (!ok) continue;
            for (std::size_t i = 0; i < src_pool[r].size(); ++i) eligible.emplace_back(r, i);
        }
        if (eligible.empty()) {
            throw ConfigError(fmt::format("cannot place {} {} pairs on this lattice (placed {})", count,
                                          span ? "row-spanning" : "same-row", m));
        }
        auto [row, si] = eligible[rng.index(eligible.size())];
        auto& srcs = src_pool[row];
        NodeId s = srcs[si];
        srcs.erase(srcs.begin() + static_cast<std::ptrdiff_t>(si));
        auto& dsts = span ? dst_pool[row] : srcs;
        std::size_t di = rng.index(dsts.size());
        NodeId d = dsts[di];
        dsts.erase(dsts.begin() + static_cast<std::ptrdiff_t>(di));
        pairs.push_back(make_pair(layout, s, d));
    }
    return pairs;
}

} // namespace

std::vector<SdPair> draw_sd_pairs(const NetworkLayout& layout, std::size_t count, PairPattern pattern,
                                  StreamKey key)
{
    if (2 * count > layout.n) {
        throw ConfigError(fmt::format("M={} pairs violates 2M <= n (n={})", count, layout.n));
    }
    Rng rng(key);
    switch (pattern) {
    case PairPattern::Random: return draw_random(layout, count, rng);
    case PairPattern::Row: return draw_rows(layout, count, false, rng);
    case PairPattern::RowSpan: return draw_rows(layout, count, true, rng);
    }
    return {};
}

std::vector<CellCoord> xy_route(CellCoord src, CellCoord dst)
{
    std::vector<CellCoord> path;
    path.reserve(static_cast<std::size_t>(std::abs(dst.col - src.col) + std::abs(dst.row - src.row) + 1));
    CellCoord c = src;
    path.push_back(c);
    const int dc = dst.col > src.col ? 1 : -1;
    while (c.col != dst.col) {
        c.col += dc;
        path.push_back(c);
    }
    const int dr = dst.row > src.row ? 1 : -1;
    while (c.row != dst.row) {
        c.row += dr;
        path.push_back(c);
    }
    return path;
}

std::vector<int> hop_steps(int advances)
{
    if (advances < 0) {
        throw std::invalid_argument("hop_steps: negative advance count");
    }
    std::vector<int> steps;
    const int pairs = advances / 5;
    for (int i = 0; i < pairs; ++i) {
        steps.push_back(3);
        steps.push_back(2);
    }
    switch (advances % 5) {
    case 1:
        if (pairs > 0) {
            // [.., 3, 2] + 1 -> [.., 2, 2, 2]
            steps[steps.size() - 2] = 2;
            steps.push_back(2);
        } else {
            steps.push_back(1);
        }
        break;
    case 2: steps.push_back(2); break;
    case 3: steps.push_back(3); break;
    case 4:
        steps.push_back(2);
        steps.push_back(2);
        break;
    default: break;
    }
    // Artificial leading hop inside the source cell so that every pair gets
    // the two Mode 2 hops.
    while (steps.size() < 2) {
        steps.insert(steps.begin(), 0);
    }
    return steps;
}

std::vector<CellHop> hop_sequence(std::span<const CellCoord> cell_path)
{
    if (cell_path.empty()) {
        throw std::invalid_argument("hop_sequence: empty cell path");
    }
    const auto steps = hop_steps(static_cast<int>(cell_path.size()) - 1);
    std::vector<CellHop> hops;
    hops.reserve(steps.size());
    std::size_t pos = 0;
    for (int s : steps) {
        CellHop h;
        h.from = cell_path[pos];
        h.from_pos = pos;
        pos += static_cast<std::size_t>(s);
        h.to = cell_path[pos];
        h.step = s;
        h.mode = HopMode::Mode1;
        hops.push_back(h);
    }
    hops[hops.size() - 2].mode = HopMode::Mode2Step1;
    hops.back().mode = HopMode::Mode2Step2;
    return hops;
}

SdRoute build_opportunistic_route(const SdPair& pair)
{
    SdRoute r;
    r.pair = pair;
    r.cell_path = xy_route(pair.src_cell, pair.dst_cell);
    r.hops = hop_sequence(r.cell_path);
    return r;
}

std::vector<SdRoute> build_opportunistic_routes(std::span<const SdPair> pairs)
{
    std::vector<SdRoute> routes;
    routes.reserve(pairs.size());
    for (const auto& p : pairs) routes.push_back(build_opportunistic_route(p));
    return routes;
}

std::vector<SdRoute> build_baseline_routes(const NetworkLayout& layout, std::span<const SdPair> pairs)
{
    const auto& grid = layout.grid;
    // Lazily sorted by distance to the cell centre.
    std::vector<std::vector<NodeId>> by_center(grid.cell_count());
    std::vector<std::size_t> usage(grid.cell_count(), 0);
    auto ranked = [&](CellCoord c) -> const std::vector<NodeId>& {
        auto& v = by_center[grid.index(c)];
        if (v.empty()) {
            auto m = layout.members(c);
            v.assign(m.begin(), m.end());
            const Point ctr = grid.center(c);
            std::stable_sort(v.begin(), v.end(), [&](NodeId a, NodeId b) {
                return distance(layout.positions[a], ctr) < distance(layout.positions[b], ctr);
            });
        }
        return v;
    };

    std::vector<SdRoute> routes;
    routes.reserve(pairs.size());
    for (const auto& pair : pairs) {
        SdRoute r;
        r.pair = pair;
        r.cell_path = xy_route(pair.src_cell, pair.dst_cell);
        struct Waypoint {
            NodeId node;
            std::size_t pos;
        };
        std::vector<Waypoint> way{{pair.source, 0}};
        for (std::size_t pos = 1; pos + 1 < r.cell_path.size(); ++pos) {
            const CellCoord c = r.cell_path[pos];
            const auto& nodes = ranked(c);
            if (nodes.empty()) continue;  // hop over an empty cell
            auto& used = usage[grid.index(c)];
            NodeId pick = nodes[used % nodes.size()];
            for (std::size_t t = 0; t < nodes.size(); ++t) {
                NodeId cand = nodes[(used + t) % nodes.size()];
                if (cand != pair.source && cand != pair.destination) {
                    pick = cand;
                    break;
                }
            }
            ++used;
            way.push_back({pick, pos});
        }
        way.push_back({pair.destination, r.cell_path.size() - 1});
        for (std::size_t i = 0; i + 1 < way.size(); ++i) {
            CellHop h;
            h.from = r.cell_path[way[i].pos];
            h.to = r.cell_path[way[i + 1].pos];
            h.from_pos = way[i].pos;
            h.step = static_cast<int>(way[i + 1].pos - way[i].pos);
            h.mode = HopMode::Direct;
            r.hops.push_back(h);
        }
        for (const auto& w : way) r.relays.push_back(w.node);
        routes.push_back(std::move(r));
    }
    return routes;
}

std::vector<int> paths_per_cell(const CellGrid& grid, std::span<const SdRoute> routes)
{
    std::vector<int> counts(grid.cell_count(), 0);
    std::vector<std::size_t> seen(grid.cell_count(), 0);
    std::size_t stamp = 0;
    for (const auto& r : routes) {
        ++stamp;
        for (const auto& c : r.cell_path) {
            auto i = grid.index(c);
            if (seen[i] != stamp) {
                seen[i] = stamp;
                ++counts[i];
            }
        }
    }
    return counts;
}

void write_layout(std::ostream& out, const NetworkLayout& layout, std::span<const SdRoute> routes)
{
    fmt::print(out, "# oppnet layout v1 n={} placement={} cells_per_side={}\n", layout.n,
               to_string(layout.placement), layout.grid.cells_per_side());
    for (NodeId id = 0; id < layout.n; ++id) {
        const auto& p = layout.positions[id];
        const auto& c = layout.node_cell[id];
        fmt::print(out, "node {} {:.17g} {:.17g} {} {}\n", id, p.x, p.y, c.row, c.col);
    }
    for (std::size_t m = 0; m < routes.size(); ++m) {
        const auto& r = routes[m];
        fmt::print(out, "route {} {} {} {}", m, r.pair.source, r.pair.destination, r.hops.size());
        for (const auto& h : r.hops) fmt::print(out, " {}", h.step);
        fmt::print(out, "\n");
    }
}

} // namespace oppnet
