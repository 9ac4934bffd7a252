#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppnet/rng.hpp"

namespace oppnet {

using NodeId = std::uint32_t;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b) noexcept;

struct CellCoord {
    int row = 0;
    int col = 0;
    friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

enum class Placement { RandomUniform, RegularGrid };

// How S-D pairs are drawn.
//   Random    - endpoints uniform over all nodes, XY routes.
//   Row       - source and destination share a lattice row (horizontal-only).
//   RowSpan   - as Row, with the source in the first cell column and the
//               destination in the last, so every route crosses the network.
enum class PairPattern { Random, Row, RowSpan };

const char* to_string(Placement p) noexcept;
const char* to_string(PairPattern p) noexcept;
Placement parse_placement(const std::string& s);
PairPattern parse_pair_pattern(const std::string& s);

// Square partition of the unit square into g x g cells.
class CellGrid {
public:
    CellGrid() = default;
    explicit CellGrid(int cells_per_side);

    [[nodiscard]] int cells_per_side() const noexcept { return g_; }
    [[nodiscard]] double cell_side() const noexcept { return 1.0 / g_; }
    [[nodiscard]] double cell_area() const noexcept { return cell_side() * cell_side(); }
    [[nodiscard]] std::size_t cell_count() const noexcept { return static_cast<std::size_t>(g_) * g_; }

    [[nodiscard]] CellCoord cell_of(Point p) const noexcept;
    [[nodiscard]] Point center(CellCoord c) const noexcept;
    [[nodiscard]] bool contains(CellCoord c) const noexcept
    {
        return c.row >= 0 && c.col >= 0 && c.row < g_ && c.col < g_;
    }
    [[nodiscard]] std::size_t index(CellCoord c) const noexcept
    {
        return static_cast<std::size_t>(c.row) * g_ + c.col;
    }
    [[nodiscard]] CellCoord coord(std::size_t index) const noexcept
    {
        return {static_cast<int>(index / g_), static_cast<int>(index % g_)};
    }

private:
    int g_ = 1;
};

// Rows run along y, columns along x: node (x, y) sits in cell
// (floor(y * g), floor(x * g)).
struct NetworkLayout {
    std::size_t n = 0;
    Placement placement = Placement::RandomUniform;
    std::vector<Point> positions;
    CellGrid grid;
    std::vector<CellCoord> node_cell;
    std::vector<std::vector<NodeId>> cell_members;  // indexed by grid.index()
    bool occupancy_warning = false;

    [[nodiscard]] std::span<const NodeId> members(CellCoord c) const
    {
        return cell_members[grid.index(c)];
    }
    [[nodiscard]] double expected_occupancy() const noexcept
    {
        return static_cast<double>(n) * grid.cell_area();
    }
};

// Expected per-cell occupancy below this raises NetworkLayout::occupancy_warning.
inline constexpr double kMinExpectedOccupancy = 2.0;

std::vector<Point> place_nodes(std::size_t n, Placement placement, std::uint64_t seed);

// g = max(min_cells, round(grid_factor * delay)).
int cells_per_side_for_delay(double delay, double grid_factor, int min_cells);

NetworkLayout build_layout(std::vector<Point> positions, Placement placement, int cells_per_side);

struct SdPair {
    NodeId source = 0;
    NodeId destination = 0;
    CellCoord src_cell;
    CellCoord dst_cell;
};

std::vector<SdPair> draw_sd_pairs(const NetworkLayout& layout, std::size_t count, PairPattern pattern,
                                  StreamKey key);

// Horizontal leg to the destination column, then vertical leg.
std::vector<CellCoord> xy_route(CellCoord src, CellCoord dst);

enum class HopMode { Mode1, Mode2Step1, Mode2Step2, Direct };
const char* to_string(HopMode m) noexcept;

struct CellHop {
    CellCoord from;
    CellCoord to;
    int step = 0;           // cell advances along the path
    std::size_t from_pos = 0;  // position of `from` in the cell path
    HopMode mode = HopMode::Mode1;
};

// Step sizes for `advances` cell advances: alternate 3, 2, 3, 2, ... and absorb
// the remainder at the tail. Always returns at least two steps; a 0 step is the
// artificial hop inside the source cell.
std::vector<int> hop_steps(int advances);

std::vector<CellHop> hop_sequence(std::span<const CellCoord> cell_path);

struct SdRoute {
    SdPair pair;
    std::vector<CellCoord> cell_path;
    std::vector<CellHop> hops;
    // Baseline only: transmitting node of every hop followed by the destination,
    // so relays.size() == hops.size() + 1. Empty for opportunistic routes.
    std::vector<NodeId> relays;

    [[nodiscard]] std::size_t hop_count() const noexcept { return hops.size(); }
};

SdRoute build_opportunistic_route(const SdPair& pair);

// One hop per adjacent cell on the XY path. The relay in each intermediate
// cell is the node nearest the cell centre; routes sharing a cell take the
// next-nearest unused node so that pre-determined paths stay node-disjoint
// where the cell allows it.
std::vector<SdRoute> build_baseline_routes(const NetworkLayout& layout, std::span<const SdPair> pairs);

std::vector<SdRoute> build_opportunistic_routes(std::span<const SdPair> pairs);

// Number of distinct routes whose cell path visits each cell, indexed by grid.index().
std::vector<int> paths_per_cell(const CellGrid& grid, std::span<const SdRoute> routes);

// Line-oriented dump: "node <id> <x> <y> <row> <col>" per node, then
// "route <m> <src> <dst> <hops> <steps...>" per route.
void write_layout(std::ostream& out, const NetworkLayout& layout, std::span<const SdRoute> routes);

} // namespace oppnet
