#include "oppnet/tdma.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <ostream>

namespace oppnet {

TdmaSchedule::TdmaSchedule(int k) : k_(k)
{
    if (k < 3 || k > 5) {
        throw ConfigError(fmt::format("tdma_k must be 3, 4 or 5, got {}", k));
    }
}

std::vector<CellCoord> TdmaSchedule::active_cells(const CellGrid& grid, int slot) const
{
    if (slot < 0 || slot >= slot_count()) {
        throw std::out_of_range(fmt::format("slot {} outside [0, {})", slot, slot_count()));
    }
    const int r0 = slot / k_;
    const int c0 = slot % k_;
    std::vector<CellCoord> cells;
    for (int r = r0; r < grid.cells_per_side(); r += k_) {
        for (int c = c0; c < grid.cells_per_side(); c += k_) {
            cells.push_back({r, c});
        }
    }
    return cells;
}

double layer_min_factor(int k, int l)
{
    return static_cast<double>(k * l - (k - 1));
}

double layer_max_factor(int k, int l)
{
    if (k == 5) return 8.0 * (5 * l - 4);
    return std::sqrt(2.0) * (k * l + (k - 1));
}

std::vector<InterferenceLayer> interference_layers(CellCoord reference, const CellGrid& grid, int k)
{
    const int g = grid.cells_per_side();
    const int layers = (g - 1) / k;
    std::vector<InterferenceLayer> out;
    for (int l = 1; l <= layers; ++l) {
        InterferenceLayer layer;
        layer.index = l;
        layer.min_dist = layer_min_factor(k, l) * grid.cell_side();
        layer.max_dist = layer_max_factor(k, l) * grid.cell_side();
        const int d = l * k;
        for (int dr = -d; dr <= d; dr += k) {
            for (int dc = -d; dc <= d; dc += k) {
                if (std::max(std::abs(dr), std::abs(dc)) != d) continue;
                CellCoord c{reference.row + dr, reference.col + dc};
                if (grid.contains(c)) layer.cells.push_back(c);
            }
        }
        out.push_back(std::move(layer));
    }
    return out;
}

bool is_interior(CellCoord reference, const CellGrid& grid, int k)
{
    const int g = grid.cells_per_side();
    return reference.row >= k && reference.col >= k && reference.row + k < g && reference.col + k < g;
}

double interference_sum(Point receiver, std::span<const Point> cell_centers, double tx_density,
                        double per_hop_power, double alpha)
{
    double sum = 0.0;
    for (const auto& c : cell_centers) {
        sum += std::pow(distance(receiver, c), -alpha);
    }
    return per_hop_power * tx_density * sum;
}

double expected_interference_exact(CellCoord reference, const CellGrid& grid, int k, double tx_density,
                                   double per_hop_power, double alpha)
{
    std::vector<Point> centers;
    const int g = grid.cells_per_side();
    for (int r = reference.row % k; r < g; r += k) {
        for (int c = reference.col % k; c < g; c += k) {
            if (r == reference.row && c == reference.col) continue;
            centers.push_back(grid.center({r, c}));
        }
    }
    return interference_sum(grid.center(reference), centers, tx_density, per_hop_power, alpha);
}

LayeredBounds layered_interference_bounds(const CellGrid& grid, int k, double tx_density, double per_hop_power,
                                          double alpha)
{
    LayeredBounds b;
    const int layers = (grid.cells_per_side() - 1) / k;
    const double L = grid.cell_side();
    for (int l = 1; l <= layers; ++l) {
        const double count = 8.0 * l;
        b.lower += count * per_hop_power * tx_density * std::pow(layer_max_factor(k, l) * L, -alpha);
        b.upper += count * per_hop_power * tx_density * std::pow(layer_min_factor(k, l) * L, -alpha);
    }
    return b;
}

void write_layer_table(std::ostream& out, CellCoord reference, const CellGrid& grid, int k, double tx_density,
                       double per_hop_power, double alpha)
{
    fmt::print(out, "# oppnet layers v1 k={} g={} ref=({},{})\n", k, grid.cells_per_side(), reference.row,
               reference.col);
    fmt::print(out, "layer,cell_count,min_dist,max_dist,contribution\n");
    const Point rx = grid.center(reference);
    for (const auto& layer : interference_layers(reference, grid, k)) {
        std::vector<Point> centers;
        for (const auto& c : layer.cells) centers.push_back(grid.center(c));
        const double contrib = interference_sum(rx, centers, tx_density, per_hop_power, alpha);
        fmt::print(out, "{},{},{:.10g},{:.10g},{:.10g}\n", layer.index, layer.cells.size(), layer.min_dist,
                   layer.max_dist, contrib);
    }
}

} // namespace oppnet
