#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "oppnet/topology.hpp"

namespace oppnet {

// k^2-TDMA: a cell transmits in the slot given by (row mod k, col mod k).
class TdmaSchedule {
public:
    explicit TdmaSchedule(int k);

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] int slot_count() const noexcept { return k_ * k_; }
    [[nodiscard]] int slot_of(CellCoord c) const noexcept { return (c.row % k_) * k_ + (c.col % k_); }
    [[nodiscard]] std::vector<CellCoord> active_cells(const CellGrid& grid, int slot) const;

private:
    int k_;
};

struct InterferenceLayer {
    int index = 0;  // l >= 1
    std::vector<CellCoord> cells;
    double min_dist = 0.0;
    double max_dist = 0.0;
};

// Distance bounds of layer l in units of cell side. k = 5 uses
// ((5l - 4), 8(5l - 4)); k = 3, 4 use ((kl - (k - 1)), sqrt(2)(kl + (k - 1))).
double layer_min_factor(int k, int l);
double layer_max_factor(int k, int l);

// Co-active cells grouped by Chebyshev distance l*k from `reference`, for
// l = 1 .. floor((g - 1) / k). Layers truncate at the grid boundary.
std::vector<InterferenceLayer> interference_layers(CellCoord reference, const CellGrid& grid, int k);

// True when the first layer around `reference` is complete (8 cells on grid).
bool is_interior(CellCoord reference, const CellGrid& grid, int k);

// Sum of density * power * d^-alpha over cell centres, for a receiver at `receiver`.
double interference_sum(Point receiver, std::span<const Point> cell_centers, double tx_density,
                        double per_hop_power, double alpha);

// Mean interference (unit-mean fading) at the centre of `reference` from every
// co-active cell, each holding tx_density transmitters at its centre.
double expected_interference_exact(CellCoord reference, const CellGrid& grid, int k, double tx_density,
                                   double per_hop_power, double alpha);

struct LayeredBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// sum_l 8l * p * rho * (max_dist_l)^-alpha  and  sum_l 8l * p * rho * (min_dist_l)^-alpha
// over the layers present on the grid.
LayeredBounds layered_interference_bounds(const CellGrid& grid, int k, double tx_density, double per_hop_power,
                                          double alpha);

// CSV: layer,cell_count,min_dist,max_dist,contribution
void write_layer_table(std::ostream& out, CellCoord reference, const CellGrid& grid, int k, double tx_density,
                       double per_hop_power, double alpha);

} // namespace oppnet
