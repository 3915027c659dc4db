#pragma once

#include <compare>
#include <cstdint>
#include <vector>

namespace mustangs {

// Toroidal 2D grid: one cell per population member, modular wraparound on
// both axes.
struct GridSpec {
    int width{1};
    int height{1};

    std::size_t cell_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

struct CellCoord {
    int x{0};
    int y{0};

    bool operator==(const CellCoord&) const = default;
    // Row-major order; used for deterministic tie-breaking.
    auto operator<=>(const CellCoord& other) const {
        if (auto c = y <=> other.y; c != 0) return c;
        return x <=> other.x;
    }
};

// Center plus the four von-Neumann neighbors, wrapped. Order is fixed:
// center, north (y-1), south (y+1), west (x-1), east (x+1), with duplicates
// from small grids removed (first occurrence wins).
struct Neighborhood {
    CellCoord center;
    std::vector<CellCoord> members;
};

Neighborhood neighborhood_of(const GridSpec& spec, CellCoord c);

// All coordinates in row-major order: (0,0), (1,0), ..., (0,1), ...
std::vector<CellCoord> all_cells(const GridSpec& spec);

std::size_t cell_index(const GridSpec& spec, CellCoord c);

}  // namespace mustangs
