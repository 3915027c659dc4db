#include <algorithm>
#include <string>

#include "mustangs/errors.hpp"
#include "mustangs/grid.hpp"

namespace mustangs {

namespace {

int wrap(int v, int extent) {
    const int m = v % extent;
    return m < 0 ? m + extent : m;
}

void check_coord(const GridSpec& spec, CellCoord c) {
    if (spec.width < 1 || spec.height < 1) {
        throw UsageError("grid dimensions must be >= 1");
    }
    if (c.x < 0 || c.x >= spec.width || c.y < 0 || c.y >= spec.height) {
        throw UsageError("cell (" + std::to_string(c.x) + "," +
                         std::to_string(c.y) + ") out of range for " +
                         std::to_string(spec.width) + "x" +
                         std::to_string(spec.height) + " grid");
    }
}

}  // namespace

Neighborhood neighborhood_of(const GridSpec& spec, CellCoord c) {
    check_coord(spec, c);
    static constexpr int kOffsets[5][2] = {
        {0, 0}, {0, -1}, {0, +1}, {-1, 0}, {+1, 0}};
    Neighborhood hood;
    hood.center = c;
    for (const auto& off : kOffsets) {
        const CellCoord m{wrap(c.x + off[0], spec.width),
                          wrap(c.y + off[1], spec.height)};
        if (std::find(hood.members.begin(), hood.members.end(), m) ==
            hood.members.end()) {
            hood.members.push_back(m);
        }
    }
    return hood;
}

std::vector<CellCoord> all_cells(const GridSpec& spec) {
    if (spec.width < 1 || spec.height < 1) {
        throw UsageError("grid dimensions must be >= 1");
    }
    std::vector<CellCoord> cells;
    cells.reserve(spec.cell_count());
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            cells.push_back({x, y});
        }
    }
    return cells;
}

std::size_t cell_index(const GridSpec& spec, CellCoord c) {
    check_coord(spec, c);
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(spec.width) +
           static_cast<std::size_t>(c.x);
}

}  // namespace mustangs
