#pragma once

#include "msq/geometry.hpp"

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

namespace msq {

struct CellIndex {
    int i = 0;
    int j = 0;
    int k = 0;

    friend constexpr bool operator==(const CellIndex&, const CellIndex&) = default;
    friend constexpr auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct CellIndexHash {
    std::size_t operator()(const CellIndex& c) const noexcept {
        std::uint64_t h = static_cast<std::uint32_t>(c.i);
        h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(c.j);
        h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(c.k);
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

std::uint64_t splitmix64(std::uint64_t x);
// Counter-based hash of a cell index under a salt, plus a stream counter.
std::uint64_t cellHash(std::uint64_t salt, const CellIndex& c, std::uint64_t counter);
// cellHash split into a per-cell prefix and a per-counter finalizer: cellHash = cellStreamValue(cellStream(salt, c), counter).
std::uint64_t cellStream(std::uint64_t salt, const CellIndex& c);
inline std::uint64_t cellStreamValue(std::uint64_t stream, std::uint64_t counter) {
    return splitmix64(stream ^ counter);
}
// Uniform double in [0,1) from the top 53 bits.
inline double unitFromBits(std::uint64_t b) { return static_cast<double>(b >> 11) * 0x1.0p-53; }

class NeighborhoodGrid {
public:
    NeighborhoodGrid() = default;
    NeighborhoodGrid(Point3 origin, Point3 cellSize, CellIndex dims);
    static NeighborhoodGrid fromExtent(Point3 lo, Point3 hi, CellIndex dims);

    const Point3& origin() const { return origin_; }
    const Point3& cellSize() const { return cellSize_; }
    const CellIndex& dims() const { return dims_; }
    double minCellEdge() const;
    std::int64_t cellCount() const;
    Box3 extent() const;
    Box3 cellBox(const CellIndex& c) const;

    bool inRange(const CellIndex& c) const;
    bool inExtent(const Point3& p) const { return extent().contains(p); }
    // floor((p - origin) / cellSize), far boundary folded into the last cell; not clamped otherwise.
    CellIndex cellOf(const Point3& p) const;
    // cellOf clamped into the valid index range.
    CellIndex cellOfClamped(const Point3& p) const;
    std::int64_t linear(const CellIndex& c) const;
    CellIndex unlinear(std::int64_t idx) const;

    friend bool operator==(const NeighborhoodGrid&, const NeighborhoodGrid&) = default;

private:
    Point3 origin_;
    Point3 cellSize_{1, 1, 1};
    CellIndex dims_{1, 1, 1};
};

struct ExplicitPoints {
    std::vector<Point3> points;
};

struct RegularGrid {
    Point3 origin;
    Point3 spacing{1, 1, 1};
    CellIndex counts{1, 1, 1};
    // Output slot of sample (i,j,k) is slotOffset + i + counts.i*(j + counts.j*k).
    std::int64_t slotOffset = 0;

    std::int64_t size() const {
        return static_cast<std::int64_t>(counts.i) * counts.j * counts.k;
    }
    // Lattice index of sample (0,0,0); lets a sub-range of a larger lattice reproduce its coordinates exactly.
    CellIndex first{0, 0, 0};

    Point3 sample(int i, int j, int k) const {
        return {origin.x + (i + first.i) * spacing.x, origin.y + (j + first.j) * spacing.y,
                origin.z + (k + first.k) * spacing.z};
    }
    std::int64_t slot(int i, int j, int k) const {
        return slotOffset + i + static_cast<std::int64_t>(counts.i) * (j + static_cast<std::int64_t>(counts.j) * k);
    }
};

struct StratifiedRandom {
    int pointsPerCell = 1;
    std::uint64_t salt = 0;
};

using PointSetDescriptor = std::variant<ExplicitPoints, RegularGrid, StratifiedRandom>;

struct PointGroup {
    CellIndex cellIndex;
    std::vector<Point3> points;
    std::vector<std::int64_t> outputSlots;

    std::size_t size() const { return points.size(); }
};

// Number of result slots a descriptor produces for a given grid.
std::int64_t descriptorSize(const PointSetDescriptor& d, const NeighborhoodGrid& grid);

// Single pass bucketing of explicit points; throws on a point outside the grid extent.
std::vector<PointGroup> groupArbitrary(const NeighborhoodGrid& grid, const std::vector<Point3>& pts);

// Per-cell generation of the samples of a regular grid that fall inside the grid extent.
// Samples outside the extent are reported through `outside` when non-null.
std::vector<PointGroup> generateRegularGrid(const NeighborhoodGrid& grid, const RegularGrid& desc,
                                            PointGroup* outside = nullptr);
// Single-cell variant; empty group when no sample falls in the cell.
PointGroup generateRegularGridCell(const NeighborhoodGrid& grid, const RegularGrid& desc, const CellIndex& c);

std::vector<PointGroup> generateStratified(const NeighborhoodGrid& grid, const StratifiedRandom& desc);
PointGroup generateStratifiedCell(const NeighborhoodGrid& grid, const StratifiedRandom& desc, const CellIndex& c);

// Secondary strategy: groups keyed by (cell, subcluster) with n^3 clusters per cell.
struct SubgridGroup {
    PointGroup group;
    CellIndex cluster;
};
std::vector<SubgridGroup> groupBySubgrid(const NeighborhoodGrid& grid, const std::vector<PointGroup>& groups, int n);

}  // namespace msq
