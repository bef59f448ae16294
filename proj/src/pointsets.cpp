#include "msq/pointsets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace msq {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t cellStream(std::uint64_t salt, const CellIndex& c) {
    std::uint64_t h = splitmix64(salt);
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c.i)));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c.j)));
    return splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c.k)));
}

std::uint64_t cellHash(std::uint64_t salt, const CellIndex& c, std::uint64_t counter) {
    return cellStreamValue(cellStream(salt, c), counter);
}

NeighborhoodGrid::NeighborhoodGrid(Point3 origin, Point3 cellSize, CellIndex dims)
    : origin_(origin), cellSize_(cellSize), dims_(dims) {
    if (!(cellSize.x > 0 && cellSize.y > 0 && cellSize.z > 0))
        throw std::invalid_argument("NeighborhoodGrid: cell size must be positive on each axis");
    if (dims.i < 1 || dims.j < 1 || dims.k < 1)
        throw std::invalid_argument("NeighborhoodGrid: dims must be >= 1 on each axis");
    if (!origin.isFinite()) throw std::invalid_argument("NeighborhoodGrid: origin must be finite");
}

NeighborhoodGrid NeighborhoodGrid::fromExtent(Point3 lo, Point3 hi, CellIndex dims) {
    if (dims.i < 1 || dims.j < 1 || dims.k < 1)
        throw std::invalid_argument("NeighborhoodGrid: dims must be >= 1 on each axis");
    Point3 cs{(hi.x - lo.x) / dims.i, (hi.y - lo.y) / dims.j, (hi.z - lo.z) / dims.k};
    return NeighborhoodGrid(lo, cs, dims);
}

double NeighborhoodGrid::minCellEdge() const { return std::min({cellSize_.x, cellSize_.y, cellSize_.z}); }

std::int64_t NeighborhoodGrid::cellCount() const {
    return static_cast<std::int64_t>(dims_.i) * dims_.j * dims_.k;
}

Box3 NeighborhoodGrid::extent() const {
    return {origin_, {origin_.x + dims_.i * cellSize_.x, origin_.y + dims_.j * cellSize_.y,
                      origin_.z + dims_.k * cellSize_.z}};
}

Box3 NeighborhoodGrid::cellBox(const CellIndex& c) const {
    Point3 lo{origin_.x + c.i * cellSize_.x, origin_.y + c.j * cellSize_.y, origin_.z + c.k * cellSize_.z};
    Point3 hi{origin_.x + (c.i + 1) * cellSize_.x, origin_.y + (c.j + 1) * cellSize_.y,
              origin_.z + (c.k + 1) * cellSize_.z};
    return {lo, hi};
}

bool NeighborhoodGrid::inRange(const CellIndex& c) const {
    return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < dims_.i && c.j < dims_.j && c.k < dims_.k;
}

namespace {
int axisCell(double p, double o, double h, int n) {
    double q = std::floor((p - o) / h);
    if (q >= static_cast<double>(n)) {
        double hi = o + n * h;
        if (p <= hi) return n - 1;
        return q > 2e9 ? 2000000000 : static_cast<int>(q);
    }
    return q < -2e9 ? -2000000000 : static_cast<int>(q);
}
}  // namespace

CellIndex NeighborhoodGrid::cellOf(const Point3& p) const {
    return {axisCell(p.x, origin_.x, cellSize_.x, dims_.i), axisCell(p.y, origin_.y, cellSize_.y, dims_.j),
            axisCell(p.z, origin_.z, cellSize_.z, dims_.k)};
}

CellIndex NeighborhoodGrid::cellOfClamped(const Point3& p) const {
    CellIndex c = cellOf(p);
    return {std::clamp(c.i, 0, dims_.i - 1), std::clamp(c.j, 0, dims_.j - 1), std::clamp(c.k, 0, dims_.k - 1)};
}

std::int64_t NeighborhoodGrid::linear(const CellIndex& c) const {
    return c.i + static_cast<std::int64_t>(dims_.i) * (c.j + static_cast<std::int64_t>(dims_.j) * c.k);
}

CellIndex NeighborhoodGrid::unlinear(std::int64_t idx) const {
    int i = static_cast<int>(idx % dims_.i);
    idx /= dims_.i;
    int j = static_cast<int>(idx % dims_.j);
    int k = static_cast<int>(idx / dims_.j);
    return {i, j, k};
}

std::int64_t descriptorSize(const PointSetDescriptor& d, const NeighborhoodGrid& grid) {
    if (auto* e = std::get_if<ExplicitPoints>(&d)) return static_cast<std::int64_t>(e->points.size());
    if (auto* r = std::get_if<RegularGrid>(&d)) return r->size();
    return grid.cellCount() * std::get<StratifiedRandom>(d).pointsPerCell;
}

std::vector<PointGroup> groupArbitrary(const NeighborhoodGrid& grid, const std::vector<Point3>& pts) {
    Box3 ext = grid.extent();
    std::vector<std::vector<std::int64_t>> buckets(static_cast<std::size_t>(grid.cellCount()));
    for (std::size_t n = 0; n < pts.size(); ++n) {
        const Point3& p = pts[n];
        if (!p.isFinite() || !ext.contains(p)) {
            std::ostringstream os;
            os << "groupArbitrary: point " << n << " (" << p.x << ", " << p.y << ", " << p.z
               << ") lies outside the grid extent";
            throw std::out_of_range(os.str());
        }
        buckets[static_cast<std::size_t>(grid.linear(grid.cellOf(p)))].push_back(static_cast<std::int64_t>(n));
    }
    std::vector<PointGroup> groups;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        if (buckets[b].empty()) continue;
        PointGroup g;
        g.cellIndex = grid.unlinear(static_cast<std::int64_t>(b));
        g.points.reserve(buckets[b].size());
        for (std::int64_t n : buckets[b]) g.points.push_back(pts[static_cast<std::size_t>(n)]);
        g.outputSlots = std::move(buckets[b]);
        groups.push_back(std::move(g));
    }
    return groups;
}

namespace {

// Sample index range [first, last) along one axis whose samples map to cell c.
struct AxisRange {
    int first = 0;
    int last = 0;
};

AxisRange axisSamples(double so, double sp, int f, int count, double go, double gh, int gn, int c) {
    auto cellOfSample = [&](int i) { return axisCell(so + (i + f) * sp, go, gh, gn); };
    auto firstAtLeast = [&](int target) {
        // first sample index whose cell >= target
        double lo = go + target * gh;
        long long i0 = static_cast<long long>(std::ceil((lo - so) / sp)) - f;
        i0 = std::clamp<long long>(i0, 0, count);
        int i = static_cast<int>(i0);
        while (i > 0 && cellOfSample(i - 1) >= target) --i;
        while (i < count && cellOfSample(i) < target) ++i;
        return i;
    };
    AxisRange r;
    r.first = firstAtLeast(c);
    if (c == gn - 1) {
        // last cell also owns samples exactly on the far boundary
        int i = r.first;
        double hi = go + gn * gh;
        long long e = static_cast<long long>(std::floor((hi - so) / sp)) + 1 - f;
        e = std::clamp<long long>(e, i, count);
        int j = static_cast<int>(e);
        while (j > i && cellOfSample(j - 1) != c) --j;
        while (j < count && cellOfSample(j) == c) ++j;
        r.last = j;
    } else {
        r.last = firstAtLeast(c + 1);
    }
    if (r.first < 0) r.first = 0;
    if (r.last < r.first) r.last = r.first;
    // samples before the grid origin map to negative cells and are excluded by construction
    return r;
}

}  // namespace

PointGroup generateRegularGridCell(const NeighborhoodGrid& grid, const RegularGrid& desc, const CellIndex& c) {
    PointGroup g;
    g.cellIndex = c;
    const Point3& go = grid.origin();
    const Point3& gh = grid.cellSize();
    const CellIndex& gn = grid.dims();
    AxisRange rx = axisSamples(desc.origin.x, desc.spacing.x, desc.first.i, desc.counts.i, go.x, gh.x, gn.i, c.i);
    AxisRange ry = axisSamples(desc.origin.y, desc.spacing.y, desc.first.j, desc.counts.j, go.y, gh.y, gn.j, c.j);
    AxisRange rz = axisSamples(desc.origin.z, desc.spacing.z, desc.first.k, desc.counts.k, go.z, gh.z, gn.k, c.k);
    std::size_t n = static_cast<std::size_t>(rx.last - rx.first) * (ry.last - ry.first) * (rz.last - rz.first);
    g.points.reserve(n);
    g.outputSlots.reserve(n);
    for (int k = rz.first; k < rz.last; ++k)
        for (int j = ry.first; j < ry.last; ++j)
            for (int i = rx.first; i < rx.last; ++i) {
                g.points.push_back(desc.sample(i, j, k));
                g.outputSlots.push_back(desc.slot(i, j, k));
            }
    return g;
}

std::vector<PointGroup> generateRegularGrid(const NeighborhoodGrid& grid, const RegularGrid& desc,
                                            PointGroup* outside) {
    if (!(desc.spacing.x > 0 && desc.spacing.y > 0 && desc.spacing.z > 0))
        throw std::invalid_argument("generateRegularGrid: spacing must be positive");
    std::vector<PointGroup> groups;
    const CellIndex& d = grid.dims();
    for (int k = 0; k < d.k; ++k)
        for (int j = 0; j < d.j; ++j)
            for (int i = 0; i < d.i; ++i) {
                PointGroup g = generateRegularGridCell(grid, desc, {i, j, k});
                if (!g.points.empty()) groups.push_back(std::move(g));
            }
    if (outside) {
        outside->points.clear();
        outside->outputSlots.clear();
        const Point3& go = grid.origin();
        const Point3& gh = grid.cellSize();
        AxisRange fx = axisSamples(desc.origin.x, desc.spacing.x, desc.first.i, desc.counts.i, go.x, gh.x, d.i, 0);
        AxisRange lx = axisSamples(desc.origin.x, desc.spacing.x, desc.first.i, desc.counts.i, go.x, gh.x, d.i, d.i - 1);
        AxisRange fy = axisSamples(desc.origin.y, desc.spacing.y, desc.first.j, desc.counts.j, go.y, gh.y, d.j, 0);
        AxisRange ly = axisSamples(desc.origin.y, desc.spacing.y, desc.first.j, desc.counts.j, go.y, gh.y, d.j, d.j - 1);
        AxisRange fz = axisSamples(desc.origin.z, desc.spacing.z, desc.first.k, desc.counts.k, go.z, gh.z, d.k, 0);
        AxisRange lz = axisSamples(desc.origin.z, desc.spacing.z, desc.first.k, desc.counts.k, go.z, gh.z, d.k, d.k - 1);
        for (int k = 0; k < desc.counts.k; ++k)
            for (int j = 0; j < desc.counts.j; ++j)
                for (int i = 0; i < desc.counts.i; ++i) {
                    bool in = i >= fx.first && i < lx.last && j >= fy.first && j < ly.last && k >= fz.first &&
                              k < lz.last;
                    if (in) continue;
                    outside->points.push_back(desc.sample(i, j, k));
                    outside->outputSlots.push_back(desc.slot(i, j, k));
                }
    }
    return groups;
}

PointGroup generateStratifiedCell(const NeighborhoodGrid& grid, const StratifiedRandom& desc, const CellIndex& c) {
    if (desc.pointsPerCell < 1) throw std::invalid_argument("generateStratified: points-per-cell must be >= 1");
    PointGroup g;
    g.cellIndex = c;
    Box3 box = grid.cellBox(c);
    Point3 h = grid.cellSize();
    std::int64_t base = grid.linear(c) * desc.pointsPerCell;
    std::uint64_t stream = cellStream(desc.salt, c);
    g.points.reserve(static_cast<std::size_t>(desc.pointsPerCell));
    g.outputSlots.reserve(static_cast<std::size_t>(desc.pointsPerCell));
    for (int m = 0; m < desc.pointsPerCell; ++m) {
        Point3 p;
        for (int a = 0; a < 3; ++a) {
            double u = unitFromBits(cellStreamValue(stream, static_cast<std::uint64_t>(m) * 3 + a));
            p[a] = box.lo[a] + u * h[a];
        }
        CellIndex got = grid.cellOf(p);
        if (got.i != c.i) p.x = box.lo.x;
        if (got.j != c.j) p.y = box.lo.y;
        if (got.k != c.k) p.z = box.lo.z;
        g.points.push_back(p);
        g.outputSlots.push_back(base + m);
    }
    return g;
}

std::vector<PointGroup> generateStratified(const NeighborhoodGrid& grid, const StratifiedRandom& desc) {
    std::vector<PointGroup> groups;
    groups.reserve(static_cast<std::size_t>(grid.cellCount()));
    for (std::int64_t idx = 0; idx < grid.cellCount(); ++idx)
        groups.push_back(generateStratifiedCell(grid, desc, grid.unlinear(idx)));
    return groups;
}

std::vector<SubgridGroup> groupBySubgrid(const NeighborhoodGrid& grid, const std::vector<PointGroup>& groups, int n) {
    if (n < 1) throw std::invalid_argument("groupBySubgrid: n must be >= 1");
    std::vector<SubgridGroup> out;
    for (const PointGroup& g : groups) {
        Box3 box = grid.cellBox(g.cellIndex);
        Point3 h = grid.cellSize();
        std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(n) * n * n);
        for (std::size_t m = 0; m < g.points.size(); ++m) {
            int q[3];
            for (int a = 0; a < 3; ++a)
                q[a] = std::clamp(static_cast<int>(std::floor((g.points[m][a] - box.lo[a]) / h[a] * n)), 0, n - 1);
            buckets[static_cast<std::size_t>(q[0] + n * (q[1] + n * q[2]))].push_back(m);
        }
        for (std::size_t b = 0; b < buckets.size(); ++b) {
            if (buckets[b].empty()) continue;
            SubgridGroup s;
            s.group.cellIndex = g.cellIndex;
            s.cluster = {static_cast<int>(b % n), static_cast<int>((b / n) % n), static_cast<int>(b / (n * n))};
            for (std::size_t m : buckets[b]) {
                s.group.points.push_back(g.points[m]);
                s.group.outputSlots.push_back(g.outputSlots[m]);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace msq
