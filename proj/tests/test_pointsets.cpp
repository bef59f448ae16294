#include "msq/pointsets.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace msq;

namespace {

// Scalar reference for the cell-index formula, with the far face folded into the last cell.
CellIndex refCell(const NeighborhoodGrid& g, const Point3& p) {
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        int n = a == 0 ? g.dims().i : (a == 1 ? g.dims().j : g.dims().k);
        int v = static_cast<int>(std::floor((p[a] - g.origin()[a]) / g.cellSize()[a]));
        if (v == n && p[a] == g.origin()[a] + n * g.cellSize()[a]) v = n - 1;
        idx[a] = v;
    }
    return {idx[0], idx[1], idx[2]};
}

using Slotted = std::set<std::tuple<double, double, double, std::int64_t>>;

std::map<std::int64_t, Slotted> asSets(const NeighborhoodGrid& g, const std::vector<PointGroup>& groups) {
    std::map<std::int64_t, Slotted> out;
    for (const auto& gr : groups)
        for (std::size_t q = 0; q < gr.size(); ++q)
            out[g.linear(gr.cellIndex)].insert({gr.points[q].x, gr.points[q].y, gr.points[q].z, gr.outputSlots[q]});
    return out;
}

}  // namespace

TEST_CASE("one point per cell of a 2x2x2 grid gives 8 singleton groups") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {2, 2, 2});
    std::vector<Point3> pts;
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) pts.push_back({i + 0.5, j + 0.5, k + 0.5});
    auto groups = groupArbitrary(g, pts);
    CHECK(groups.size() == 8);
    for (const auto& gr : groups) CHECK(gr.size() == 1);
}

TEST_CASE("all points in one cell give one group") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {3, 3, 3});
    std::vector<Point3> pts(50, Point3{1.5, 1.25, 2.75});
    auto groups = groupArbitrary(g, pts);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].size() == 50);
    CHECK(groups[0].cellIndex == CellIndex{1, 1, 2});
}

TEST_CASE("arbitrary grouping agrees with the scalar cell formula") {
    NeighborhoodGrid g({-1, 0, 2}, {0.5, 0.25, 1.0}, {4, 4, 4});
    std::mt19937_64 rng(11);
    std::vector<Point3> pts(10000);
    for (auto& p : pts)
        p = {-1 + 2 * std::uniform_real_distribution<double>(0, 1)(rng), std::uniform_real_distribution<double>(0, 1)(rng),
             2 + 4 * std::uniform_real_distribution<double>(0, 1)(rng)};
    pts[0] = {1, 1, 6};  // far corner
    auto groups = groupArbitrary(g, pts);
    std::size_t total = 0;
    std::vector<int> seen(pts.size(), 0);
    for (const auto& gr : groups) {
        total += gr.size();
        for (std::size_t q = 0; q < gr.size(); ++q) {
            CHECK(refCell(g, gr.points[q]) == gr.cellIndex);
            CHECK(gr.points[q] == pts[gr.outputSlots[q]]);
            seen[gr.outputSlots[q]]++;
        }
    }
    CHECK(total == pts.size());
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("a point outside the extent is rejected with its index") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {2, 2, 2});
    std::vector<Point3> pts{{0.5, 0.5, 0.5}, {0.1, 0.1, 0.1}, {3, 0.5, 0.5}};
    try {
        groupArbitrary(g, pts);
        FAIL("expected an exception");
    } catch (const std::out_of_range& e) {
        CHECK(std::string(e.what()).find("point 2") != std::string::npos);
    }
}

TEST_CASE("regular samples at cell spacing give one point per group") {
    NeighborhoodGrid g({0, 0, 0}, {0.25, 0.25, 0.25}, {4, 4, 4});
    RegularGrid r{{0.125, 0.125, 0.125}, {0.25, 0.25, 0.25}, {4, 4, 4}};
    auto groups = generateRegularGrid(g, r);
    CHECK(groups.size() == 64);
    for (const auto& gr : groups) CHECK(gr.size() == 1);
}

TEST_CASE("512 samples per axis over 32 cells per axis give 4096 points per group") {
    NeighborhoodGrid g({0, 0, 0}, {1.0 / 32, 1.0 / 32, 1.0 / 32}, {32, 32, 32});
    RegularGrid r{{0.5 / 512, 0.5 / 512, 0.5 / 512}, {1.0 / 512, 1.0 / 512, 1.0 / 512}, {512, 512, 512}};
    for (CellIndex c : {CellIndex{0, 0, 0}, CellIndex{31, 7, 19}, CellIndex{15, 16, 31}}) {
        PointGroup gr = generateRegularGridCell(g, r, c);
        CHECK(gr.size() == 4096);
        for (std::size_t q = 0; q < gr.size(); q += 97) CHECK(refCell(g, gr.points[q]) == c);
    }
}

TEST_CASE("regular generation equals materialize-then-group") {
    NeighborhoodGrid g({0, 0, 0}, {0.3, 0.2, 0.25}, {3, 4, 4});
    RegularGrid r{{0.01, -0.05, 0.02}, {0.037, 0.041, 0.05}, {25, 22, 21}};
    r.slotOffset = 5;
    PointGroup outside;
    auto gen = generateRegularGrid(g, r, &outside);
    std::vector<Point3> inside;
    std::vector<std::int64_t> slots;
    for (int k = 0; k < r.counts.k; ++k)
        for (int j = 0; j < r.counts.j; ++j)
            for (int i = 0; i < r.counts.i; ++i) {
                Point3 p = r.sample(i, j, k);
                if (g.inExtent(p)) inside.push_back(p), slots.push_back(r.slot(i, j, k));
            }
    auto grouped = groupArbitrary(g, inside);
    for (auto& gr : grouped)
        for (auto& s : gr.outputSlots) s = slots[s];
    CHECK(asSets(g, gen) == asSets(g, grouped));
    std::size_t genCount = 0;
    for (const auto& gr : gen) genCount += gr.size();
    CHECK(genCount + outside.size() == static_cast<std::size_t>(r.size()));
}

TEST_CASE("a sample grid 3.4x finer per side averages about 39.3 points per cell") {
    NeighborhoodGrid g({0, 0, 0}, {0.1, 0.1, 0.1}, {10, 10, 10});
    RegularGrid r{{0.5 / 34, 0.5 / 34, 0.5 / 34}, {1.0 / 34, 1.0 / 34, 1.0 / 34}, {34, 34, 34}};
    auto groups = generateRegularGrid(g, r);
    std::size_t total = 0;
    for (const auto& gr : groups) total += gr.size();
    double mean = static_cast<double>(total) / static_cast<double>(g.cellCount());
    CHECK(mean == doctest::Approx(39.304).epsilon(1e-3));
}

TEST_CASE("sub-range lattices reproduce full-lattice coordinates exactly") {
    RegularGrid full{{0.013, 0.2, -0.1}, {0.0371, 0.0291, 0.0133}, {40, 40, 40}};
    RegularGrid part = full;
    part.first = {0, 0, 17};
    part.counts = {40, 40, 5};
    for (int i = 0; i < 40; i += 3) CHECK(part.sample(i, 2, 3) == full.sample(i, 2, 20));
}

TEST_CASE("stratified: one point per cell on 2^3") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {2, 2, 2});
    auto groups = generateStratified(g, {1, 9});
    CHECK(groups.size() == 8);
    for (const auto& gr : groups) {
        REQUIRE(gr.size() == 1);
        CHECK(g.cellBox(gr.cellIndex).contains(gr.points[0]));
    }
}

TEST_CASE("stratified streams are deterministic in the salt") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {3, 2, 2});
    auto a = generateStratified(g, {7, 42});
    auto b = generateStratified(g, {7, 42});
    auto c = generateStratified(g, {7, 43});
    REQUIRE(a.size() == b.size());
    bool anyDiff = false;
    for (std::size_t q = 0; q < a.size(); ++q) {
        CHECK(a[q].points == b[q].points);
        CHECK(a[q].outputSlots == b[q].outputSlots);
        anyDiff |= a[q].points != c[q].points;
    }
    CHECK(anyDiff);
}

TEST_CASE("stratified points in one cell have a centred mean") {
    NeighborhoodGrid g({2, -1, 0}, {0.5, 2.0, 1.0}, {1, 1, 1});
    const int n = 100000;
    auto groups = generateStratified(g, {n, 3});
    REQUIRE(groups.size() == 1);
    Box3 b = g.cellBox({0, 0, 0});
    for (int a = 0; a < 3; ++a) {
        double s = 0;
        for (const auto& p : groups[0].points) {
            CHECK_MESSAGE(b.contains(p), "point outside its cell");
            s += p[a];
        }
        double mean = s / n;
        double se = (b.hi[a] - b.lo[a]) / std::sqrt(12.0 * n);
        CHECK(std::abs(mean - b.center()[a]) < 3 * se);
    }
}

TEST_CASE("subgrid grouping partitions each cell's points by cluster") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {2, 1, 1});
    auto groups = generateStratified(g, {500, 1});
    auto sub = groupBySubgrid(g, groups, 4);
    std::size_t total = 0;
    for (const auto& s : sub) {
        total += s.group.size();
        Box3 cb = g.cellBox(s.group.cellIndex);
        for (const auto& p : s.group.points) {
            for (int a = 0; a < 3; ++a) {
                int v = std::clamp(static_cast<int>(std::floor((p[a] - cb.lo[a]) / 0.25)), 0, 3);
                CHECK(v == (a == 0 ? s.cluster.i : a == 1 ? s.cluster.j : s.cluster.k));
            }
        }
    }
    CHECK(total == 1000);
}
