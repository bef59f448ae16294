#include "msq/core.hpp"
#include "msq/coarse.hpp"
#include "msq/repetitive.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace msq;

namespace {

NeighborhoodGrid grid(int n, double edge = 0.25) {
    return NeighborhoodGrid({0, 0, 0}, {edge, edge, edge}, {n, n, n});
}

Point3 randomIn(const Box3& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    return b.lo + cmul(b.size(), Point3{U(rng), U(rng), U(rng)});
}

std::vector<std::pair<Point3, Point3>> modelStruts(const LatticeCell& c, const Point3& lo, const Point3& size) {
    std::vector<std::pair<Point3, Point3>> out;
    for (const auto& [a, b] : c.struts) out.push_back({lo + cmul(a, size), lo + cmul(b, size)});
    return out;
}

const LengthScale kFine{1e-9};

}  // namespace

TEST_CASE("lattice local value is the distance to the strut skeleton") {
    auto g = grid(3, 0.5);
    for (const auto& name : LatticeCell::presetNames()) {
        LatticeCell cell = LatticeCell::preset(name);
        LatticeScale s(g, cell, ParameterField::constant(0.03));
        std::mt19937_64 rng(4);
        for (int i = 0; i < 300; ++i) {
            Point3 q = randomIn({{0, 0, 0}, {0.5, 0.5, 0.5}}, rng);
            CHECK(s.localValue(q) == doctest::Approx(oracle::skeletonDistance(modelStruts(cell, {}, {0.5, 0.5, 0.5}), q)).epsilon(1e-12));
        }
    }
    CHECK(LatticeCell::preset("cross3d").struts.size() == 3);
    CHECK(LatticeCell::preset("octet").struts.size() == 24);
    CHECK_THROWS(LatticeCell::preset("unknown"));
    CHECK_THROWS(LatticeScale(g, LatticeCell{{{{0, 0, 0}, {1.5, 0, 0}}}}, ParameterField::constant(0.1)));
}

TEST_CASE("gyroid local value and its Lipschitz bound") {
    GyroidCell c{0.5};
    const double k = 2 * std::numbers::pi / 0.5;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 2000; ++i) {
        Point3 a{U(rng), U(rng), U(rng)};
        CHECK(c.value(a) == doctest::Approx(std::abs(oracle::gyroid(k * a.x, k * a.y, k * a.z))).epsilon(1e-12));
        Point3 b = a + Point3{U(rng) - 0.5, U(rng) - 0.5, U(rng) - 0.5} * 0.01;
        CHECK(std::abs(c.value(a) - c.value(b)) <= c.lipschitz() * dist(a, b) * (1 + 1e-12));
    }
    CHECK(c.lipschitz() == doctest::Approx(std::sqrt(3.0) * k));
}

TEST_CASE("a single strut through the cell intersects its only cluster") {
    LatticeCell cell{{{{0, 0.5, 0.5}, {1, 0.5, 0.5}}}};
    auto t = buildIntervalsLattice(cell, {1, 1, 1}, 1);
    REQUIRE(t->size() == 1);
    CHECK(t->cluster(0).skeletonIntersects);
    CHECK(t->cluster(0).rAllOutside == 0.0);
}

TEST_CASE("lattice interval bounds classify interior samples correctly") {
    // strut along one cell edge; the opposite corner cluster is far from it
    LatticeCell cell{{{{0, 0, 0}, {1, 0, 0}}}};
    const Point3 size{1, 1, 1};
    const int n = 8;
    auto t = buildIntervalsLattice(cell, size, n);
    auto segs = modelStruts(cell, {}, size);
    std::mt19937_64 rng(12);
    for (CellIndex ci : {CellIndex{7, 7, 7}, CellIndex{3, 5, 6}, CellIndex{0, 0, 0}, CellIndex{2, 0, 1}}) {
        const ClusterInterval& c = t->cluster(ci.i, ci.j, ci.k);
        Box3 b = t->clusterBox(ci.i, ci.j, ci.k);
        double h = 0.5 * b.diagonal();
        CHECK(c.rAllOutside <= c.rAllInside);
        for (int i = 0; i < 1000; ++i) {
            double d = oracle::skeletonDistance(segs, randomIn(b, rng));
            if (c.dMinCorner - h > 0) CHECK(d > c.dMinCorner - h - 1e-12);  // any r below D - h is outside
            CHECK(d >= c.rAllOutside);
            CHECK(d <= c.rAllInside);
        }
    }
}

TEST_CASE("corner distance plus half the diagonal does not bound a cluster") {
    // cluster touching the strut at one corner: the far corner is farther than dMinCorner + h
    LatticeCell cell{{{{0, 0, 0}, {1, 0, 0}}}};
    auto t = buildIntervalsLattice(cell, {1, 1, 1}, 4);
    const ClusterInterval& c = t->cluster(0, 0, 0);
    Box3 b = t->clusterBox(0, 0, 0);
    double h = 0.5 * b.diagonal();
    double farCorner = oracle::segmentDistance(b.hi, {0, 0, 0}, {1, 0, 0});
    CHECK(c.dMinCorner == 0.0);
    CHECK(farCorner > c.dMinCorner + h);
    CHECK(farCorner <= c.rAllInside);
}

TEST_CASE("sampled interval arithmetic") {
    ClusterInterval c = intervalFromSamples(0.8, 0.9, 0.05);
    CHECK(c.rAllInside == doctest::Approx(0.95));
    CHECK(c.rAllOutside == doctest::Approx(0.75));
    CHECK_FALSE(c.skeletonIntersects);
    ClusterInterval z = intervalFromSamples(0.01, 0.3, 0.05);
    CHECK(z.rAllOutside == 0.0);
    CHECK(z.skeletonIntersects);
}

TEST_CASE("gyroid threshold above the global maximum is all inside by the fast path") {
    auto g = grid(2);
    GyroidCell cell{1.0};
    auto gs = std::make_shared<GyroidScale>(g, cell, ParameterField::constant(1.7), 8, 9);
    const GyroidScale& s = *gs;
    MultiscaleModel m({std::make_shared<BoxScale>(Point3{0, 0, 0}, Point3{0.5, 0.5, 0.5}), gs});
    m.resetCounters();
    auto r = setMembershipQ(m, StratifiedRandom{500, 3}, kFine);
    for (auto v : r) CHECK(v.inside);
    CHECK(s.counters().fastPathFraction() == 1.0);
    double maxWiden = 0;
    for (std::size_t i = 0; i < s.table().size(); ++i) maxWiden = std::max(maxWiden, s.table().cluster(i).rAllInside);
    CHECK(maxWiden < 1.7);
}

TEST_CASE("random clusters and thresholds: no fast-path misclassification") {
    GyroidCell cell{0.7};
    const Point3 size{0.3, 0.3, 0.3};
    auto t = buildIntervalsSampled(cell, size, 6, 9);
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> C(0, 5);
    std::uniform_real_distribution<double> T(0, 2.5);
    int fast = 0;
    for (int i = 0; i < 10000; ++i) {
        int a = C(rng), b = C(rng), c = C(rng);
        Box3 box = t->clusterBox(a, b, c);
        const ClusterInterval& ci = t->cluster(a, b, c);
        double r = T(rng);
        Point3 q = randomIn(box, rng);
        bool direct = cell.value(cdiv(q, size)) <= r;
        if (r >= ci.rAllInside) {
            CHECK(direct);
            ++fast;
        }
        if (r < ci.rAllOutside) {
            CHECK_FALSE(direct);
            ++fast;
        }
    }
    CHECK(fast > 1000);
}

TEST_CASE("set membership equals direct evaluation on lattice and gyroid") {
    auto g = grid(4);
    ParameterField graded{0.02, {0.01, 0.02, -0.01}};
    std::vector<std::shared_ptr<Scale>> fines{
        std::make_shared<LatticeScale>(g, LatticeCell::preset("octet"), graded),
        std::make_shared<LatticeScale>(g, LatticeCell::preset("cross3d"), ParameterField::constant(0.03), 4),
        std::make_shared<GyroidScale>(g, GyroidCell{1.0}, ParameterField{0.4, {0.1, 0, 0}})};
    for (const auto& f : fines) {
        MultiscaleModel m({std::make_shared<BoxScale>(Point3{0, 0, 0}, Point3{1, 1, 1}), f});
        m.resetCounters();
        StratifiedRandom s{200, 5};
        auto set = setMembershipQ(m, s, kFine);
        auto pts = materialize(s, groupingGrid(m, kFine));
        int inside = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(set[i].inside == pointMembershipQ(m, pts[i], kFine).inside);
            inside += set[i].inside;
        }
        CHECK(inside > 0);
        CHECK(f->counters().fastPathHits > 0);
    }
}

TEST_CASE("zero and huge strut radii take the fast path") {
    auto g = grid(3);
    // cross3d leaves most clusters clear of the skeleton
    LatticeScale zero(g, LatticeCell::preset("cross3d"), ParameterField::constant(0.0));
    LatticeScale huge(g, LatticeCell::preset("octet"), ParameterField::constant(10.0));
    std::mt19937_64 rng(3);
    for (auto* s : {&zero, &huge}) {
        s->counters().reset();
        for (int c = 0; c < 27; ++c) {
            CellIndex ci = g.unlinear(c);
            auto st = s->prepareCell(ci);
            for (int i = 0; i < 50; ++i) {
                Point3 p = randomIn(g.cellBox(ci), rng);
                bool in = s->cellMembership(*st, p);
                CHECK(in == (s == &huge));
            }
        }
    }
    CHECK(huge.counters().fastPathFraction() == 1.0);
    CHECK(zero.counters().fastPathFraction() > 0.5);
}

TEST_CASE("lattice distance examples") {
    auto g = grid(3, 1.0);
    const double r = 0.05;
    LatticeScale s(g, LatticeCell::preset("cross3d"), ParameterField::constant(r));
    // on the axis of the strut through the centre cell
    CHECK(s.pointDistance({1.3, 1.5, 1.5}).distance == doctest::Approx(-r).epsilon(1e-12));
    auto st = s.prepareCell({1, 1, 1});
    CHECK(s.cellSample(*st, {1.3, 1.5, 1.5}).distance == doctest::Approx(-r).epsilon(1e-12));
    // at distance d from the skeleton, away from the neighbours
    for (double d : {0.1, 0.2, 0.25})
        CHECK(std::abs(s.pointDistance({1.5 + d / std::sqrt(2.0), 1.5 + d / std::sqrt(2.0), 1.3}).distance - (d - r)) < 1e-9);
}

TEST_CASE("repetitive distances are conservative on both query paths") {
    auto g = grid(4);
    std::vector<std::shared_ptr<RepetitiveScale>> scales{
        std::make_shared<LatticeScale>(g, LatticeCell::preset("octet"), ParameterField{0.015, {0.01, 0, 0.01}}),
        std::make_shared<LatticeScale>(g, LatticeCell::preset("cross3d"), ParameterField::constant(0.04)),
        std::make_shared<GyroidScale>(g, GyroidCell{1.0}, ParameterField::constant(0.5))};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1, 1);
    Box3 ext = g.extent();
    for (auto& s : scales)
        for (bool fast : {false, true}) {
            s->setFastDistance(fast);
            for (int i = 0; i < 2500; ++i) {
                Point3 p = randomIn(ext, rng);
                CellIndex c = g.cellOf(p);
                auto st = s->prepareCell(c);
                CellSample cs = s->cellSample(*st, p);
                CellSample ps = s->pointSample(p);
                CHECK(cs.inside == ps.inside);
                if (!fast) CHECK(cs.distance == ps.distance);
                if (fast) CHECK(std::abs(cs.distance) <= std::abs(ps.distance) + 1e-15);
                double rad = std::abs(cs.distance);
                for (int q = 0; q < 4; ++q) {
                    Point3 x = p + normalized(Point3{U(rng), U(rng), U(rng)}) * (rad * std::abs(U(rng)) * 0.999);
                    if (!ext.contains(x)) continue;
                    CHECK(s->pointMembership(x).inside == cs.inside);
                }
            }
        }
}

TEST_CASE("membership is monotone in the parameter") {
    auto g = grid(2);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        Point3 p = randomIn(g.extent(), rng);
        bool prev = false;
        int switches = 0;
        for (int q = 0; q <= 40; ++q) {
            LatticeScale s(g, LatticeCell::preset("octet"), ParameterField::constant(q * 0.005), 2);
            bool in = s.pointMembership(p).inside;
            if (in != prev) ++switches;
            CHECK((!prev || in));
            prev = in;
        }
        CHECK(switches <= 1);
    }
}

TEST_CASE("the interval table is shared by every cell") {
    auto g = grid(4);
    LatticeScale s(g, LatticeCell::preset("octet"), ParameterField{0.02, {0.01, 0, 0}});
    const SubgridIntervalTable* t = s.tableFor({0, 0, 0});
    for (int c = 0; c < g.cellCount(); ++c) CHECK(s.tableFor(g.unlinear(c)) == t);
    auto fresh = buildIntervalsLattice(LatticeCell::preset("octet"), g.cellSize(), 8);
    for (std::size_t i = 0; i < fresh->size(); ++i) {
        CHECK(fresh->cluster(i).rAllInside == t->cluster(i).rAllInside);
        CHECK(fresh->cluster(i).rAllOutside == t->cluster(i).rAllOutside);
    }
}
