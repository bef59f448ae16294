#include "msq/foam.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace msq;

namespace {

NeighborhoodGrid unitGrid(int n) { return NeighborhoodGrid({0, 0, 0}, {1.0 / n, 1.0 / n, 1.0 / n}, {n, n, n}); }

FoamParams params(double r, std::uint64_t salt) {
    FoamParams fp;
    fp.beamRadius = r;
    fp.rngSalt = salt;
    return fp;
}

Point3 randomIn(const Box3& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    return b.lo + cmul(b.size(), Point3{U(rng), U(rng), U(rng)});
}

// Oracle skeleton distance at p using a 3-ring of sites.
double skeleton(const NeighborhoodGrid& g, const FoamParams& fp, const Point3& p) {
    FoamParams wide = fp;
    wide.gatherRing = 3;
    return oracle::voronoiSkeletonDistance(gatherSeeds(g, g.cellOf(p), wide).points, p, 2.6 * g.minCellEdge());
}

}  // namespace

TEST_CASE("seed placement is deterministic and cell-local") {
    NeighborhoodGrid g({-1, 0, 3}, {0.5, 0.25, 2}, {4, 4, 4});
    Seed a = seedForCell(g, {1, 2, 3}, 9), b = seedForCell(g, {1, 2, 3}, 9);
    CHECK(a.position == b.position);
    CHECK(a.id == b.id);
    Seed c = seedForCell(g, {2, 2, 3}, 9);
    CHECK(a.id != c.id);
    CHECK(g.cellBox({1, 2, 3}).contains(a.position));
    CHECK(g.cellBox({2, 2, 3}).contains(c.position));
    // virtual cells beyond the grid are valid
    CHECK(g.cellBox({-3, 7, 2}).contains(seedForCell(g, {-3, 7, 2}, 9).position));
}

TEST_CASE("seed offsets are uniform per axis") {
    NeighborhoodGrid g({0, 0, 0}, {1, 1, 1}, {50, 50, 40});
    const int bins = 10;
    std::array<std::array<int, bins>, 3> hist{};
    int n = 0;
    for (int k = 0; k < 40; ++k)
        for (int j = 0; j < 50; ++j)
            for (int i = 0; i < 50; ++i, ++n) {
                Point3 s = seedForCell(g, {i, j, k}, 3).position - Point3{double(i), double(j), double(k)};
                for (int a = 0; a < 3; ++a) hist[a][std::min(bins - 1, static_cast<int>(s[a] * bins))]++;
            }
    REQUIRE(n == 100000);
    for (int a = 0; a < 3; ++a) {
        double chi2 = 0, e = n / double(bins);
        for (int v : hist[a]) chi2 += (v - e) * (v - e) / e;
        CHECK(chi2 < 27.88);  // chi-square, 9 dof, p = 0.001
    }
}

TEST_CASE("gather rings") {
    NeighborhoodGrid g = unitGrid(4);
    FoamParams fp;
    CHECK(gatherSeeds(g, {1, 1, 1}, fp).size() == 125);
    CHECK(gatherSeeds(g, {0, 0, 0}, fp).size() == 125);
    fp.gatherRing = 1;
    CHECK(gatherSeeds(g, {3, 3, 3}, fp).size() == 27);
}

TEST_CASE("naive membership agrees with the clipped-bisector skeleton oracle") {
    const int n = 5;
    NeighborhoodGrid g = unitGrid(n);
    FoamParams fp = params(0.22 / n, 17);
    FoamScale fs(g, fp, FoamMethod::Naive);
    std::mt19937_64 rng(31);
    int inside = 0, tested = 0;
    for (int i = 0; i < 150; ++i) {
        Point3 p = randomIn(g.extent(), rng);
        double d = skeleton(g, fp, p);
        if (std::abs(d - fp.beamRadius) < 1e-9) continue;
        ++tested;
        bool ref = d <= fp.beamRadius;
        inside += ref;
        CHECK(fs.pointMembership(p).inside == ref);
    }
    CHECK(inside > 5);
    CHECK(inside < tested);
}

TEST_CASE("a point on a Voronoi face of a symmetric arrangement") {
    // seeds on an exact lattice with one pair nudged: the midpoint of the pair lies on their shared face
    std::vector<Point3> seeds;
    for (int k = -2; k <= 2; ++k)
        for (int j = -2; j <= 2; ++j)
            for (int i = -2; i <= 2; ++i) seeds.push_back({i + 0.013 * j, j + 0.021 * k, k + 0.017 * i});
    Point3 mid = (seeds[62] + seeds[63]) * 0.5;
    double d = oracle::voronoiSkeletonDistance(seeds, mid, 2.5);
    for (double r : {0.5 * d, 0.999 * d, 1.001 * d, 2 * d})
        if (r < 0.5) CHECK(naiveFoamMembership(seeds, mid, r) == (d <= r));
}

TEST_CASE("beam radius extremes") {
    NeighborhoodGrid g = unitGrid(3);
    auto seeds = gatherSeeds(g, {1, 1, 1}, FoamParams{}).points;
    std::mt19937_64 rng(2);
    const double halfDiag = 0.5 * std::sqrt(3.0) / 3;
    int tinyInside = 0;
    for (int i = 0; i < 500; ++i) {
        Point3 p = randomIn(g.cellBox({1, 1, 1}), rng);
        CHECK(naiveFoamMembership(seeds, p, halfDiag));
        tinyInside += naiveFoamMembership(seeds, p, 1e-12);
    }
    CHECK(tinyInside == 0);
    FoamParams big = params(halfDiag, 1);
    auto pc = buildFoamPrecomp(g, {1, 1, 1}, big, FoamMethod::Method2);
    for (int i = 0; i < 200; ++i) CHECK(foamCellMembership(*pc, randomIn(pc->box, rng)));
}

TEST_CASE("method 1 candidate lines") {
    std::vector<Point3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    Box3 huge{{-10, -10, -10}, {10, 10, 10}};
    CHECK(precomputeEdgesMethod1(three, huge, 1).size() == 1);
    // the bisector line of these seeds is parallel to z at (0.5, 0.5); a box far off in x culls it
    Box3 far{{5, -1, -1}, {6, 1, 1}};
    CHECK(precomputeEdgesMethod1(three, far, 1).empty());
    CHECK_FALSE(tripletLine({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, 0, 1, 2));

    NeighborhoodGrid g = unitGrid(6);
    auto seeds = gatherSeeds(g, {2, 3, 2}, params(0.02, 5)).points;
    auto lines = precomputeEdgesMethod1(seeds, g.cellBox({2, 3, 2}).inflated(0.02), 4);
    CHECK(lines.size() > 0);
    CHECK(lines.size() < 317750u);
}

TEST_CASE("method 2 on two tetrahedra sharing a face") {
    std::vector<Point3> p{{0, 0, 0}, {1, 0, 0}, {0.3, 0.9, 0}, {0.4, 0.3, 0.8}, {0.45, 0.35, -0.7}};
    auto dt = buildTetrahedralization(p);
    REQUIRE(dt.tets.size() == 2);
    auto segs = precomputeEdgesMethod2(dt, Box3{{-10, -10, -10}, {10, 10, 10}});
    REQUIRE(segs.size() == 1);
    auto ids = segs[0].ids;
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::array<int, 3>{0, 1, 2});
    auto c1 = oracle::circumcenter(p[0], p[1], p[2], p[3]);
    auto c2 = oracle::circumcenter(p[0], p[1], p[2], p[4]);
    REQUIRE(c1);
    REQUIRE(c2);
    bool direct = dist(segs[0].a, *c1) < 1e-9 && dist(segs[0].b, *c2) < 1e-9;
    bool swapped = dist(segs[0].a, *c2) < 1e-9 && dist(segs[0].b, *c1) < 1e-9;
    CHECK((direct || swapped));
}

TEST_CASE("method 2 segments are Voronoi edges covered by method 1 lines") {
    NeighborhoodGrid g = unitGrid(8);
    for (int c = 0; c < 20; ++c) {
        CellIndex ci{c % 8, (3 * c) % 8, (5 * c) % 8};
        FoamParams fp = params(0.16 / 8, 100 + c);
        auto seeds = gatherSeeds(g, ci, fp).points;
        Box3 box = g.cellBox(ci).inflated(fp.beamRadius);
        auto dt = buildTetrahedralization(seeds);
        auto segs = precomputeEdgesMethod2(dt, box);
        auto lines = precomputeEdgesMethod1(seeds, box, 4);
        std::map<std::array<int, 3>, const TripletLine*> byIds;
        for (const auto& l : lines) byIds[l.ids] = &l;
        for (const auto& s : segs) {
            if (!segmentIntersectsBox(box, s.a, s.b)) continue;
            auto ids = s.ids;
            std::sort(ids.begin(), ids.end());
            auto it = byIds.find(ids);
            REQUIRE_MESSAGE(it != byIds.end(), "segment without a candidate line");
            const TripletLine& l = *it->second;
            for (const Point3& e : {s.a, s.b}) {
                Point3 w = e - l.base;
                CHECK(norm(w - l.dir * dot(w, l.dir)) < 1e-9);
            }
            // the endpoints are equidistant from the three seeds and no seed is closer
            Point3 m = (s.a + s.b) * 0.5;
            double d0 = dist(m, seeds[ids[0]]);
            CHECK(std::abs(dist(m, seeds[ids[1]]) - d0) < 1e-9);
            CHECK(std::abs(dist(m, seeds[ids[2]]) - d0) < 1e-9);
            for (const auto& q : seeds) CHECK(dist(m, q) >= d0 - 1e-9);
        }
    }
}

TEST_CASE("each method 2 segment joins the circumcenters of the two tetrahedra on its face") {
    NeighborhoodGrid g = unitGrid(6);
    auto seeds = gatherSeeds(g, {3, 3, 3}, params(0.02, 7)).points;
    auto dt = buildTetrahedralization(seeds);
    auto segs = precomputeEdgesMethod2(dt, g.cellBox({3, 3, 3}).inflated(0.1));
    REQUIRE(!segs.empty());
    for (const auto& s : segs) {
        std::set<int> tri(s.ids.begin(), s.ids.end());
        int owners = 0;
        for (const auto& t : dt.tets) {
            int shared = 0;
            for (int v : t.v) shared += tri.count(v);
            if (shared != 3) continue;
            ++owners;
            CHECK(std::min(dist(t.circumcenter, s.a), dist(t.circumcenter, s.b)) < 1e-12);
        }
        CHECK(owners == 2);
    }
}

TEST_CASE("set membership equals the naive query for both methods") {
    const int n = 8;
    NeighborhoodGrid g = unitGrid(n);
    FoamParams fp = params(0.16 / n, 3);
    FoamScale naive(g, fp, FoamMethod::Naive);
    std::mt19937_64 rng(5);
    int inside = 0;
    for (int c = 0; c < 5; ++c) {
        CellIndex ci{c, 7 - c, (2 * c) % n};
        auto p1 = buildFoamPrecomp(g, ci, fp, FoamMethod::Method1);
        auto p2 = buildFoamPrecomp(g, ci, fp, FoamMethod::Method2);
        for (int i = 0; i < 2000; ++i) {
            Point3 p = randomIn(p1->box, rng);
            bool ref = naive.pointMembership(p).inside;
            inside += ref;
            CHECK(foamCellMembership(*p1, p) == ref);
            CHECK(foamCellMembership(*p2, p) == ref);
        }
    }
    CHECK(inside > 100);
}

TEST_CASE("foam distance examples") {
    const int n = 6;
    NeighborhoodGrid g = unitGrid(n);
    FoamParams fp = params(0.16 / n, 12);
    FoamScale fs(g, fp);
    CellIndex ci{2, 3, 3};
    auto pc = buildFoamPrecomp(g, ci, fp, FoamMethod::Method2);
    int onEdge = 0, atRadius = 0;
    for (const auto& s : pc->segments) {
        Point3 m = (s.a + s.b) * 0.5;
        if (!pc->box.contains(m)) continue;
        ++onEdge;
        CHECK(foamCellSample(*pc, m).distance == doctest::Approx(-fp.beamRadius).epsilon(1e-12));
        CHECK(fs.pointSample(m).distance == doctest::Approx(-fp.beamRadius).epsilon(1e-12));
        // offset perpendicular to the segment by the beam radius
        Point3 dir = normalized(s.b - s.a);
        Point3 perp = normalized(cross(dir, std::abs(dir.x) < 0.9 ? Point3{1, 0, 0} : Point3{0, 1, 0}));
        Point3 q = m + perp * fp.beamRadius;
        if (!pc->box.contains(q)) continue;
        if (std::abs(skeleton(g, fp, q) - fp.beamRadius) > 1e-12) continue;  // another edge is closer
        ++atRadius;
        CHECK(std::abs(foamCellSample(*pc, q).distance) < 1e-9);
        CHECK(std::abs(fs.pointSample(q).distance) < 1e-9);
    }
    CHECK(onEdge > 0);
    CHECK(atRadius > 0);
}

TEST_CASE("set distance tracks the point distance") {
    const int n = 5;
    NeighborhoodGrid g = unitGrid(n);
    FoamParams fp = params(0.16 / n, 4);
    FoamScale fs(g, fp);
    std::mt19937_64 rng(77);
    for (int c = 0; c < 4; ++c) {
        CellIndex ci{c, c, 4 - c};
        auto p2 = buildFoamPrecomp(g, ci, fp, FoamMethod::Method2);
        auto p1 = buildFoamPrecomp(g, ci, fp, FoamMethod::Method1);
        for (int i = 0; i < 200; ++i) {
            Point3 p = randomIn(p2->box, rng);
            CellSample ref = fs.pointSample(p);
            CellSample s2 = foamCellSample(*p2, p), s1 = foamCellSample(*p1, p);
            CHECK(s2.inside == ref.inside);
            CHECK(s1.inside == ref.inside);
            CHECK(std::abs(s2.distance - ref.distance) <= 1e-9 * std::max(1.0, std::abs(ref.distance)));
            CHECK(s1.distance == ref.distance);
        }
    }
}

TEST_CASE("segment chunks and sorted neighbor bounds are sound") {
    NeighborhoodGrid g = unitGrid(6);
    FoamParams fp = params(0.02, 9);
    auto pc = buildFoamPrecomp(g, {2, 3, 1}, fp, FoamMethod::Method2);
    int n = static_cast<int>(pc->seeds.size());
    REQUIRE(static_cast<int>(pc->chunkOffset.size()) == n + 1);
    for (int s = 0; s < n; ++s) {
        // chunks tile the adjacency range in order, near chunks first
        int next = pc->adjOffset[s];
        for (int k = pc->chunkOffset[s]; k < pc->chunkOffset[s + 1]; ++k) {
            const auto& ch = pc->adjChunk[k];
            CHECK(ch.begin == next);
            CHECK(ch.end > ch.begin);
            CHECK(ch.end - ch.begin <= 8);
            if (k == pc->chunkOffset[s] + pc->chunkNear[s]) CHECK(ch.begin == pc->adjOffset[s] + pc->adjNear[s]);
            next = ch.end;
            for (int q = ch.begin; q < ch.end; ++q) {
                const auto& sg = pc->adjSeg[q];
                CHECK(dist(ch.center, sg.a) <= ch.radius * (1 + 1e-12));
                CHECK(dist(ch.center, sg.a + sg.ab) <= ch.radius * (1 + 1e-12));
            }
        }
        CHECK(next == pc->adjOffset[s + 1]);
    }
    std::mt19937_64 rng(5);
    int sc = pc->subcells;
    for (int i = 0; i < 300; ++i) {
        Point3 p = randomIn(pc->box, rng);
        int sub = pc->subcellOf(p);
        REQUIRE(sub < sc * sc * sc);
        for (int q = pc->neighborOffset[sub]; q < pc->neighborOffset[sub + 1]; ++q) {
            CHECK(pc->neighborLower[q] <= dist(p, pc->seeds.points[pc->neighborIndex[q]]));
            if (q > pc->neighborOffset[sub]) CHECK(pc->neighborLower[q - 1] <= pc->neighborLower[q]);
        }
    }
}

TEST_CASE("membership depends only on seeds within the gather ring") {
    const int n = 8;
    NeighborhoodGrid g = unitGrid(n);
    FoamParams fp = params(0.16 / n, 21);
    CellIndex ci{4, 4, 4};
    FoamParams perturbed = fp;
    perturbed.saltForCell = [ci](const CellIndex& q) -> std::uint64_t {
        int cheb = std::max({std::abs(q.i - ci.i), std::abs(q.j - ci.j), std::abs(q.k - ci.k)});
        return cheb > 2 ? 9999 : 21;
    };
    FoamScale a(g, fp), b(g, perturbed);
    auto pa = buildFoamPrecomp(g, ci, fp, FoamMethod::Method2);
    auto pb = buildFoamPrecomp(g, ci, perturbed, FoamMethod::Method2);
    CHECK(seedForCell(g, {0, 0, 0}, 21).position != seedForCell(g, {0, 0, 0}, 9999).position);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) {
        Point3 p = randomIn(g.cellBox(ci), rng);
        CHECK(a.pointMembership(p).inside == b.pointMembership(p).inside);
        CHECK(foamCellMembership(*pa, p) == foamCellMembership(*pb, p));
    }
}

TEST_CASE("foam scale validates its parameters") {
    NeighborhoodGrid g = unitGrid(4);
    CHECK_THROWS(FoamScale(g, params(0.0, 1)));
    CHECK_THROWS(FoamScale(g, params(0.2, 1)));
    FoamParams bad = params(0.01, 1);
    bad.gatherRing = 0;
    CHECK_THROWS(FoamScale(g, bad));
}
