#pragma once

#include "msq/core.hpp"
#include "msq/delaunay.hpp"

#include <functional>
#include <optional>

namespace msq {

struct FoamParams {
    double beamRadius = 0.05;
    std::uint64_t rngSalt = 1;
    int gatherRing = 2;
    // Distance queries never report more than this beyond the beam surface; 0 = min cell edge / 3.
    double distanceReach = 0.0;
    // Subclusters per axis used to accelerate the closest-seed search in set queries.
    int subcells = 4;
    // Test hook: per-cell salt override; empty = rngSalt everywhere.
    std::function<std::uint64_t(const CellIndex&)> saltForCell;
};

enum class FoamMethod { Naive, Method1, Method2 };

const char* foamMethodName(FoamMethod m);
FoamMethod parseFoamMethod(const std::string& s);

struct Seed {
    Point3 position;
    std::uint64_t id = 0;
};

std::uint64_t seedIdForCell(const CellIndex& c);
// Uniform point in the cell box; pure function of (grid, cell, salt). Cells outside the grid are valid.
Seed seedForCell(const NeighborhoodGrid& grid, const CellIndex& c, std::uint64_t salt);

struct SeedSet {
    CellIndex centerCell;
    std::vector<Point3> points;
    std::vector<std::uint64_t> ids;

    std::size_t size() const { return points.size(); }
};

// (2g+1)^3 seeds in lexicographic (i, j, k) cell order, k fastest.
SeedSet gatherSeeds(const NeighborhoodGrid& grid, const CellIndex& c, const FoamParams& params);

// Index of the closest seed: first minimum of |p - s|^2 in seed order.
int closestSeed(const std::vector<Point3>& seeds, const Point3& p);

// Equidistant line of three seeds: base is the triangle circumcenter, dir the unit normal.
struct TripletLine {
    std::array<int, 3> ids;  // ascending seed indices
    Point3 base;
    Point3 dir;
};
std::optional<TripletLine> tripletLine(const std::vector<Point3>& seeds, int a, int b, int c);

// Inside test of p against one candidate line incident to its closest seed c: the foot of the
// perpendicular must be within r, no seed outside the triplet may be closer to the foot than s_c,
// and the edge must be bounded on both sides.
bool tripletContains(const std::vector<Point3>& seeds, int c, const TripletLine& line, const Point3& p, double r2);

// Membership of p against the local diagram of a gathered seed set, testing every triplet with c.
bool naiveFoamMembership(const std::vector<Point3>& seeds, const Point3& p, double r);

// Finite Voronoi edge of the local diagram.
struct VoronoiSegment {
    std::array<int, 3> ids;
    Point3 a;
    Point3 b;
};

struct FoamCellPrecomp : CellState {
    CellIndex cell;
    Box3 box;
    FoamMethod method = FoamMethod::Method2;
    SeedSet seeds;
    double radius = 0.0;
    double cap = 0.0;

    std::vector<TripletLine> lines;
    std::vector<VoronoiSegment> segments;
    // Edge adjacency per seed (CSR): indices into lines or segments.
    std::vector<int> adjOffset;
    std::vector<int> adjIndex;
    // Per seed, adjacency entries are ordered with the ones within beamRadius of the box first.
    std::vector<int> adjNear;
    // Method 2: segment geometry copied in adjacency order for the per-sample loops.
    struct AdjSegment {
        Point3 a, ab;
        double l2;
        double halfLength;
    };
    std::vector<AdjSegment> adjSeg;
    // Method 2: adjacency ranges split into spatially coherent chunks with bounding spheres.
    // Per seed, chunks [chunkOffset[s], chunkOffset[s] + chunkNear[s]) cover the near entries.
    struct AdjChunk {
        Point3 center;
        double radius;
        int begin, end;
    };
    std::vector<AdjChunk> adjChunk;
    std::vector<int> chunkOffset;
    std::vector<int> chunkNear;

    int subcells = 1;
    Point3 subSize;
    std::vector<int> closestOffset;
    std::vector<int> closestIndex;
    std::vector<int> neighborOffset;
    std::vector<int> neighborIndex;
    // Per subcell, neighbors are sorted by their distance to the subcell box, stored alongside.
    std::vector<float> neighborLower;

    std::size_t bytes() const override;
    int subcellOf(const Point3& p) const;
    int closest(const Point3& p) const;
};

// Built once per cell; the box is inflated by beamRadius for membership edges and by the distance cap otherwise.
std::shared_ptr<FoamCellPrecomp> buildFoamPrecomp(const NeighborhoodGrid& grid, const CellIndex& cell,
                                                  const FoamParams& params, FoamMethod method);
// Per subcluster of the box (n per axis, x fastest), the seeds that can be closest somewhere in it.
std::vector<std::vector<int>> subcellNearest(const Box3& box, int n, const std::vector<Point3>& seeds);
// Candidate lines of the triplets whose seeds can be jointly closest within one subcluster of the cull
// box and whose line meets the box.
std::vector<TripletLine> precomputeEdgesMethod1(const std::vector<Point3>& seeds, const Box3& cullBox,
                                                int subcells = 4);
std::vector<VoronoiSegment> precomputeEdgesMethod2(const Tetrahedralization& dt, const Box3& cullBox);

bool foamCellMembership(const FoamCellPrecomp& pc, const Point3& p);
CellSample foamCellSample(const FoamCellPrecomp& pc, const Point3& p);

// Conservative signed distance from the local diagram, recomputing the needed edges from the seeds.
double localFoamDistance(const std::vector<Point3>& seeds, const Point3& p, bool inside, double r, double cap);

class FoamScale : public Scale {
public:
    FoamScale(NeighborhoodGrid grid, FoamParams params, FoamMethod method = FoamMethod::Method2,
              MaterialResult material = MaterialResult{1, {1.0, 1.0}});

    std::string typeName() const override { return "voronoi-foam"; }
    const FoamParams& params() const { return params_; }
    FoamMethod method() const { return method_; }
    void setMethod(FoamMethod m) { method_ = m; }
    double distanceCap() const;
    SeedSet gather(const CellIndex& c) const { return gatherSeeds(grid_, c, params_); }

    MembershipResult pointMembership(const Point3& p) const override;
    DistanceResult pointDistance(const Point3& p) const override;
    MaterialResult insideMaterial(const Point3& p) const override;
    CellSample pointSample(const Point3& p) const override;

    bool providesSetQueries() const override { return method_ != FoamMethod::Naive; }
    std::shared_ptr<const CellState> prepareCell(const CellIndex& cell) const override;
    bool cellMembership(const CellState& state, const Point3& p) const override;
    CellSample cellSample(const CellState& state, const Point3& p) const override;
    bool cacheableState() const override { return true; }

private:
    FoamParams params_;
    FoamMethod method_;
    MaterialResult material_;
};

}  // namespace msq
