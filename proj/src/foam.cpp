#include "msq/foam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msq {

namespace {

constexpr double kLineSlack = 1e-6;
constexpr double kNearSlack = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

Box3 inflateRel(const Box3& b, double m, double edge) { return b.inflated(m * (1.0 + kLineSlack) + 1e-12 * edge); }

bool planeMissesBox(const Point3& a, const Point3& b, const Box3& box) {
    Point3 n = b - a;
    Point3 mid = (a + b) * 0.5;
    Point3 c = box.center();
    Point3 h = box.size() * 0.5;
    double s = std::abs(n.x) * h.x + std::abs(n.y) * h.y + std::abs(n.z) * h.z;
    double d = std::abs(dot(n, c - mid));
    return d > s * (1.0 + kNearSlack) + 1e-300;
}

std::uint64_t faceKey(int a, int b, int c) {
    int v[3] = {a, b, c};
    std::sort(v, v + 3);
    return (static_cast<std::uint64_t>(v[0]) << 42) | (static_cast<std::uint64_t>(v[1]) << 21) |
           static_cast<std::uint64_t>(v[2]);
}

// Segment of the triplet line on which the triplet seeds are at least as close as every seed in `others`.
bool lineInterval(const std::vector<Point3>& seeds, const TripletLine& L, const std::vector<int>& others, double& tlo,
                  double& thi) {
    const Point3& sx = seeds[L.ids[0]];
    double bx = dist2(L.base, sx);
    tlo = -kInf;
    thi = kInf;
    for (int m : others) {
        if (m == L.ids[0] || m == L.ids[1] || m == L.ids[2]) continue;
        const Point3& sm = seeds[m];
        double alpha = 2.0 * dot(L.dir, sm - sx);
        double beta = dist2(L.base, sm) - bx;
        if (alpha > 0.0) thi = std::min(thi, beta / alpha);
        else if (alpha < 0.0) tlo = std::max(tlo, beta / alpha);
        else if (beta < 0.0) return false;
        if (tlo > thi) return false;
    }
    return true;
}

double segmentDistanceOnLine(const TripletLine& L, double tlo, double thi, const Point3& p) {
    double t = std::clamp(dot(p - L.base, L.dir), tlo, thi);
    return dist(p, L.base + L.dir * t);
}

// min(cap, distance from p to the finite edges of seed x) using only seeds in N.
double edgeDistanceLocal(const std::vector<Point3>& seeds, const std::vector<int>& N, int x, const Point3& p,
                         double cap) {
    const Point3& sx = seeds[x];
    std::size_t m = N.size();
    thread_local std::vector<double> ax, ay, az, e, g;
    thread_local std::vector<int> id;
    for (auto* v : {&ax, &ay, &az, &e, &g}) v->resize(m);
    id.resize(m);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < m; ++i) {
        int j = N[i];
        if (j == x) continue;
        Point3 a = seeds[j] - sx;
        Point3 mid = (seeds[j] + sx) * 0.5;
        ax[cnt] = a.x;
        ay[cnt] = a.y;
        az[cnt] = a.z;
        e[cnt] = dot(a, p - mid);
        g[cnt] = norm2(a);
        id[cnt] = j;
        ++cnt;
    }
    double best = cap;
    double R = cap * cap * (1.0 + kLineSlack);
    for (std::size_t j = 0; j < cnt; ++j) {
        if (e[j] * e[j] > R * g[j]) continue;
        for (std::size_t k = j + 1; k < cnt; ++k) {
            double gjk = ax[j] * ax[k] + ay[j] * ay[k] + az[j] * az[k];
            double det = g[j] * g[k] - gjk * gjk;
            double num = e[j] * e[j] * g[k] - 2.0 * e[j] * e[k] * gjk + e[k] * e[k] * g[j];
            if (!(num <= R * det || det <= 1e-12 * g[j] * g[k])) continue;
            auto L = tripletLine(seeds, x, id[j], id[k]);
            if (!L) continue;
            double tlo, thi;
            if (!lineInterval(seeds, *L, N, tlo, thi)) continue;
            best = std::min(best, segmentDistanceOnLine(*L, tlo, thi, p));
        }
    }
    return best;
}

// Plane-pair line distance prefilter of one row of (j, k) pairs; pass[k] >= 0 marks a candidate.
void pairRow(double xj, double yj, double zj, double ej, double gj, const double* __restrict ax,
             const double* __restrict ay, const double* __restrict az, const double* __restrict e,
             const double* __restrict g, double* __restrict pass, std::size_t k0, std::size_t m, double R) {
    for (std::size_t k = k0; k < m; ++k) {
        double gjk = xj * ax[k] + yj * ay[k] + zj * az[k];
        double det = gj * g[k] - gjk * gjk;
        double num = ej * ej * g[k] - 2.0 * ej * e[k] * gjk + e[k] * e[k] * gj;
        double a = R * det - num;
        double b = 1e-12 * gj * g[k] - det;
        pass[k] = a > b ? a : b;
    }
}

void buildCsr(int n, const std::vector<std::vector<int>>& lists, std::vector<int>& off, std::vector<int>& idx) {
    off.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) off[i + 1] = off[i] + static_cast<int>(lists[i].size());
    idx.clear();
    idx.reserve(off[n]);
    for (const auto& l : lists) idx.insert(idx.end(), l.begin(), l.end());
}

}  // namespace

const char* foamMethodName(FoamMethod m) {
    switch (m) {
        case FoamMethod::Naive: return "naive";
        case FoamMethod::Method1: return "setq1";
        case FoamMethod::Method2: return "setq2";
    }
    return "?";
}

FoamMethod parseFoamMethod(const std::string& s) {
    if (s == "naive") return FoamMethod::Naive;
    if (s == "setq1" || s == "m1") return FoamMethod::Method1;
    if (s == "setq2" || s == "m2") return FoamMethod::Method2;
    throw std::invalid_argument("unknown foam method: " + s);
}

std::uint64_t seedIdForCell(const CellIndex& c) {
    constexpr std::uint64_t bias = 1u << 20, mask = (1u << 21) - 1;
    return ((static_cast<std::uint64_t>(c.i + bias) & mask) << 42) |
           ((static_cast<std::uint64_t>(c.j + bias) & mask) << 21) | (static_cast<std::uint64_t>(c.k + bias) & mask);
}

Seed seedForCell(const NeighborhoodGrid& grid, const CellIndex& c, std::uint64_t salt) {
    const Point3& o = grid.origin();
    const Point3& h = grid.cellSize();
    Point3 p;
    int idx[3] = {c.i, c.j, c.k};
    std::uint64_t stream = cellStream(salt, c);
    for (int a = 0; a < 3; ++a) {
        double u = unitFromBits(cellStreamValue(stream, static_cast<std::uint64_t>(a)));
        double lo = o[a] + idx[a] * h[a];
        double hi = o[a] + (idx[a] + 1) * h[a];
        p[a] = std::min(lo + u * h[a], hi);
    }
    return {p, seedIdForCell(c)};
}

SeedSet gatherSeeds(const NeighborhoodGrid& grid, const CellIndex& c, const FoamParams& params) {
    int g = params.gatherRing;
    SeedSet s;
    s.centerCell = c;
    std::size_t n = static_cast<std::size_t>(2 * g + 1);
    s.points.reserve(n * n * n);
    s.ids.reserve(n * n * n);
    for (int di = -g; di <= g; ++di)
        for (int dj = -g; dj <= g; ++dj)
            for (int dk = -g; dk <= g; ++dk) {
                CellIndex q{c.i + di, c.j + dj, c.k + dk};
                std::uint64_t salt = params.saltForCell ? params.saltForCell(q) : params.rngSalt;
                Seed sd = seedForCell(grid, q, salt);
                s.points.push_back(sd.position);
                s.ids.push_back(sd.id);
            }
    return s;
}

int closestSeed(const std::vector<Point3>& seeds, const Point3& p) {
    int best = 0;
    double bd = dist2(p, seeds[0]);
    for (int i = 1; i < static_cast<int>(seeds.size()); ++i) {
        double d = dist2(p, seeds[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

std::optional<TripletLine> tripletLine(const std::vector<Point3>& seeds, int a, int b, int c) {
    std::array<int, 3> ids{a, b, c};
    std::sort(ids.begin(), ids.end());
    const Point3& s0 = seeds[ids[0]];
    const Point3& s1 = seeds[ids[1]];
    const Point3& s2 = seeds[ids[2]];
    auto cc = triangleCircumcenter(s0, s1, s2);
    if (!cc) return std::nullopt;
    Point3 n = cross(s1 - s0, s2 - s0);
    return TripletLine{ids, *cc, normalized(n)};
}

bool tripletContains(const std::vector<Point3>& seeds, int c, const TripletLine& L, const Point3& p, double r2) {
    double t = dot(p - L.base, L.dir);
    Point3 f = L.base + L.dir * t;
    if (dist2(p, f) > r2) return false;
    const Point3& sc = seeds[c];
    double dc = dist2(f, sc);
    bool below = false, above = false;
    for (int m = 0; m < static_cast<int>(seeds.size()); ++m) {
        if (m == L.ids[0] || m == L.ids[1] || m == L.ids[2]) continue;
        if (dist2(f, seeds[m]) < dc) return false;
        Point3 d = seeds[m] - sc;
        double a = dot(d, L.dir);
        if (a * a > 1e-18 * norm2(d)) (a > 0 ? above : below) = true;
    }
    return above && below;
}

bool naiveFoamMembership(const std::vector<Point3>& seeds, const Point3& p, double r) {
    int c = closestSeed(seeds, p);
    const Point3& sc = seeds[c];
    std::size_t n = seeds.size();
    thread_local std::vector<double> buf;
    thread_local std::vector<int> idBuf;
    thread_local std::vector<double> passBuf;
    buf.resize(5 * n);
    idBuf.resize(n);
    passBuf.resize(n);
    double* __restrict ax = buf.data();
    double* __restrict ay = ax + n;
    double* __restrict az = ay + n;
    double* __restrict e = az + n;
    double* __restrict g = e + n;
    int* id = idBuf.data();
    double* __restrict pass = passBuf.data();
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<int>(j) == c) continue;
        Point3 a = seeds[j] - sc;
        Point3 mid = (seeds[j] + sc) * 0.5;
        ax[m] = a.x;
        ay[m] = a.y;
        az[m] = a.z;
        e[m] = dot(a, p - mid);
        g[m] = norm2(a);
        id[m] = static_cast<int>(j);
        ++m;
    }
    double r2 = r * r;
    double R = r2 * (1.0 + kLineSlack);
    for (std::size_t j = 0; j < m; ++j) {
        const double xj = ax[j], yj = ay[j], zj = az[j], ej = e[j], gj = g[j];
        pairRow(xj, yj, zj, ej, gj, ax, ay, az, e, g, pass, j + 1, m, R);
        for (std::size_t k = j + 1; k < m; ++k) {
            if (!(pass[k] >= 0.0)) continue;
            auto L = tripletLine(seeds, c, id[j], id[k]);
            if (L && tripletContains(seeds, c, *L, p, r2)) return true;
        }
    }
    return false;
}

std::vector<std::vector<int>> subcellNearest(const Box3& box, int n, const std::vector<Point3>& seeds) {
    double cellBound = kInf;
    for (const Point3& s : seeds) cellBound = std::min(cellBound, box.maxDistance2(s));
    std::vector<int> cand;
    for (int i = 0; i < static_cast<int>(seeds.size()); ++i)
        if (box.distance2(seeds[i]) <= cellBound * (1.0 + kNearSlack)) cand.push_back(i);
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n) * n * n);
    Point3 sub = box.size() / static_cast<double>(n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                Point3 lo = box.lo + cmul(sub, Point3{double(i), double(j), double(k)});
                Box3 B{lo, lo + sub};
                if (i == n - 1) B.hi.x = box.hi.x;
                if (j == n - 1) B.hi.y = box.hi.y;
                if (k == n - 1) B.hi.z = box.hi.z;
                double bound = kInf;
                for (int c : cand) bound = std::min(bound, B.maxDistance2(seeds[c]));
                auto& l = out[i + n * (j + n * k)];
                for (int c : cand)
                    if (B.distance2(seeds[c]) <= bound * (1.0 + kNearSlack)) l.push_back(c);
            }
    return out;
}

std::vector<TripletLine> precomputeEdgesMethod1(const std::vector<Point3>& seeds, const Box3& cullBox, int subcells) {
    auto near = subcellNearest(cullBox, std::max(1, subcells), seeds);
    std::vector<std::uint64_t> keys;
    for (const auto& l : near)
        for (std::size_t a = 0; a < l.size(); ++a)
            for (std::size_t b = a + 1; b < l.size(); ++b)
                for (std::size_t c = b + 1; c < l.size(); ++c) keys.push_back(faceKey(l[a], l[b], l[c]));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    constexpr std::uint64_t mask = (1u << 21) - 1;
    std::vector<TripletLine> out;
    for (std::uint64_t key : keys) {
        int i = static_cast<int>(key >> 42), j = static_cast<int>((key >> 21) & mask), k = static_cast<int>(key & mask);
        if (planeMissesBox(seeds[i], seeds[j], cullBox) || planeMissesBox(seeds[i], seeds[k], cullBox) ||
            planeMissesBox(seeds[j], seeds[k], cullBox))
            continue;
        auto L = tripletLine(seeds, i, j, k);
        if (L && clipLine(cullBox, L->base, L->dir, -kInf, kInf)) out.push_back(*L);
    }
    return out;
}

std::vector<VoronoiSegment> precomputeEdgesMethod2(const Tetrahedralization& dt, const Box3& cullBox) {
    struct Face {
        std::uint64_t key;
        int tet;
    };
    std::vector<Face> faces;
    faces.reserve(dt.tets.size() * 4);
    for (int t = 0; t < static_cast<int>(dt.tets.size()); ++t) {
        const auto& v = dt.tets[t].v;
        for (int f = 0; f < 4; ++f) faces.push_back({faceKey(v[(f + 1) % 4], v[(f + 2) % 4], v[(f + 3) % 4]), t});
    }
    std::sort(faces.begin(), faces.end(), [](const Face& x, const Face& y) {
        return x.key != y.key ? x.key < y.key : x.tet < y.tet;
    });
    constexpr std::uint64_t mask = (1u << 21) - 1;
    std::vector<VoronoiSegment> out;
    for (std::size_t q = 0; q + 1 < faces.size(); ++q) {
        if (faces[q].key != faces[q + 1].key) continue;
        const Point3& p = dt.tets[faces[q].tet].circumcenter;
        const Point3& r = dt.tets[faces[q + 1].tet].circumcenter;
        std::uint64_t key = faces[q].key;
        ++q;
        if (!segmentIntersectsBox(cullBox, p, r)) continue;
        std::array<int, 3> ids{static_cast<int>(key >> 42), static_cast<int>((key >> 21) & mask),
                               static_cast<int>(key & mask)};
        out.push_back({ids, p, r});
    }
    return out;
}

std::size_t FoamCellPrecomp::bytes() const {
    auto vb = [](const auto& v) { return v.capacity() * sizeof(v[0]); };
    return sizeof(*this) + vb(seeds.points) + vb(seeds.ids) + vb(lines) + vb(segments) + vb(adjOffset) +
           vb(adjIndex) + vb(adjNear) + vb(adjSeg) + vb(closestOffset) + vb(closestIndex) + vb(neighborOffset) +
           vb(neighborIndex) + vb(neighborLower) + vb(adjChunk) + vb(chunkOffset) + vb(chunkNear);
}

int FoamCellPrecomp::subcellOf(const Point3& p) const {
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        int v = static_cast<int>(std::floor((p[a] - box.lo[a]) / subSize[a]));
        idx[a] = std::clamp(v, 0, subcells - 1);
    }
    return idx[0] + subcells * (idx[1] + subcells * idx[2]);
}

int FoamCellPrecomp::closest(const Point3& p) const {
    int s = subcellOf(p);
    int best = -1;
    double bd = kInf;
    for (int q = closestOffset[s]; q < closestOffset[s + 1]; ++q) {
        int i = closestIndex[q];
        double d = dist2(p, seeds.points[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

namespace {

constexpr int kChunkSize = 8;

// Reorders ids[b, e) by recursive median splits of the segment midpoints along the widest axis and
// appends the resulting leaf ranges (at most kChunkSize entries each) in order.
void chunkOrder(std::vector<int>& ids, int b, int e, const std::vector<Point3>& mids,
                std::vector<std::array<int, 2>>& leaves) {
    if (e - b <= kChunkSize) {
        if (e > b) leaves.push_back({b, e});
        return;
    }
    Point3 lo{kInf, kInf, kInf}, hi{-kInf, -kInf, -kInf};
    for (int q = b; q < e; ++q)
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], mids[ids[q]][k]);
            hi[k] = std::max(hi[k], mids[ids[q]][k]);
        }
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (hi[k] - lo[k] > hi[axis] - lo[axis]) axis = k;
    int m = b + (e - b) / 2;
    std::nth_element(ids.begin() + b, ids.begin() + m, ids.begin() + e,
                     [&](int x, int y) { return mids[x][axis] < mids[y][axis] || (mids[x][axis] == mids[y][axis] && x < y); });
    chunkOrder(ids, b, m, mids, leaves);
    chunkOrder(ids, m, e, mids, leaves);
}

}  // namespace

std::shared_ptr<FoamCellPrecomp> buildFoamPrecomp(const NeighborhoodGrid& grid, const CellIndex& cell,
                                                  const FoamParams& params, FoamMethod method) {
    if (method == FoamMethod::Naive) throw std::invalid_argument("buildFoamPrecomp: naive method has no precomputation");
    auto pc = std::make_shared<FoamCellPrecomp>();
    pc->cell = cell;
    pc->box = grid.cellBox(cell);
    pc->method = method;
    pc->seeds = gatherSeeds(grid, cell, params);
    pc->radius = params.beamRadius;
    double edge = grid.minCellEdge();
    double reach = params.distanceReach > 0 ? params.distanceReach : edge / 3.0;
    pc->cap = params.beamRadius + reach;
    const auto& S = pc->seeds.points;
    int n = static_cast<int>(S.size());
    Box3 rBox = inflateRel(pc->box, pc->radius, edge);
    Box3 capBox = inflateRel(pc->box, pc->cap, edge);

    std::vector<std::vector<int>> adj(n);
    std::vector<int> near(n, 0);
    if (method == FoamMethod::Method1) {
        pc->lines = precomputeEdgesMethod1(S, rBox, params.subcells);
        for (int e = 0; e < static_cast<int>(pc->lines.size()); ++e)
            for (int s : pc->lines[e].ids) adj[s].push_back(e);
        for (int s = 0; s < n; ++s) near[s] = static_cast<int>(adj[s].size());
    } else {
        Tetrahedralization dt = buildTetrahedralization(S);
        pc->segments = precomputeEdgesMethod2(dt, capBox);
        std::vector<std::vector<int>> far(n);
        for (int e = 0; e < static_cast<int>(pc->segments.size()); ++e) {
            const auto& sg = pc->segments[e];
            bool isNear = segmentIntersectsBox(rBox, sg.a, sg.b);
            for (int s : sg.ids) (isNear ? adj[s] : far[s]).push_back(e);
        }
        for (int s = 0; s < n; ++s) {
            near[s] = static_cast<int>(adj[s].size());
            adj[s].insert(adj[s].end(), far[s].begin(), far[s].end());
        }
    }
    std::vector<std::array<int, 2>> leaves;
    if (method == FoamMethod::Method2) {
        std::vector<Point3> mids(pc->segments.size());
        for (std::size_t e = 0; e < mids.size(); ++e) mids[e] = (pc->segments[e].a + pc->segments[e].b) * 0.5;
        pc->chunkNear.assign(n, 0);
        for (int s = 0; s < n; ++s) {
            std::size_t before = leaves.size();
            chunkOrder(adj[s], 0, near[s], mids, leaves);
            pc->chunkNear[s] = static_cast<int>(leaves.size() - before);
            chunkOrder(adj[s], near[s], static_cast<int>(adj[s].size()), mids, leaves);
        }
    }
    buildCsr(n, adj, pc->adjOffset, pc->adjIndex);
    pc->adjNear = near;
    if (method == FoamMethod::Method2) {
        pc->adjSeg.reserve(pc->adjIndex.size());
        for (int e : pc->adjIndex) {
            const auto& sg = pc->segments[e];
            Point3 ab = sg.b - sg.a;
            pc->adjSeg.push_back({sg.a, ab, norm2(ab), 0.5 * norm(ab)});
        }
        // leaves are local to each seed's list; shift them into CSR positions
        pc->chunkOffset.assign(n + 1, 0);
        pc->adjChunk.reserve(leaves.size());
        std::size_t li = 0;
        for (int s = 0; s < n; ++s) {
            pc->chunkOffset[s] = static_cast<int>(pc->adjChunk.size());
            int base = pc->adjOffset[s];
            for (std::size_t total = 0; total < adj[s].size();) {
                auto [lb, le] = leaves[li++];
                Point3 lo{kInf, kInf, kInf}, hi{-kInf, -kInf, -kInf};
                for (int q = base + lb; q < base + le; ++q)
                    for (const Point3& v : {pc->adjSeg[q].a, pc->adjSeg[q].a + pc->adjSeg[q].ab})
                        for (int k = 0; k < 3; ++k) {
                            lo[k] = std::min(lo[k], v[k]);
                            hi[k] = std::max(hi[k], v[k]);
                        }
                Point3 ctr = (lo + hi) * 0.5;
                double rad = 0.0;
                for (int q = base + lb; q < base + le; ++q)
                    rad = std::max({rad, dist(ctr, pc->adjSeg[q].a), dist(ctr, pc->adjSeg[q].a + pc->adjSeg[q].ab)});
                pc->adjChunk.push_back({ctr, rad, base + lb, base + le});
                total += static_cast<std::size_t>(le - lb);
            }
        }
        pc->chunkOffset[n] = static_cast<int>(pc->adjChunk.size());
    }

    // closest-seed candidates per subcell
    int sc = std::max(1, params.subcells);
    pc->subcells = sc;
    pc->subSize = pc->box.size() / static_cast<double>(sc);
    auto closeL = subcellNearest(pc->box, sc, S);
    std::vector<std::vector<int>> nbL(closeL.size());
    std::vector<std::vector<float>> lowerL(closeL.size());
    for (int k = 0; k < sc; ++k)
        for (int j = 0; j < sc; ++j)
            for (int i = 0; i < sc; ++i) {
                int s = i + sc * (j + sc * k);
                Point3 lo = pc->box.lo + cmul(pc->subSize, Point3{double(i), double(j), double(k)});
                Box3 B{lo, lo + pc->subSize};
                if (i == sc - 1) B.hi.x = pc->box.hi.x;
                if (j == sc - 1) B.hi.y = pc->box.hi.y;
                if (k == sc - 1) B.hi.z = pc->box.hi.z;
                double reachC = 0.0;
                for (int c : closeL[s]) reachC = std::max(reachC, std::sqrt(B.maxDistance2(S[c])));
                double rho = (reachC + 2.0 * pc->cap) * (1.0 + kNearSlack);
                std::vector<std::pair<double, int>> cand;
                for (int x = 0; x < n; ++x) {
                    double d2 = B.distance2(S[x]);
                    if (d2 <= rho * rho) cand.push_back({d2, x});
                }
                std::sort(cand.begin(), cand.end());
                for (auto [d2, x] : cand) {
                    nbL[s].push_back(x);
                    // rounded down so the stored value stays a lower bound
                    lowerL[s].push_back(static_cast<float>(std::sqrt(d2) * (1.0 - 1e-6)));
                }
            }
    buildCsr(sc * sc * sc, closeL, pc->closestOffset, pc->closestIndex);
    buildCsr(sc * sc * sc, nbL, pc->neighborOffset, pc->neighborIndex);
    for (const auto& l : lowerL) pc->neighborLower.insert(pc->neighborLower.end(), l.begin(), l.end());
    return pc;
}

namespace {

// Same arithmetic as pointSegmentDistance2 on precomputed a, b - a and |b - a|^2.
inline double adjSegmentDistance2(const FoamCellPrecomp::AdjSegment& s, const Point3& p) {
    Point3 ap = p - s.a;
    double t = 0.0;
    if (s.l2 > 0.0) t = std::clamp(dot(ap, s.ab) / s.l2, 0.0, 1.0);
    return dist2(p, s.a + s.ab * t);
}

inline double chunkMinDistance2(const FoamCellPrecomp& pc, const FoamCellPrecomp::AdjChunk& ch, const Point3& p,
                                double d2) {
    const FoamCellPrecomp::AdjSegment* seg = pc.adjSeg.data();
    for (int q = ch.begin; q < ch.end; ++q) d2 = std::min(d2, adjSegmentDistance2(seg[q], p));
    return d2;
}

// Minimum squared distance over the segments of chunks [b, e), starting from d2. Chunks are visited
// in order of |p - center| - radius, a lower bound on their segment distances, and the scan stops
// once that bound (widened for rounding) exceeds the current distance.
inline double adjMinDistance2(const FoamCellPrecomp& pc, const Point3& p, int b, int e, double d2) {
    const FoamCellPrecomp::AdjChunk* ch = pc.adjChunk.data();
    constexpr int kMax = 64;
    if (e - b > kMax) {
        for (int k = b; k < e; ++k) d2 = chunkMinDistance2(pc, ch[k], p, d2);
        return d2;
    }
    double lb[kMax];
    int order[kMax];
    int n = 0;
    for (int k = b; k < e; ++k) {
        double v = std::sqrt(dist2(p, ch[k].center)) - ch[k].radius * (1.0 + 1e-9);
        int i = n++;
        while (i > 0 && lb[i - 1] > v) {
            lb[i] = lb[i - 1];
            order[i] = order[i - 1];
            --i;
        }
        lb[i] = v;
        order[i] = k;
    }
    for (int i = 0; i < n; ++i) {
        if (lb[i] > 0.0 && lb[i] * lb[i] > d2 * (1.0 + 1e-9)) break;
        d2 = chunkMinDistance2(pc, ch[order[i]], p, d2);
    }
    return d2;
}

}  // namespace

bool foamCellMembership(const FoamCellPrecomp& pc, const Point3& p) {
    int c = pc.closest(p);
    int b = pc.adjOffset[c], e = b + pc.adjNear[c];
    double r2 = pc.radius * pc.radius;
    if (pc.method == FoamMethod::Method1) {
        for (int q = b; q < e; ++q)
            if (tripletContains(pc.seeds.points, c, pc.lines[pc.adjIndex[q]], p, r2)) return true;
        return false;
    }
    const FoamCellPrecomp::AdjSegment* seg = pc.adjSeg.data();
    const FoamCellPrecomp::AdjChunk* ch = pc.adjChunk.data();
    for (int k = pc.chunkOffset[c], ke = k + pc.chunkNear[c]; k < ke; ++k) {
        double cl = (pc.radius + ch[k].radius) * (1.0 + 1e-9);
        if (dist2(p, ch[k].center) > cl * cl) continue;
        for (int q = ch[k].begin; q < ch[k].end; ++q) {
            const auto& s = seg[q];
            double lim = (pc.radius + s.halfLength) * (1.0 + 1e-9);
            if (dist2(p, s.a + s.ab * 0.5) > lim * lim) continue;
            if (adjSegmentDistance2(s, p) <= r2) return true;
        }
    }
    return false;
}

double localFoamDistance(const std::vector<Point3>& seeds, const Point3& p, bool inside, double r, double cap) {
    int c = closestSeed(seeds, p);
    double dc2 = dist2(p, seeds[c]);
    double rho = std::sqrt(dc2) + 2.0 * cap;
    double rho2 = rho * rho * (1.0 + kNearSlack);
    std::vector<int> N;
    N.reserve(64);
    for (int j = 0; j < static_cast<int>(seeds.size()); ++j)
        if (dist2(p, seeds[j]) <= rho2) N.push_back(j);
    double dcEdge = edgeDistanceLocal(seeds, N, c, p, cap);
    // Inside, every point within r - dcEdge stays within r of that edge; no clamp needed.
    if (inside) return -std::max(r - dcEdge, 0.0);
    double best = dcEdge - r;
    for (int x : N) {
        if (x == c) continue;
        double pd = (dist2(p, seeds[x]) - dc2) / (2.0 * dist(seeds[x], seeds[c]));
        if (!(pd < best)) continue;
        double dx = edgeDistanceLocal(seeds, N, x, p, cap);
        best = std::min(best, std::max(pd, dx - r));
    }
    return std::max(best, 0.0);
}

CellSample foamCellSample(const FoamCellPrecomp& pc, const Point3& p) {
    if (pc.method == FoamMethod::Method1) {
        bool inside = foamCellMembership(pc, p);
        return {inside, localFoamDistance(pc.seeds.points, p, inside, pc.radius, pc.cap)};
    }
    const auto& S = pc.seeds.points;
    double cap2 = pc.cap * pc.cap;
    auto edgeDist = [&](int x) { return std::sqrt(adjMinDistance2(pc, p, pc.chunkOffset[x], pc.chunkOffset[x + 1], cap2)); };
    int s = pc.subcellOf(p);
    int c = -1;
    double dc2 = kInf;
    for (int q = pc.closestOffset[s]; q < pc.closestOffset[s + 1]; ++q) {
        int i = pc.closestIndex[q];
        double d = dist2(p, S[i]);
        if (d < dc2) {
            dc2 = d;
            c = i;
        }
    }
    double r = pc.radius;
    // Near entries decide membership; far ones only lower the edge distance.
    int b = pc.chunkOffset[c], m = b + pc.chunkNear[c], e = pc.chunkOffset[c + 1];
    // Starting at cap2 keeps the membership test exact since r < cap.
    double nearD2 = adjMinDistance2(pc, p, b, m, cap2);
    bool inside = nearD2 <= r * r;
    double dcEdge = std::sqrt(std::min(cap2, adjMinDistance2(pc, p, m, e, nearD2)));
    if (inside) return {true, -std::max(r - dcEdge, 0.0)};
    double best = dcEdge - r;
    // pd < best requires |p - s_x| < dc + 2 best; neighbors are sorted by a lower bound on |p - s_x|.
    double dc = std::sqrt(dc2);
    for (int q = pc.neighborOffset[s]; q < pc.neighborOffset[s + 1]; ++q) {
        double lim = (dc + 2.0 * std::max(best, 0.0)) * (1.0 + 1e-9);
        if (pc.neighborLower[q] > lim) break;
        int x = pc.neighborIndex[q];
        if (x == c) continue;
        double px2 = dist2(p, S[x]);
        if (px2 > lim * lim) continue;
        double pd = (px2 - dc2) / (2.0 * dist(S[x], S[c]));
        if (!(pd < best)) continue;
        best = std::min(best, std::max(pd, edgeDist(x) - r));
    }
    return {false, std::max(best, 0.0)};
}

FoamScale::FoamScale(NeighborhoodGrid grid, FoamParams params, FoamMethod method, MaterialResult material)
    : Scale(grid), params_(std::move(params)), method_(method), material_(material) {
    double edge = grid_.minCellEdge();
    if (!(params_.beamRadius > 0.0)) throw std::invalid_argument("foam beam radius must be positive");
    if (!(params_.beamRadius < edge / 2.0)) throw std::invalid_argument("foam beam radius must be below half the cell edge");
    if (params_.gatherRing < 1 || params_.gatherRing > 4) throw std::invalid_argument("foam gather ring must be in [1,4]");
    if (params_.subcells < 1 || params_.subcells > 32) throw std::invalid_argument("foam subcells must be in [1,32]");
    if (params_.distanceReach < 0.0) throw std::invalid_argument("foam distance reach must be non-negative");
}

double FoamScale::distanceCap() const {
    double reach = params_.distanceReach > 0 ? params_.distanceReach : grid_.minCellEdge() / 3.0;
    return params_.beamRadius + reach;
}

MembershipResult FoamScale::pointMembership(const Point3& p) const {
    SeedSet s = gather(grid_.cellOf(p));
    return {naiveFoamMembership(s.points, p, params_.beamRadius)};
}

DistanceResult FoamScale::pointDistance(const Point3& p) const { return {pointSample(p).distance}; }

CellSample FoamScale::pointSample(const Point3& p) const {
    SeedSet s = gather(grid_.cellOf(p));
    bool inside = naiveFoamMembership(s.points, p, params_.beamRadius);
    return {inside, localFoamDistance(s.points, p, inside, params_.beamRadius, distanceCap())};
}

MaterialResult FoamScale::insideMaterial(const Point3&) const { return material_; }

std::shared_ptr<const CellState> FoamScale::prepareCell(const CellIndex& cell) const {
    counters_.precompBuilds++;
    return buildFoamPrecomp(grid_, cell, params_, method_ == FoamMethod::Naive ? FoamMethod::Method2 : method_);
}

bool FoamScale::cellMembership(const CellState& state, const Point3& p) const {
    return foamCellMembership(static_cast<const FoamCellPrecomp&>(state), p);
}

CellSample FoamScale::cellSample(const CellState& state, const Point3& p) const {
    return foamCellSample(static_cast<const FoamCellPrecomp&>(state), p);
}

}  // namespace msq
