#include "msq/repetitive.hpp"

#include "msq/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace msq {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
// Absolute margin on the interval bounds so rounding in the direct evaluation never crosses them.
constexpr double kIntervalSlack = 1e-12;

void checkUnit(const Point3& p) {
    for (int a = 0; a < 3; ++a)
        if (!(p[a] >= 0.0 && p[a] <= 1.0)) throw std::invalid_argument("lattice strut endpoint outside [0,1]^3");
}

}  // namespace

LatticeCell LatticeCell::preset(const std::string& name) {
    LatticeCell c;
    if (name == "cross3d") {
        c.struts = {{{0, 0.5, 0.5}, {1, 0.5, 0.5}}, {{0.5, 0, 0.5}, {0.5, 1, 0.5}}, {{0.5, 0.5, 0}, {0.5, 0.5, 1}}};
        return c;
    }
    if (name == "octet") {
        // face diagonals
        for (int a = 0; a < 3; ++a) {
            int b = (a + 1) % 3, d = (a + 2) % 3;
            for (double f : {0.0, 1.0}) {
                Point3 p0, p1, q0, q1;
                p0[a] = p1[a] = q0[a] = q1[a] = f;
                p0[b] = 0, p0[d] = 0, p1[b] = 1, p1[d] = 1;
                q0[b] = 1, q0[d] = 0, q1[b] = 0, q1[d] = 1;
                c.struts.push_back({p0, p1});
                c.struts.push_back({q0, q1});
            }
        }
        // octahedron through the face centers
        std::vector<Point3> fc;
        for (int a = 0; a < 3; ++a)
            for (double f : {0.0, 1.0}) {
                Point3 p{0.5, 0.5, 0.5};
                p[a] = f;
                fc.push_back(p);
            }
        for (std::size_t i = 0; i < fc.size(); ++i)
            for (std::size_t j = i + 1; j < fc.size(); ++j)
                if (i / 2 != j / 2) c.struts.push_back({fc[i], fc[j]});
        return c;
    }
    throw std::invalid_argument("unknown lattice preset: " + name);
}

std::vector<std::string> LatticeCell::presetNames() { return {"cross3d", "octet"}; }

double GyroidCell::k() const { return 2.0 * std::numbers::pi / period; }

double GyroidCell::value(const Point3& u) const { return std::abs(gyroidValue(u * k())); }

// Each partial of g is a dot product of unit vectors, e.g. dg/dx = (cos x, -sin x).(cos y, sin z), and the
// squared bounds sum to cos^2+sin^2 per coordinate, so |grad g| <= sqrt(3) on scaled coordinates.
double GyroidCell::lipschitz() const { return kSqrt3 * k(); }

SubgridIntervalTable::SubgridIntervalTable(int n, Point3 cellSize, std::vector<ClusterInterval> clusters)
    : n_(n), cellSize_(cellSize), clusters_(std::move(clusters)) {
    if (n < 1) throw std::invalid_argument("SubgridIntervalTable: n must be >= 1");
    if (clusters_.size() != static_cast<std::size_t>(n) * n * n)
        throw std::invalid_argument("SubgridIntervalTable: cluster count mismatch");
}

int SubgridIntervalTable::clusterOf(const Point3& local) const {
    int idx[3];
    for (int a = 0; a < 3; ++a)
        idx[a] = std::clamp(static_cast<int>(std::floor(local[a] / cellSize_[a] * n_)), 0, n_ - 1);
    return idx[0] + n_ * (idx[1] + n_ * idx[2]);
}

Box3 SubgridIntervalTable::clusterBox(int i, int j, int k) const {
    Point3 s = cellSize_ / static_cast<double>(n_);
    Point3 lo{i * s.x, j * s.y, k * s.z};
    Point3 hi{(i + 1) * s.x, (j + 1) * s.y, (k + 1) * s.z};
    return {lo, hi};
}

std::shared_ptr<const SubgridIntervalTable> buildIntervalsLattice(const LatticeCell& cell, Point3 cellSize, int n) {
    if (n < 1) throw std::invalid_argument("buildIntervalsLattice: n must be >= 1");
    std::vector<Strut> st;
    for (const auto& [a, b] : cell.struts) st.push_back({cmul(a, cellSize), cmul(b, cellSize)});
    auto skeleton = [&](const Point3& q) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : st) m = std::min(m, pointSegmentDistance2(q, a, b));
        return std::sqrt(m);
    };
    const int m = n + 1;
    std::vector<double> corner(static_cast<std::size_t>(m) * m * m);
    Point3 s = cellSize / static_cast<double>(n);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) corner[i + m * (j + m * k)] = skeleton({i * s.x, j * s.y, k * s.z});
    const double h = 0.5 * norm(s);
    const double slack = kIntervalSlack * std::max(1.0, norm(cellSize));
    std::vector<ClusterInterval> out(static_cast<std::size_t>(n) * n * n);
    SubgridIntervalTable probe(n, cellSize, std::vector<ClusterInterval>(out.size()));
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                double dMin = std::numeric_limits<double>::infinity(), dMax = 0.0;
                for (int c = 0; c < 8; ++c) {
                    double d = corner[(i + (c & 1)) + m * ((j + ((c >> 1) & 1)) + m * (k + (c >> 2)))];
                    dMin = std::min(dMin, d);
                    dMax = std::max(dMax, d);
                }
                Box3 box = probe.clusterBox(i, j, k);
                bool hit = false;
                for (const auto& [a, b] : st)
                    if (segmentIntersectsBox(box, a, b)) {
                        hit = true;
                        break;
                    }
                ClusterInterval& ci = out[i + n * (j + n * k)];
                ci.dMinCorner = dMin;
                ci.skeletonIntersects = hit;
                // every point of the box is within h of some corner and within 2h of all of them
                ci.rAllInside = std::min(dMax + h, dMin + 2.0 * h) + slack;
                ci.rAllOutside = hit ? 0.0 : std::max(dMin - h - slack, 0.0);
            }
    return std::make_shared<const SubgridIntervalTable>(n, cellSize, std::move(out));
}

ClusterInterval intervalFromSamples(double minSample, double maxSample, double widen) {
    ClusterInterval ci;
    ci.dMinCorner = minSample;
    ci.rAllInside = maxSample + widen;
    ci.rAllOutside = std::max(minSample - widen, 0.0);
    ci.skeletonIntersects = !(minSample - widen > 0.0);
    return ci;
}

std::shared_ptr<const SubgridIntervalTable> buildIntervalsSampled(const GyroidCell& cell, Point3 cellSize, int n,
                                                                   int samplesPerAxis) {
    if (n < 1) throw std::invalid_argument("buildIntervalsSampled: n must be >= 1");
    if (samplesPerAxis < 2) throw std::invalid_argument("buildIntervalsSampled: need at least the 8 cluster corners");
    const int m = samplesPerAxis;
    const int g = n * (m - 1) + 1;  // shared sample lattice over the cell, in unit-cell coordinates
    const double step = 1.0 / (n * (m - 1));
    std::vector<double> val(static_cast<std::size_t>(g) * g * g);
    for (int k = 0; k < g; ++k)
        for (int j = 0; j < g; ++j)
            for (int i = 0; i < g; ++i) val[i + g * (j + g * k)] = cell.value({i * step, j * step, k * step});
    const double widen = cell.lipschitz() * 0.5 * kSqrt3 * step + kIntervalSlack;
    std::vector<ClusterInterval> out(static_cast<std::size_t>(n) * n * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (int c = 0; c < m; ++c)
                    for (int b = 0; b < m; ++b)
                        for (int a = 0; a < m; ++a) {
                            int x = i * (m - 1) + a, y = j * (m - 1) + b, z = k * (m - 1) + c;
                            double v = val[x + g * (y + g * z)];
                            lo = std::min(lo, v);
                            hi = std::max(hi, v);
                        }
                out[i + n * (j + n * k)] = intervalFromSamples(lo, hi, widen);
            }
    return std::make_shared<const SubgridIntervalTable>(n, cellSize, std::move(out));
}

RepetitiveScale::RepetitiveScale(NeighborhoodGrid grid, ParameterField r, int subdivisions, MaterialResult material)
    : Scale(grid), r_(r), n_(subdivisions), material_(material) {
    if (subdivisions < 1 || subdivisions > 256) throw std::invalid_argument("subdivisions must be in [1,256]");
    if (!std::isfinite(r.a0) || !r.grad.isFinite()) throw std::invalid_argument("structure parameter must be finite");
}

double RepetitiveScale::parameterAt(const CellIndex& c) const { return r_.at(grid_.cellBox(c).center()); }

MembershipResult RepetitiveScale::pointMembership(const Point3& p) const {
    CellIndex c = grid_.cellOf(p);
    if (!grid_.inRange(c)) return {false};
    return {localValue(p - grid_.cellBox(c).lo) <= parameterAt(c)};
}

double RepetitiveScale::combineDistance(const Point3& p, const CellIndex& c, bool inside, double ownSigned,
                                        bool evaluate) const {
    const double edge = grid_.minCellEdge();
    double best = std::abs(ownSigned);
    if (!grid_.inRange(c)) best = std::numeric_limits<double>::infinity();
    for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                CellIndex b{c.i + di, c.j + dj, c.k + dk};
                bool in = grid_.inRange(b);
                if (!inside && !in) continue;  // void beyond the grid
                Box3 box = grid_.cellBox(b);
                double db = std::sqrt(box.distance2(p));
                if (db >= best) continue;
                double bound = db;
                if (in && evaluate) {
                    double s = signedFromValue(localValue(p - box.lo), parameterAt(b));
                    bound = std::max(db, inside ? -s : s);
                }
                best = std::min(best, bound);
            }
    // cells beyond the 3^3 block are at least one edge away
    if (inside)
        best = std::min(best, edge);
    else
        best = std::min(best, std::max(edge, std::sqrt(grid_.extent().distance2(p))));
    return inside ? -best : best;
}

CellSample RepetitiveScale::pointSample(const Point3& p) const {
    CellIndex c = grid_.cellOf(p);
    if (!grid_.inRange(c)) return {false, combineDistance(p, c, false, 0.0, true)};
    double r = parameterAt(c);
    double v = localValue(p - grid_.cellBox(c).lo);
    bool inside = v <= r;
    return {inside, combineDistance(p, c, inside, signedFromValue(v, r), true)};
}

DistanceResult RepetitiveScale::pointDistance(const Point3& p) const { return {pointSample(p).distance}; }

MaterialResult RepetitiveScale::insideMaterial(const Point3&) const { return material_; }

std::shared_ptr<const CellState> RepetitiveScale::prepareCell(const CellIndex& cell) const {
    auto st = std::make_shared<RepetitiveCellState>();
    st->cell = cell;
    st->lo = grid_.cellBox(cell).lo;
    st->r = parameterAt(cell);
    return st;
}

bool RepetitiveScale::cellMembership(const CellState& state, const Point3& p) const {
    const auto& st = static_cast<const RepetitiveCellState&>(state);
    Point3 q = p - st.lo;
    const ClusterInterval& ci = table_->cluster(table_->clusterOf(q));
    counters_.fastPathTotal.fetch_add(1, std::memory_order_relaxed);
    if (st.r >= ci.rAllInside) {
        counters_.fastPathHits.fetch_add(1, std::memory_order_relaxed);
        return true;
    }
    if (st.r < ci.rAllOutside) {
        counters_.fastPathHits.fetch_add(1, std::memory_order_relaxed);
        return false;
    }
    return localValue(q) <= st.r;
}

CellSample RepetitiveScale::cellSample(const CellState& state, const Point3& p) const {
    const auto& st = static_cast<const RepetitiveCellState&>(state);
    Point3 q = p - st.lo;
    if (fastDistance_) {
        const ClusterInterval& ci = table_->cluster(table_->clusterOf(q));
        counters_.fastPathTotal.fetch_add(1, std::memory_order_relaxed);
        if (st.r >= ci.rAllInside) {
            counters_.fastPathHits.fetch_add(1, std::memory_order_relaxed);
            return {true, combineDistance(p, st.cell, true, signedFromValue(ci.rAllInside, st.r), false)};
        }
        if (st.r < ci.rAllOutside) {
            counters_.fastPathHits.fetch_add(1, std::memory_order_relaxed);
            return {false, combineDistance(p, st.cell, false, signedFromValue(ci.rAllOutside, st.r), false)};
        }
    }
    double v = localValue(q);
    bool inside = v <= st.r;
    return {inside, combineDistance(p, st.cell, inside, signedFromValue(v, st.r), true)};
}

LatticeScale::LatticeScale(NeighborhoodGrid grid, LatticeCell cell, ParameterField strutRadius, int subdivisions,
                           MaterialResult material, std::string presetName)
    : RepetitiveScale(grid, strutRadius, subdivisions, material), cell_(std::move(cell)), preset_(std::move(presetName)) {
    if (cell_.struts.empty()) throw std::invalid_argument("lattice needs at least one strut");
    for (const auto& [a, b] : cell_.struts) {
        checkUnit(a);
        checkUnit(b);
        modelStruts_.push_back({cmul(a, grid_.cellSize()), cmul(b, grid_.cellSize())});
    }
    if (strutRadius.isConstant() && strutRadius.a0 < 0.0) throw std::invalid_argument("strut radius must be >= 0");
    setTable(buildIntervalsLattice(cell_, grid_.cellSize(), subdivisions));
}

double LatticeScale::localValue(const Point3& local) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : modelStruts_) m = std::min(m, pointSegmentDistance2(local, a, b));
    return std::sqrt(m);
}

GyroidScale::GyroidScale(NeighborhoodGrid grid, GyroidCell cell, ParameterField threshold, int subdivisions,
                         int samplesPerAxis, MaterialResult material)
    : RepetitiveScale(grid, threshold, subdivisions, material), cell_(cell), samples_(samplesPerAxis) {
    if (!(cell.period > 0) || !std::isfinite(cell.period)) throw std::invalid_argument("gyroid period must be positive");
    const Point3& s = grid_.cellSize();
    lipModel_ = cell_.lipschitz() / std::min({s.x, s.y, s.z});
    setTable(buildIntervalsSampled(cell_, s, subdivisions, samplesPerAxis));
}

double GyroidScale::localValue(const Point3& local) const { return cell_.value(cdiv(local, grid_.cellSize())); }

}  // namespace msq
