#include "msq/core.hpp"

#include "msq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace msq {

LengthScale::LengthScale(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument("LengthScale must be positive and finite");
}

void ScaleCounters::reset() {
    setQueryGroups = 0;
    setQueryPoints = 0;
    precompBuilds = 0;
    fastPathHits = 0;
    fastPathTotal = 0;
}

double ScaleCounters::fastPathFraction() const {
    std::uint64_t t = fastPathTotal.load();
    return t == 0 ? 0.0 : static_cast<double>(fastPathHits.load()) / static_cast<double>(t);
}

std::shared_ptr<const CellState> Scale::prepareCell(const CellIndex&) const { return nullptr; }

bool Scale::cellMembership(const CellState&, const Point3& p) const { return pointMembership(p).inside; }

CellSample Scale::cellSample(const CellState&, const Point3& p) const { return pointSample(p); }

void defaultSetMembership(const Scale& s, const PointGroup& g, MembershipResult* out) {
    for (std::size_t i = 0; i < g.points.size(); ++i) out[i] = s.pointMembership(g.points[i]);
}

void defaultSetSample(const Scale& s, const PointGroup& g, CellSample* out) {
    for (std::size_t i = 0; i < g.points.size(); ++i) out[i] = s.pointSample(g.points[i]);
}

void defaultSetMaterial(const Scale& s, const PointGroup& g, MaterialResult* out) {
    for (std::size_t i = 0; i < g.points.size(); ++i) out[i] = s.pointMaterial(g.points[i]);
}

MultiscaleModel::MultiscaleModel(std::vector<std::shared_ptr<Scale>> scales) : scales_(std::move(scales)) {
    if (scales_.empty()) throw std::invalid_argument("MultiscaleModel needs at least one scale");
    for (const auto& s : scales_)
        if (!s) throw std::invalid_argument("MultiscaleModel: null scale");
}

std::vector<std::size_t> MultiscaleModel::consulted(LengthScale ls) const {
    std::vector<std::size_t> out{0};
    for (std::size_t k = 1; k < scales_.size(); ++k)
        if (scales_[k]->neighborhood().minCellEdge() >= ls.value()) out.push_back(k);
    return out;
}

void MultiscaleModel::resetCounters() const {
    for (const auto& s : scales_) s->counters().reset();
}

const NeighborhoodGrid& groupingGrid(const MultiscaleModel& m, LengthScale ls) {
    return m.scale(m.consulted(ls).back()).neighborhood();
}

namespace {

enum class Kind { Membership, Distance, Material };

struct Outputs {
    MembershipResult* mem = nullptr;
    DistanceResult* dist = nullptr;
    MaterialResult* mat = nullptr;
};

struct WorkerAccum {
    TimeSplit time;
    std::vector<std::uint64_t> forwarded;
    std::vector<std::uint64_t> inside;
    std::uint64_t groups = 0;
};

// Scale-local evaluation of a batch of points. inside/dist are filled for every point.
void evalScale(const Scale& s, std::size_t scaleIdx, Kind kind, const std::vector<Point3>& pts, bool subgrid,
               std::vector<char>& inside, std::vector<double>& dist, WorkerAccum& acc) {
    const std::size_t n = pts.size();
    inside.assign(n, 0);
    dist.assign(n, 0.0);
    const bool wantDist = kind == Kind::Distance;
    (void)scaleIdx;
    if (s.setQueriesEnabled()) {
        const NeighborhoodGrid& g = s.neighborhood();
        // partition by the scale's own cell; points outside its extent use point queries
        std::unordered_map<std::int64_t, std::vector<std::size_t>> parts;
        std::vector<std::size_t> loose;
        int sn = subgrid ? std::max(1, s.subgridResolution()) : 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (!g.inExtent(pts[i])) {
                loose.push_back(i);
                continue;
            }
            CellIndex c = g.cellOf(pts[i]);
            std::int64_t key = g.linear(c);
            if (sn > 1) {
                Box3 b = g.cellBox(c);
                std::int64_t q = 0;
                for (int a = 2; a >= 0; --a) {
                    int qa = std::clamp(static_cast<int>(std::floor((pts[i][a] - b.lo[a]) / g.cellSize()[a] * sn)), 0,
                                        sn - 1);
                    q = q * sn + qa;
                }
                key = key * sn * sn * sn + q;
            }
            parts[key].push_back(i);
        }
        std::vector<std::int64_t> keys;
        keys.reserve(parts.size());
        for (auto& kv : parts) keys.push_back(kv.first);
        std::sort(keys.begin(), keys.end());
        for (std::int64_t key : keys) {
            const auto& idx = parts[key];
            std::int64_t cellLin = sn > 1 ? key / (static_cast<std::int64_t>(sn) * sn * sn) : key;
            CellIndex cell = g.unlinear(cellLin);
            Stopwatch sw;
            auto state = s.prepareCell(cell);
            double tc = sw.seconds();
            sw.restart();
            s.counters().setQueryGroups++;
            s.counters().setQueryPoints += idx.size();
            for (std::size_t i : idx) {
                if (wantDist) {
                    CellSample cs = s.cellSample(*state, pts[i]);
                    inside[i] = cs.inside;
                    dist[i] = cs.distance;
                } else {
                    inside[i] = s.cellMembership(*state, pts[i]);
                }
            }
            double tp = sw.seconds();
            if (s.isCoarse()) acc.time.coarse += tc + tp;
            else {
                acc.time.perCell += tc;
                acc.time.perPoint += tp;
            }
        }
        if (!loose.empty()) {
            Stopwatch sw;
            for (std::size_t i : loose) {
                if (wantDist) {
                    CellSample cs = s.pointSample(pts[i]);
                    inside[i] = cs.inside;
                    dist[i] = cs.distance;
                } else {
                    inside[i] = s.pointMembership(pts[i]).inside;
                }
            }
            (s.isCoarse() ? acc.time.coarse : acc.time.perPoint) += sw.seconds();
        }
        return;
    }
    Stopwatch sw;
    for (std::size_t i = 0; i < n; ++i) {
        if (wantDist) {
            CellSample cs = s.pointSample(pts[i]);
            inside[i] = cs.inside;
            dist[i] = cs.distance;
        } else {
            inside[i] = s.pointMembership(pts[i]).inside;
        }
    }
    (s.isCoarse() ? acc.time.coarse : acc.time.perPoint) += sw.seconds();
}

// Runs a batch of points through the consulted scales, dropping points answered outside.
void processBatch(const MultiscaleModel& m, const std::vector<std::size_t>& consulted, Kind kind,
                  const std::vector<Point3>& points, const std::vector<std::int64_t>& slots, bool subgrid,
                  Outputs out, WorkerAccum& acc) {
    const std::size_t n = points.size();
    std::vector<std::size_t> alive(n);
    for (std::size_t i = 0; i < n; ++i) alive[i] = i;
    std::vector<double> minAbs(n, std::numeric_limits<double>::infinity());
    std::vector<MaterialResult> mats(kind == Kind::Material ? n : 0);
    std::vector<Point3> sub;
    std::vector<char> inside;
    std::vector<double> dist;
    for (std::size_t ci = 0; ci < consulted.size() && !alive.empty(); ++ci) {
        const std::size_t k = consulted[ci];
        const Scale& s = m.scale(k);
        acc.forwarded[k] += alive.size();
        sub.clear();
        sub.reserve(alive.size());
        for (std::size_t a : alive) sub.push_back(points[a]);
        evalScale(s, k, kind, sub, subgrid, inside, dist, acc);
        std::size_t w = 0;
        for (std::size_t q = 0; q < alive.size(); ++q) {
            std::size_t a = alive[q];
            std::int64_t slot = slots[a];
            if (!inside[q]) {
                if (kind == Kind::Membership) out.mem[slot].inside = false;
                else if (kind == Kind::Distance) out.dist[slot].distance = std::min(dist[q], minAbs[a]);
                else out.mat[slot] = MaterialResult::voidMaterial();
                continue;
            }
            if (kind == Kind::Distance) minAbs[a] = std::min(minAbs[a], std::abs(dist[q]));
            if (kind == Kind::Material) mats[a] = s.insideMaterial(points[a]);
            alive[w++] = a;
        }
        alive.resize(w);
        acc.inside[k] += w;
    }
    for (std::size_t a : alive) {
        std::int64_t slot = slots[a];
        if (kind == Kind::Membership) out.mem[slot].inside = true;
        else if (kind == Kind::Distance) out.dist[slot].distance = -minAbs[a];
        else out.mat[slot] = mats[a];
    }
}

PointGroup regularOutside(const NeighborhoodGrid& grid, const RegularGrid& r) {
    PointGroup out;
    RegularGrid probe = r;
    // generate the complement without materializing in-extent groups
    NeighborhoodGrid g = grid;
    Box3 ext = g.extent();
    for (int k = 0; k < r.counts.k; ++k) {
        double z = r.sample(0, 0, k).z;
        bool zin = z >= ext.lo.z && z <= ext.hi.z;
        for (int j = 0; j < r.counts.j; ++j) {
            double y = r.sample(0, j, 0).y;
            bool yin = y >= ext.lo.y && y <= ext.hi.y;
            for (int i = 0; i < r.counts.i; ++i) {
                double x = r.sample(i, 0, 0).x;
                bool xin = x >= ext.lo.x && x <= ext.hi.x;
                if (xin && yin && zin) continue;
                out.points.push_back(probe.sample(i, j, k));
                out.outputSlots.push_back(probe.slot(i, j, k));
            }
        }
    }
    return out;
}

void runQuery(const MultiscaleModel& m, const PointSetDescriptor& desc, LengthScale ls, const QueryOptions& opt,
              QueryReport* report, Kind kind, Outputs out) {
    const auto consulted = m.consulted(ls);
    const NeighborhoodGrid& grid = m.scale(consulted.back()).neighborhood();
    const int threads = resolveThreads(opt.threads);
    std::vector<WorkerAccum> acc(static_cast<std::size_t>(threads));
    for (auto& a : acc) {
        a.forwarded.assign(m.size(), 0);
        a.inside.assign(m.size(), 0);
    }

    std::vector<PointGroup> groups;
    PointGroup loose;
    std::int64_t cellTasks = 0;
    const RegularGrid* regular = std::get_if<RegularGrid>(&desc);
    const StratifiedRandom* strat = std::get_if<StratifiedRandom>(&desc);
    if (auto* e = std::get_if<ExplicitPoints>(&desc)) {
        std::vector<Point3> in;
        std::vector<std::int64_t> inSlots;
        Box3 ext = grid.extent();
        for (std::size_t i = 0; i < e->points.size(); ++i) {
            if (ext.contains(e->points[i])) {
                in.push_back(e->points[i]);
                inSlots.push_back(static_cast<std::int64_t>(i));
            } else {
                loose.points.push_back(e->points[i]);
                loose.outputSlots.push_back(static_cast<std::int64_t>(i));
            }
        }
        groups = groupArbitrary(grid, in);
        for (auto& g : groups)
            for (auto& s : g.outputSlots) s = inSlots[static_cast<std::size_t>(s)];
        cellTasks = static_cast<std::int64_t>(groups.size());
    } else if (regular) {
        if (!(regular->spacing.x > 0 && regular->spacing.y > 0 && regular->spacing.z > 0))
            throw std::invalid_argument("RegularGrid spacing must be positive");
        loose = regularOutside(grid, *regular);
        cellTasks = grid.cellCount();
    } else {
        if (strat->pointsPerCell < 1) throw std::invalid_argument("StratifiedRandom points-per-cell must be >= 1");
        cellTasks = grid.cellCount();
    }

    parallelFor(cellTasks + (loose.points.empty() ? 0 : 1), threads, [&](std::int64_t task, int worker) {
        WorkerAccum& a = acc[static_cast<std::size_t>(worker)];
        if (task == cellTasks) {
            processBatch(m, consulted, kind, loose.points, loose.outputSlots, opt.subgridGrouping, out, a);
            return;
        }
        if (!groups.empty() || std::holds_alternative<ExplicitPoints>(desc)) {
            const PointGroup& g = groups[static_cast<std::size_t>(task)];
            a.groups++;
            processBatch(m, consulted, kind, g.points, g.outputSlots, opt.subgridGrouping, out, a);
            return;
        }
        CellIndex c = grid.unlinear(task);
        PointGroup g = regular ? generateRegularGridCell(grid, *regular, c) : generateStratifiedCell(grid, *strat, c);
        if (g.points.empty()) return;
        a.groups++;
        processBatch(m, consulted, kind, g.points, g.outputSlots, opt.subgridGrouping, out, a);
    });

    if (report) {
        *report = QueryReport{};
        report->forwarded.assign(m.size(), 0);
        report->insideCount.assign(m.size(), 0);
        for (const auto& a : acc) {
            report->time += a.time;
            report->groups += a.groups;
            for (std::size_t k = 0; k < m.size(); ++k) {
                report->forwarded[k] += a.forwarded[k];
                report->insideCount[k] += a.inside[k];
            }
        }
    }
}

}  // namespace

std::vector<Point3> materialize(const PointSetDescriptor& pts, const NeighborhoodGrid& grid) {
    if (auto* e = std::get_if<ExplicitPoints>(&pts)) return e->points;
    std::vector<Point3> out(static_cast<std::size_t>(descriptorSize(pts, grid)));
    if (auto* r = std::get_if<RegularGrid>(&pts)) {
        for (int k = 0; k < r->counts.k; ++k)
            for (int j = 0; j < r->counts.j; ++j)
                for (int i = 0; i < r->counts.i; ++i)
                    out[static_cast<std::size_t>(r->slot(i, j, k) - r->slotOffset)] = r->sample(i, j, k);
        return out;
    }
    const auto& s = std::get<StratifiedRandom>(pts);
    for (std::int64_t c = 0; c < grid.cellCount(); ++c) {
        PointGroup g = generateStratifiedCell(grid, s, grid.unlinear(c));
        for (std::size_t i = 0; i < g.points.size(); ++i) out[static_cast<std::size_t>(g.outputSlots[i])] = g.points[i];
    }
    return out;
}

MembershipResult pointMembershipQ(const MultiscaleModel& m, const Point3& p, LengthScale ls) {
    for (std::size_t k : m.consulted(ls))
        if (!m.scale(k).pointMembership(p).inside) return {false};
    return {true};
}

DistanceResult pointDistanceQ(const MultiscaleModel& m, const Point3& p, LengthScale ls) {
    double minAbs = std::numeric_limits<double>::infinity();
    for (std::size_t k : m.consulted(ls)) {
        CellSample s = m.scale(k).pointSample(p);
        if (!s.inside) return {std::min(s.distance, minAbs)};
        minAbs = std::min(minAbs, std::abs(s.distance));
    }
    return {-minAbs};
}

MaterialResult pointMaterialQ(const MultiscaleModel& m, const Point3& p, LengthScale ls) {
    MaterialResult mat = MaterialResult::voidMaterial();
    for (std::size_t k : m.consulted(ls)) {
        const Scale& s = m.scale(k);
        if (!s.pointMembership(p).inside) return MaterialResult::voidMaterial();
        mat = s.insideMaterial(p);
    }
    return mat;
}

namespace {
std::int64_t slotCount(const PointSetDescriptor& pts, const NeighborhoodGrid& grid) {
    std::int64_t n = descriptorSize(pts, grid);
    if (auto* r = std::get_if<RegularGrid>(&pts)) n += r->slotOffset;
    return n;
}
}  // namespace

std::vector<MembershipResult> setMembershipQ(const MultiscaleModel& m, const PointSetDescriptor& pts, LengthScale ls,
                                             const QueryOptions& opt, QueryReport* report) {
    std::vector<MembershipResult> out(static_cast<std::size_t>(slotCount(pts, groupingGrid(m, ls))));
    if (out.empty()) {
        if (report) {
            *report = QueryReport{};
            report->forwarded.assign(m.size(), 0);
            report->insideCount.assign(m.size(), 0);
        }
        return out;
    }
    runQuery(m, pts, ls, opt, report, Kind::Membership, {out.data(), nullptr, nullptr});
    return out;
}

std::vector<DistanceResult> setDistanceQ(const MultiscaleModel& m, const PointSetDescriptor& pts, LengthScale ls,
                                         const QueryOptions& opt, QueryReport* report) {
    std::vector<DistanceResult> out(static_cast<std::size_t>(slotCount(pts, groupingGrid(m, ls))));
    if (out.empty()) return out;
    runQuery(m, pts, ls, opt, report, Kind::Distance, {nullptr, out.data(), nullptr});
    return out;
}

std::vector<MaterialResult> setMaterialQ(const MultiscaleModel& m, const PointSetDescriptor& pts, LengthScale ls,
                                         const QueryOptions& opt, QueryReport* report) {
    std::vector<MaterialResult> out(static_cast<std::size_t>(slotCount(pts, groupingGrid(m, ls))));
    if (out.empty()) return out;
    runQuery(m, pts, ls, opt, report, Kind::Material, {nullptr, nullptr, out.data()});
    return out;
}

}  // namespace msq
