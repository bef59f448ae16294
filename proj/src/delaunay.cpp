#include "msq/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msq {

namespace {

struct Tet {
    std::array<int, 4> v;
    std::array<int, 4> nb;
    Point3 cc;
    double r2 = 0.0;
    bool alive = true;
};

class Builder {
public:
    Builder(std::vector<Point3> verts, double eps) : V_(std::move(verts)), eps_(eps) {}

    void init(int superBase) {
        Tet t;
        t.v = {superBase, superBase + 1, superBase + 2, superBase + 3};
        if (orient3d(V_[t.v[0]], V_[t.v[1]], V_[t.v[2]], V_[t.v[3]]) < 0) std::swap(t.v[2], t.v[3]);
        t.nb = {-1, -1, -1, -1};
        setSphere(t);
        tets_.push_back(t);
    }

    void insert(int pi) {
        const Point3& p = V_[pi];
        int start = locate(p);
        // conflict region grown from the containing tet
        bad_.clear();
        bad_.push_back(start);
        state_.resize(tets_.size(), 0);
        state_[start] = 1;
        for (std::size_t q = 0; q < bad_.size(); ++q) {
            const Tet& t = tets_[bad_[q]];
            for (int f = 0; f < 4; ++f) {
                int n = t.nb[f];
                if (n < 0 || state_[n]) continue;
                state_[n] = 4;
                probed_.push_back(n);
                if (inSphere(tets_[n], p)) {
                    state_[n] = 1;
                    bad_.push_back(n);
                }
            }
        }
        for (int t : probed_)
            if (state_[t] == 4) state_[t] = 0;
        probed_.clear();
        for (int t : bad_) state_[t] = 0;

        state_.resize(tets_.size(), 0);
        auto& cavity = cavity_;
        auto& faces = faces_;
        auto& drop = drop_;
        for (;;) {
            for (int t : bad_) state_[t] = 1;
            cavity.clear();
            cavity.push_back(start);
            state_[start] = 2;
            for (std::size_t q = 0; q < cavity.size(); ++q) {
                const Tet& t = tets_[cavity[q]];
                for (int f = 0; f < 4; ++f) {
                    int n = t.nb[f];
                    if (n >= 0 && state_[n] == 1) {
                        state_[n] = 2;
                        cavity.push_back(n);
                    }
                }
            }
            for (int t : bad_)
                if (state_[t] == 1) state_[t] = 0;
            faces.clear();
            drop.clear();
            for (int t : cavity) {
                const Tet& tt = tets_[t];
                for (int f = 0; f < 4; ++f) {
                    int n = tt.nb[f];
                    if (n >= 0 && state_[n] == 2) continue;
                    std::array<int, 4> nv = tt.v;
                    nv[f] = pi;
                    double o = orient3d(V_[nv[0]], V_[nv[1]], V_[nv[2]], V_[nv[3]]);
                    if (o > kMinVolume)
                        faces.emplace_back(t, f);
                    else if (t != start)
                        drop.push_back(t);
                }
            }
            if (drop.empty()) break;
            for (int t : cavity) state_[t] = 0;
            for (int t : drop) state_[t] = 3;
            bad_.clear();
            for (int t : cavity)
                if (state_[t] != 3) bad_.push_back(t);
            for (int t : drop) state_[t] = 0;
        }

        // create the new tets; faces through pi are matched by their two other vertices
        open_.clear();
        for (auto [t, f] : faces) {
            Tet nt;
            nt.v = tets_[t].v;
            nt.v[f] = pi;
            nt.nb = {-1, -1, -1, -1};
            int outside = tets_[t].nb[f];
            nt.nb[f] = outside;
            setSphere(nt);
            int id = allocate(nt);
            last_ = id;
            if (outside >= 0) {
                Tet& o = tets_[outside];
                for (int g = 0; g < 4; ++g)
                    if (o.nb[g] == t) o.nb[g] = id;
            }
            for (int g = 0; g < 4; ++g) {
                if (g == f) continue;
                int a = -1, b = -1;
                for (int h = 0; h < 4; ++h) {
                    if (h == g || h == f) continue;
                    (a < 0 ? a : b) = nt.v[h];
                }
                if (a > b) std::swap(a, b);
                std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
                open_.push_back({key, id, g});
            }
        }
        std::sort(open_.begin(), open_.end(), [](const OpenFace& x, const OpenFace& y) { return x.key < y.key; });
        for (std::size_t q = 0; q + 1 < open_.size(); ++q) {
            if (open_[q].key != open_[q + 1].key) continue;
            tets_[open_[q].tet].nb[open_[q].face] = open_[q + 1].tet;
            tets_[open_[q + 1].tet].nb[open_[q + 1].face] = open_[q].tet;
            ++q;
        }
        for (int t : cavity) {
            tets_[t].alive = false;
            state_[t] = 0;
            free_.push_back(t);
        }
    }

    std::vector<Tet>& tets() { return tets_; }

    int locate(const Point3& p) {
        int t = (last_ >= 0 && tets_[last_].alive) ? last_ : firstAlive();
        std::size_t limit = tets_.size() * 4 + 16;
        for (std::size_t step = 0; step < limit; ++step) {
            const Tet& tt = tets_[t];
            int next = -1;
            for (int q = 0; q < 4; ++q) {
                int f = (q + static_cast<int>(step)) & 3;
                std::array<Point3, 4> v{V_[tt.v[0]], V_[tt.v[1]], V_[tt.v[2]], V_[tt.v[3]]};
                v[f] = p;
                if (orient3d(v[0], v[1], v[2], v[3]) < 0 && tt.nb[f] >= 0) {
                    next = tt.nb[f];
                    break;
                }
            }
            if (next < 0) return t;
            t = next;
        }
        // walk did not settle; fall back to the best containing tet
        int best = -1;
        double bestMin = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < static_cast<int>(tets_.size()); ++i) {
            if (!tets_[i].alive) continue;
            double m = minOrient(tets_[i], p);
            if (m > bestMin) {
                bestMin = m;
                best = i;
            }
        }
        return best;
    }

private:
    static constexpr double kMinVolume = 1e-18;

    void setSphere(Tet& t) const {
        auto cc = tetCircumcenter(V_[t.v[0]], V_[t.v[1]], V_[t.v[2]], V_[t.v[3]]);
        if (!cc || !cc->isFinite()) {
            t.cc = V_[t.v[0]];
            t.r2 = std::numeric_limits<double>::infinity();
            return;
        }
        t.cc = *cc;
        t.r2 = dist2(*cc, V_[t.v[0]]);
    }

    bool inSphere(const Tet& t, const Point3& p) const {
        if (!std::isfinite(t.r2)) return true;
        double r = std::sqrt(t.r2) + eps_;
        return dist2(p, t.cc) <= r * r;
    }

    double minOrient(const Tet& t, const Point3& p) const {
        double m = std::numeric_limits<double>::infinity();
        for (int f = 0; f < 4; ++f) {
            std::array<Point3, 4> q{V_[t.v[0]], V_[t.v[1]], V_[t.v[2]], V_[t.v[3]]};
            q[f] = p;
            m = std::min(m, orient3d(q[0], q[1], q[2], q[3]));
        }
        return m;
    }

    int allocate(const Tet& t) {
        if (!free_.empty()) {
            int id = free_.back();
            free_.pop_back();
            tets_[id] = t;
            return id;
        }
        tets_.push_back(t);
        state_.push_back(0);
        return static_cast<int>(tets_.size()) - 1;
    }

    std::vector<Point3> V_;
    double eps_;
    std::vector<Tet> tets_;
    int firstAlive() const {
        for (int i = 0; i < static_cast<int>(tets_.size()); ++i)
            if (tets_[i].alive) return i;
        return -1;
    }

    struct OpenFace {
        std::uint64_t key;
        int tet;
        int face;
    };

    std::vector<int> bad_;
    std::vector<int> cavity_;
    std::vector<std::pair<int, int>> faces_;
    std::vector<int> drop_;
    std::vector<OpenFace> open_;
    std::vector<int> probed_;
    std::vector<int> free_;
    int last_ = -1;
    std::vector<char> state_;
};

void checkNonCoplanar(const std::vector<Point3>& u) {
    std::size_t a = 0, b = 0;
    double best = 0;
    for (std::size_t i = 1; i < u.size(); ++i)
        if (double d = dist2(u[i], u[a]); d > best) best = d, b = i;
    if (!(best > 1e-24)) throw std::invalid_argument("buildTetrahedralization: all points coincide");
    std::size_t c = 0;
    best = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (double d = norm2(cross(u[b] - u[a], u[i] - u[a])); d > best) best = d, c = i;
    if (!(best > 1e-24)) throw std::invalid_argument("buildTetrahedralization: all points are collinear");
    best = 0;
    for (std::size_t i = 0; i < u.size(); ++i) best = std::max(best, std::abs(orient3d(u[a], u[b], u[c], u[i])));
    if (!(best > 1e-12)) throw std::invalid_argument("buildTetrahedralization: all points are coplanar");
}

}  // namespace

Tetrahedralization buildTetrahedralization(const std::vector<Point3>& pts, double eps) {
    if (pts.size() < 4) throw std::invalid_argument("buildTetrahedralization: need at least 4 points");
    Point3 lo = pts[0], hi = pts[0];
    for (const Point3& p : pts) {
        if (!p.isFinite()) throw std::invalid_argument("buildTetrahedralization: non-finite point");
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    double ext = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    if (!(ext > 0)) throw std::invalid_argument("buildTetrahedralization: all points coincide");
    Tetrahedralization out;
    out.offset = lo;
    out.scale = 1.0 / ext;

    const int n = static_cast<int>(pts.size());
    std::vector<Point3> V;
    V.reserve(pts.size() + 4);
    for (const Point3& p : pts) V.push_back(out.toUnit(p));
    checkNonCoplanar(V);
    V.push_back({-100, -100, -100});
    V.push_back({300, -100, -100});
    V.push_back({-100, 300, -100});
    V.push_back({-100, -100, 300});

    Builder b(V, eps);
    b.init(n);
    for (int i = 0; i < n; ++i) b.insert(i);

    for (const auto& t : b.tets()) {
        if (!t.alive) continue;
        if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n || t.v[3] >= n) continue;
        Tetrahedron o;
        o.v = t.v;
        o.circumcenter = t.cc / out.scale + out.offset;
        o.circumradius = std::sqrt(t.r2) / out.scale;
        out.tets.push_back(o);
    }
    if (out.tets.empty()) throw std::invalid_argument("buildTetrahedralization: degenerate input");
    return out;
}

}  // namespace msq
