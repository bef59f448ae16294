#include "msq/raycaster.hpp"

#include "msq/coarse.hpp"
#include "msq/parallel.hpp"
#include "msq/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace msq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxCoarseIntervals = 64;

double degToRad(double d) { return d * std::numbers::pi / 180.0; }

// Refines a bracket [lo, hi] where membership(lo) != target and membership(hi) == target.
template <class Member>
double bisect(double lo, double hi, double tol, bool target, Member&& member) {
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (member(mid) == target) hi = mid;
        else lo = mid;
    }
    return hi;
}

// Generic trace toward the first sample whose membership equals target.
std::optional<double> traceUntil(const Scale& s, const Ray& ray, double t0, double t1, bool target, double minStep,
                                 double maxStep, double tol, std::vector<double>* samples) {
    double t = t0, prev = t0;
    bool first = true;
    for (;;) {
        if (samples) samples->push_back(t);
        CellSample cs = s.pointSample(ray.at(t));
        if (cs.inside == target) {
            if (first) return t;
            return bisect(prev, t, tol, target, [&](double u) { return s.pointMembership(ray.at(u)).inside; });
        }
        if (t >= t1) return std::nullopt;
        double step = std::clamp(std::abs(cs.distance), minStep, maxStep);
        prev = t;
        t = std::min(t + step, t1);
        first = false;
    }
}

}  // namespace

Camera::Camera(Point3 position, Point3 lookAt, Point3 up, double fovDeg, int width, int height)
    : pos_(position), width_(width), height_(height) {
    if (!position.isFinite() || !lookAt.isFinite() || !up.isFinite()) throw std::invalid_argument("camera: non-finite input");
    Point3 f = lookAt - position;
    if (!(norm(f) > 0)) throw std::invalid_argument("camera: lookAt equals position");
    if (!(fovDeg > 0 && fovDeg < 180)) throw std::invalid_argument("camera: field of view must be in (0, 180) degrees");
    if (width < 1 || height < 1) throw std::invalid_argument("camera: resolution must be >= 1");
    fwd_ = normalized(f);
    Point3 r = cross(fwd_, up);
    if (!(norm(r) > 1e-12 * std::max(1.0, norm(up)))) throw std::invalid_argument("camera: up is parallel to the view direction");
    right_ = normalized(r);
    upv_ = cross(right_, fwd_);
    tanHalf_ = std::tan(degToRad(fovDeg) * 0.5);
}

Camera Camera::front(const Box3& box, int width, int height) {
    const double fov = 40.0;
    Point3 c = box.center(), s = box.size();
    double e = 0.5 * std::max(s.x, s.y);
    double d = 0.5 * s.z + 1.1 * e / std::tan(degToRad(fov * 0.5));
    return Camera(c + Point3{0, 0, d}, c, {0, 1, 0}, fov, width, height);
}

Camera Camera::corner(const Box3& box, int width, int height) {
    const double fov = 40.0;
    Point3 c = box.center();
    double rad = 0.5 * box.diagonal();
    double d = 1.05 * rad / std::sin(degToRad(fov * 0.5));
    Point3 dir = normalized(Point3{1, 1, 1});
    return Camera(c + dir * d, c, {0, 0, 1}, fov, width, height);
}

Ray Camera::ray(int px, int py) const {
    double aspect = static_cast<double>(width_) / height_;
    double x = (2.0 * (px + 0.5) / width_ - 1.0) * tanHalf_ * aspect;
    double y = (1.0 - 2.0 * (py + 0.5) / height_) * tanHalf_;
    return {pos_, normalized(fwd_ + right_ * x + upv_ * y)};
}

std::optional<Interval> castCoarse(const Scale& coarse, const Ray& ray, double tStart) {
    if (const auto* b = dynamic_cast<const BoxScale*>(&coarse)) {
        auto c = clipLine(b->box(), ray.origin, ray.dir, tStart, kInf);
        if (!c) return std::nullopt;
        return Interval{(*c)[0], (*c)[1]};
    }
    Box3 bounds = coarse.neighborhood().extent();
    const double diag = bounds.diagonal();
    auto c = clipLine(bounds.inflated(1e-9 * diag), ray.origin, ray.dir, tStart, kInf);
    if (!c) return std::nullopt;
    const double minStep = 1e-6 * diag, tol = 1e-9 * diag;
    auto enter = traceUntil(coarse, ray, (*c)[0], (*c)[1], true, minStep, kInf, tol, nullptr);
    if (!enter) return std::nullopt;
    auto exit = traceUntil(coarse, ray, *enter, (*c)[1], false, minStep, kInf, tol, nullptr);
    return Interval{*enter, exit ? *exit : (*c)[1]};
}

std::optional<double> sphereTrace(const Scale& s, const Ray& ray, double t0, double t1, double minStep, double maxStep,
                                  double tolerance, std::vector<double>* samples) {
    return traceUntil(s, ray, t0, t1, true, minStep, maxStep, tolerance, samples);
}

std::shared_ptr<const CellState> PrecompCache::getOrBuild(const Scale& s, const CellIndex& c) {
    Key k{&s, c};
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(k);
        if (it != map_.end()) {
            hits_++;
            return it->second;
        }
    }
    misses_++;
    auto st = s.prepareCell(c);
    builds_++;
    if (budget_ > 0) insert(k, st);
    return st;
}

void PrecompCache::insert(const Key& k, std::shared_ptr<const CellState> st) {
    std::size_t b = st ? st->bytes() : 0;
    if (b > budget_) return;
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(k);
    if (it != map_.end()) {
        // concurrent build of the same cell: last insert wins, position unchanged
        bytes_ -= it->second ? it->second->bytes() : 0;
        it->second = std::move(st);
        bytes_ += b;
    } else {
        map_.emplace(k, std::move(st));
        fifo_.push_back(k);
        bytes_ += b;
    }
    while (bytes_ > budget_ && !fifo_.empty()) {
        Key old = fifo_.front();
        fifo_.pop_front();
        auto o = map_.find(old);
        bytes_ -= o->second ? o->second->bytes() : 0;
        map_.erase(o);
        evictions_++;
    }
}

std::size_t PrecompCache::bytes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return bytes_;
}

std::size_t PrecompCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
}

void PrecompCache::resetCounters() {
    hits_ = 0;
    misses_ = 0;
    builds_ = 0;
    evictions_ = 0;
}

void PrecompCache::clear() {
    std::lock_guard<std::mutex> lock(mu_);
    map_.clear();
    fifo_.clear();
    bytes_ = 0;
}

std::vector<CellIndex> PrecompCache::order() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<CellIndex> out;
    for (const Key& k : fifo_) out.push_back(k.cell);
    return out;
}

namespace {

enum class Status : std::uint8_t { Alive, Hit, Miss };

struct RayState {
    Ray ray;
    std::vector<Interval> spans;
    std::size_t span = 0;
    double t = 0.0;
    double prev = 0.0;
    bool first = true;
    Status status = Status::Miss;
    double hitT = kInf;
};

void startSpan(RayState& r) {
    if (r.span >= r.spans.size()) {
        r.status = Status::Miss;
        return;
    }
    r.t = r.prev = r.spans[r.span].enter;
    r.first = true;
    r.status = Status::Alive;
}

// One sample of the march: returns false once the ray is finished.
template <class Sample, class Member>
bool advance(RayState& r, const MarchParams& mp, double edge, Sample&& sample, Member&& member,
             std::uint64_t& samples) {
    ++samples;
    CellSample cs = sample(r.ray.at(r.t));
    if (cs.inside) {
        r.hitT = r.first ? r.t : bisect(r.prev, r.t, mp.hitTolerance * edge, true, member);
        r.status = Status::Hit;
        return false;
    }
    const double t1 = r.spans[r.span].exit;
    if (r.t >= t1) {
        ++r.span;
        startSpan(r);
        return r.status == Status::Alive;
    }
    double step = std::clamp(std::abs(cs.distance), mp.minStepFraction * edge, edge / mp.maxStepsPerCell);
    r.prev = r.t;
    r.t = std::min(r.t + step, t1);
    r.first = false;
    return true;
}

}  // namespace

RenderResult renderFrame(MultiscaleModel& model, const Camera& camera, const RenderSettings& settings,
                         PrecompCache* cache) {
    if (settings.march.maxStepsPerCell < 1) throw std::invalid_argument("maxStepsPerCell must be >= 1");
    const QueryMethod method = settings.method == QueryMethod::Auto ? QueryMethod::SetQ2 : settings.method;
    applyMethod(model, method);
    PrecompCache local(0);
    PrecompCache& pc = cache ? *cache : local;
    const std::uint64_t hits0 = pc.hits(), misses0 = pc.misses(), builds0 = pc.builds();

    const int W = camera.width(), H = camera.height();
    const std::size_t n = static_cast<std::size_t>(W) * H;
    const Scale& coarse = model.scale(0);
    const Scale* fine = model.size() > 1 ? &model.scale(model.size() - 1) : nullptr;
    const int threads = resolveThreads(settings.threads);

    RenderResult res;
    res.width = W;
    res.height = H;
    res.depth.assign(n, kInf);
    res.mask.assign(n, 0);
    RenderStats& st = res.stats;
    st.rays = n;
    Stopwatch total;

    // coarse intervals per ray
    std::vector<RayState> rays(n);
    Stopwatch sw;
    parallelFor(H, threads, [&](std::int64_t row, int) {
        for (int x = 0; x < W; ++x) {
            RayState& r = rays[static_cast<std::size_t>(row) * W + x];
            r.ray = camera.ray(x, static_cast<int>(row));
            double t = 0.0;
            for (int q = 0; q < kMaxCoarseIntervals; ++q) {
                auto iv = castCoarse(coarse, r.ray, t);
                if (!iv) break;
                r.spans.push_back(*iv);
                if (dynamic_cast<const BoxScale*>(&coarse)) break;
                double diag = coarse.neighborhood().extent().diagonal();
                t = iv->exit + 1e-6 * diag;
            }
            startSpan(r);
        }
    });
    st.coarseSeconds = sw.seconds();

    sw.restart();
    if (!fine) {
        for (RayState& r : rays)
            if (r.status == Status::Alive) r.status = Status::Hit, r.hitT = r.t;
    } else if (method == QueryMethod::Naive || !fine->setQueriesEnabled()) {
        const double edge = fine->neighborhood().minCellEdge();
        std::vector<std::uint64_t> samples(static_cast<std::size_t>(threads), 0);
        parallelFor(static_cast<std::int64_t>(n), threads, [&](std::int64_t i, int w) {
            RayState& r = rays[static_cast<std::size_t>(i)];
            auto sample = [&](const Point3& p) { return fine->pointSample(p); };
            auto member = [&](double u) { return fine->pointMembership(r.ray.at(u)).inside; };
            while (r.status == Status::Alive && advance(r, settings.march, edge, sample, member, samples[w])) {
            }
        });
        for (auto s : samples) st.samples += s;
    } else {
        const NeighborhoodGrid& g = fine->neighborhood();
        const double edge = g.minCellEdge();
        const bool cacheable = fine->cacheableState();
        std::vector<std::uint64_t> samples(static_cast<std::size_t>(threads), 0);
        std::vector<std::uint64_t> visits(static_cast<std::size_t>(threads), 0);
        std::vector<std::pair<std::int64_t, std::uint32_t>> keyed;
        std::vector<std::size_t> groupStart;
        // Entry points computed on the extent boundary can land a rounding error outside it.
        const Box3 ext = g.extent();
        const double snap2 = (1e-9 * edge) * (1e-9 * edge);
        auto cellFor = [&](const Point3& p) {
            CellIndex c = g.cellOf(p);
            if (!g.inRange(c) && ext.distance2(p) <= snap2) c = g.cellOfClamped(p);
            return c;
        };
        for (;;) {
            keyed.clear();
            for (std::size_t i = 0; i < n; ++i) {
                if (rays[i].status != Status::Alive) continue;
                CellIndex c = cellFor(rays[i].ray.at(rays[i].t));
                std::int64_t key = g.inRange(c) ? g.linear(c) : -1;
                keyed.emplace_back(key, static_cast<std::uint32_t>(i));
            }
            if (keyed.empty()) break;
            ++st.iterations;
            std::sort(keyed.begin(), keyed.end());
            groupStart.clear();
            for (std::size_t q = 0; q < keyed.size(); ++q)
                if (q == 0 || keyed[q].first != keyed[q - 1].first) groupStart.push_back(q);
            groupStart.push_back(keyed.size());
            parallelFor(static_cast<std::int64_t>(groupStart.size() - 1), threads, [&](std::int64_t gi, int w) {
                const std::size_t a = groupStart[static_cast<std::size_t>(gi)];
                const std::size_t b = groupStart[static_cast<std::size_t>(gi) + 1];
                const std::int64_t key = keyed[a].first;
                if (key < 0) {
                    // outside the fine grid: point queries until the ray enters it
                    for (std::size_t q = a; q < b; ++q) {
                        RayState& r = rays[keyed[q].second];
                        auto sample = [&](const Point3& p) { return fine->pointSample(p); };
                        auto member = [&](double u) { return fine->pointMembership(r.ray.at(u)).inside; };
                        while (r.status == Status::Alive && !g.inRange(cellFor(r.ray.at(r.t))) &&
                               advance(r, settings.march, edge, sample, member, samples[w])) {
                        }
                    }
                    return;
                }
                const CellIndex cell = g.unlinear(key);
                ++visits[w];
                auto state = cacheable ? pc.getOrBuild(*fine, cell) : fine->prepareCell(cell);
                for (std::size_t q = a; q < b; ++q) {
                    RayState& r = rays[keyed[q].second];
                    auto sample = [&](const Point3& p) { return fine->cellSample(*state, p); };
                    auto member = [&](double u) {
                        Point3 p = r.ray.at(u);
                        return cellFor(p) == cell ? fine->cellMembership(*state, p) : fine->pointMembership(p).inside;
                    };
                    while (r.status == Status::Alive && cellFor(r.ray.at(r.t)) == cell &&
                           advance(r, settings.march, edge, sample, member, samples[w])) {
                    }
                }
            });
        }
        for (auto s : samples) st.samples += s;
        for (auto v : visits) st.cellVisits += v;
        if (!cacheable) st.cellsBuilt += st.cellVisits;
    }
    st.fineSeconds = sw.seconds();

    for (std::size_t i = 0; i < n; ++i)
        if (rays[i].status == Status::Hit) {
            res.depth[i] = rays[i].hitT;
            res.mask[i] = 1;
            ++st.hits;
        }
    st.cacheHits = pc.hits() - hits0;
    st.cacheMisses = pc.misses() - misses0;
    st.cellsBuilt += pc.builds() - builds0;
    st.totalSeconds = total.seconds();
    return res;
}

void writeRender(const RenderResult& r, const std::string& prefix) {
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < r.depth.size(); ++i)
        if (r.mask[i]) lo = std::min(lo, r.depth[i]), hi = std::max(hi, r.depth[i]);
    {
        std::ofstream f(prefix + "_depth.pgm", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + prefix + "_depth.pgm");
        f << "P5\n" << r.width << " " << r.height << "\n255\n";
        std::vector<unsigned char> px(r.depth.size(), 0);
        for (std::size_t i = 0; i < px.size(); ++i) {
            if (!r.mask[i]) continue;
            double u = hi > lo ? (r.depth[i] - lo) / (hi - lo) : 0.0;
            px[i] = static_cast<unsigned char>(std::lround(255.0 - 200.0 * u));
        }
        f.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    }
    const std::size_t rowBytes = (static_cast<std::size_t>(r.width) + 7) / 8;
    std::vector<std::uint8_t> bits(rowBytes * r.height, 0);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
            if (r.mask[static_cast<std::size_t>(y) * r.width + x])
                bits[y * rowBytes + x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
    writePbm(prefix + "_mask.pbm", r.width, r.height, bits);
    std::ofstream f(prefix + "_stats.txt");
    if (!f) throw std::runtime_error("cannot write " + prefix + "_stats.txt");
    f << renderStatsText(r.stats);
}

std::string renderStatsText(const RenderStats& s) {
    std::ostringstream o;
    o << "rays " << s.rays << "\nhits " << s.hits << "\nsamples " << s.samples << "\n";
    o << "coarse_seconds " << s.coarseSeconds << "\nfine_seconds " << s.fineSeconds << "\n";
    o << "total_seconds " << s.totalSeconds << "\niterations " << s.iterations << "\n";
    o << "cell_visits " << s.cellVisits << "\ncells_built " << s.cellsBuilt << "\n";
    o << "cache_hits " << s.cacheHits << "\ncache_misses " << s.cacheMisses << "\ncache_hit_rate " << s.hitRate()
      << "\n";
    return o.str();
}

}  // namespace msq
