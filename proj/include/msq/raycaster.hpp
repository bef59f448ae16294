#pragma once

#include "msq/core.hpp"
#include "msq/method.hpp"

#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace msq {

struct Ray {
    Point3 origin;
    Point3 dir;  // unit
    Point3 at(double t) const { return origin + dir * t; }
};

class Camera {
public:
    Camera(Point3 position, Point3 lookAt, Point3 up, double fovDeg, int width, int height);

    // Looking along -z at the box center: the box face toward +z fills most of the frame.
    static Camera front(const Box3& box, int width, int height);
    // Looking at the box center from the (+x,+y,+z) corner direction.
    static Camera corner(const Box3& box, int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    const Point3& position() const { return pos_; }
    // Ray through the center of pixel (px, py); row 0 is the top of the image.
    Ray ray(int px, int py) const;

private:
    Point3 pos_, fwd_, right_, upv_;
    double tanHalf_;
    int width_, height_;
};

struct Interval {
    double enter = 0.0;
    double exit = 0.0;
};

// First interval with t >= tStart along which the coarse scale is inside: slab test for boxes,
// sphere tracing otherwise.
std::optional<Interval> castCoarse(const Scale& coarse, const Ray& ray, double tStart = 0.0);

// Sphere trace over [t0, t1] against one scale: step = clamp(distance, minStep, maxStep), a sign change
// is refined by bisection to `tolerance`. Every sample parameter is appended to `samples` when non-null.
std::optional<double> sphereTrace(const Scale& s, const Ray& ray, double t0, double t1, double minStep, double maxStep,
                                  double tolerance, std::vector<double>* samples = nullptr);

struct MarchParams {
    int maxStepsPerCell = 3;      // maximum step = cell edge / maxStepsPerCell
    double minStepFraction = 1e-4;  // minimum step, in cell edges
    double hitTolerance = 1e-6;   // bisection width, in cell edges
};

// First-in-first-out store of per-cell states under a byte budget; 0 disables storage.
class PrecompCache {
public:
    explicit PrecompCache(std::size_t budgetBytes = 0) : budget_(budgetBytes) {}

    std::shared_ptr<const CellState> getOrBuild(const Scale& s, const CellIndex& c);

    std::size_t budget() const { return budget_; }
    std::size_t bytes() const;
    std::size_t size() const;
    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    std::uint64_t builds() const { return builds_; }
    std::uint64_t evictions() const { return evictions_; }
    void resetCounters();
    void clear();
    // Cells in insertion order, oldest first.
    std::vector<CellIndex> order() const;

private:
    struct Key {
        const Scale* scale;
        CellIndex cell;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return CellIndexHash{}(k.cell) ^ (std::hash<const void*>{}(k.scale) << 1);
        }
    };
    void insert(const Key& k, std::shared_ptr<const CellState> st);

    std::size_t budget_;
    std::size_t bytes_ = 0;
    mutable std::mutex mu_;
    std::deque<Key> fifo_;
    std::unordered_map<Key, std::shared_ptr<const CellState>, KeyHash> map_;
    std::atomic<std::uint64_t> hits_{0}, misses_{0}, builds_{0}, evictions_{0};
};

struct RenderSettings {
    QueryMethod method = QueryMethod::SetQ2;  // naive marches point queries; setq1/setq2 batch by cell
    MarchParams march;
    int threads = 0;
};

struct RenderStats {
    double coarseSeconds = 0.0;
    double fineSeconds = 0.0;
    double totalSeconds = 0.0;
    std::uint64_t rays = 0;
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
    std::uint64_t cellVisits = 0;  // (ray group, cell) visits that needed a cell state
    std::uint64_t cellsBuilt = 0;
    std::uint64_t cacheHits = 0;
    std::uint64_t cacheMisses = 0;
    int iterations = 0;
    double hitRate() const {
        std::uint64_t t = cacheHits + cacheMisses;
        return t == 0 ? 0.0 : static_cast<double>(cacheHits) / static_cast<double>(t);
    }
};

struct RenderResult {
    int width = 0;
    int height = 0;
    std::vector<double> depth;       // ray parameter of the hit; +inf on miss
    std::vector<std::uint8_t> mask;  // 1 = hit
    RenderStats stats;
};

// Renders the coarsest scale and, if present, the finest scale of the model.
// `cache` persists cell states across calls; nullptr uses a zero-budget cache.
RenderResult renderFrame(MultiscaleModel& model, const Camera& camera, const RenderSettings& settings,
                         PrecompCache* cache = nullptr);

// Grayscale depth (near = white, miss = black), 1-bit mask, and a key/value stats file.
void writeRender(const RenderResult& r, const std::string& prefix);
std::string renderStatsText(const RenderStats& s);

}  // namespace msq
