#include "msq/geometry.hpp"

#include <algorithm>
#include <limits>

namespace msq {

double Box3::distance2(const Point3& p) const {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
        double v = 0.0;
        if (p[a] < lo[a]) v = lo[a] - p[a];
        else if (p[a] > hi[a]) v = p[a] - hi[a];
        d += v * v;
    }
    return d;
}

double Box3::maxDistance2(const Point3& p) const {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
        double v = std::max(std::abs(p[a] - lo[a]), std::abs(p[a] - hi[a]));
        d += v * v;
    }
    return d;
}

double Box3::innerDistance(const Point3& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) d = std::min({d, p[a] - lo[a], hi[a] - p[a]});
    return d;
}

double pointSegmentDistance2(const Point3& p, const Point3& a, const Point3& b) {
    Point3 ab = b - a;
    double l2 = norm2(ab);
    double t = 0.0;
    if (l2 > 0.0) t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
    return dist2(p, a + ab * t);
}

std::optional<std::array<double, 2>> clipLine(const Box3& box, const Point3& origin, const Point3& dir,
                                              double tmin, double tmax) {
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return std::nullopt;
            continue;
        }
        double inv = 1.0 / dir[a];
        double t0 = (box.lo[a] - origin[a]) * inv;
        double t1 = (box.hi[a] - origin[a]) * inv;
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return std::nullopt;
    }
    return std::array<double, 2>{tmin, tmax};
}

std::optional<Point3> tetCircumcenter(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    Point3 u = b - a, v = c - a, w = d - a;
    Point3 vw = cross(v, w), wu = cross(w, u), uv = cross(u, v);
    double den = 2.0 * dot(u, vw);
    if (den == 0.0 || !std::isfinite(den)) return std::nullopt;
    Point3 num = vw * norm2(u) + wu * norm2(v) + uv * norm2(w);
    return a + num / den;
}

std::optional<Point3> triangleCircumcenter(const Point3& a, const Point3& b, const Point3& c) {
    Point3 u = b - a, v = c - a;
    Point3 n = cross(u, v);
    double n2 = norm2(n);
    if (!(n2 > 1e-24 * norm2(u) * norm2(v))) return std::nullopt;
    Point3 num = cross(u * norm2(v) - v * norm2(u), n);
    return a - num / (2.0 * n2);
}

}  // namespace msq
