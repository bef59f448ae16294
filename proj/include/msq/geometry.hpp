#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>

namespace msq {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Point3() = default;
    constexpr Point3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Point3& operator+=(const Point3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Point3& operator-=(const Point3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Point3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    bool isFinite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

    friend constexpr bool operator==(const Point3&, const Point3&) = default;
};

using Vec3 = Point3;

constexpr Point3 operator+(Point3 a, const Point3& b) { return a += b; }
constexpr Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
constexpr Point3 operator-(const Point3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Point3 operator*(Point3 a, double s) { return a *= s; }
constexpr Point3 operator*(double s, Point3 a) { return a *= s; }
constexpr Point3 operator/(const Point3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Point3 cross(const Point3& a, const Point3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr double norm2(const Point3& a) { return dot(a, a); }
inline double norm(const Point3& a) { return std::sqrt(norm2(a)); }
inline double dist(const Point3& a, const Point3& b) { return norm(a - b); }
constexpr double dist2(const Point3& a, const Point3& b) { return norm2(a - b); }
inline Point3 normalized(const Point3& a) { return a / norm(a); }
constexpr Point3 cmul(const Point3& a, const Point3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
constexpr Point3 cdiv(const Point3& a, const Point3& b) { return {a.x / b.x, a.y / b.y, a.z / b.z}; }

// Axis-aligned box, closed.
struct Box3 {
    Point3 lo;
    Point3 hi;

    Point3 center() const { return (lo + hi) * 0.5; }
    Point3 size() const { return hi - lo; }
    double diagonal() const { return norm(hi - lo); }
    bool contains(const Point3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    Box3 inflated(double m) const { return {lo - Point3{m, m, m}, hi + Point3{m, m, m}}; }
    // Squared distance from p to the box (0 inside).
    double distance2(const Point3& p) const;
    // Squared distance from p to the farthest point of the box.
    double maxDistance2(const Point3& p) const;
    // Distance from an interior point to the nearest face; negative outside.
    double innerDistance(const Point3& p) const;
};

double pointSegmentDistance2(const Point3& p, const Point3& a, const Point3& b);

// Parametric clip of a segment or line against a box; returns [t0,t1] within the input range.
std::optional<std::array<double, 2>> clipLine(const Box3& box, const Point3& origin, const Point3& dir,
                                              double tmin, double tmax);

inline bool segmentIntersectsBox(const Box3& box, const Point3& a, const Point3& b) {
    return clipLine(box, a, b - a, 0.0, 1.0).has_value();
}

// Signed volume determinant of (b-a, c-a, d-a).
inline double orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    return dot(b - a, cross(c - a, d - a));
}

// Circumcenter of a tetrahedron; nullopt when degenerate.
std::optional<Point3> tetCircumcenter(const Point3& a, const Point3& b, const Point3& c, const Point3& d);

// Circumcenter of a triangle in its plane; nullopt when collinear.
std::optional<Point3> triangleCircumcenter(const Point3& a, const Point3& b, const Point3& c);

}  // namespace msq
