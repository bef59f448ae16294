#include "msq/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace msq {

MaterialResult solidMaterial(double density, double modulus, std::uint32_t id) {
    MaterialResult m;
    m.materialId = id;
    m.properties = {density, modulus};
    return m;
}

double gyroidValue(const Point3& q) {
    return std::sin(q.x) * std::cos(q.y) + std::sin(q.y) * std::cos(q.z) + std::sin(q.z) * std::cos(q.x);
}

BoxScale::BoxScale(Point3 min, Point3 max, CellIndex dims, MaterialResult material)
    : Scale(NeighborhoodGrid::fromExtent(min, max, dims)), box_{min, max}, material_(material) {
    if (!(min.x < max.x && min.y < max.y && min.z < max.z))
        throw std::invalid_argument("BoxScale: min must be < max componentwise");
}

MembershipResult BoxScale::pointMembership(const Point3& p) const { return {box_.contains(p)}; }

DistanceResult BoxScale::pointDistance(const Point3& p) const {
    Point3 c = box_.center();
    Point3 h = box_.size() * 0.5;
    Point3 q{std::abs(p.x - c.x) - h.x, std::abs(p.y - c.y) - h.y, std::abs(p.z - c.z) - h.z};
    Point3 o{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    double outside = norm(o);
    double insideTerm = std::min(std::max({q.x, q.y, q.z}), 0.0);
    return {outside + insideTerm};
}

CellSample BoxScale::pointSample(const Point3& p) const {
    bool in = box_.contains(p);
    double d = pointDistance(p).distance;
    if (in && d > 0.0) d = 0.0;
    if (!in && d <= 0.0) d = 0.0;
    return {in, d};
}

MaterialResult BoxScale::insideMaterial(const Point3& p) const { return field_ ? field_(p) : material_; }

ImplicitScale::ImplicitScale(std::string preset, Function f, double lipschitzBound, Box3 bounds, CellIndex dims,
                             MaterialResult material)
    : Scale(NeighborhoodGrid::fromExtent(bounds.lo, bounds.hi, dims)),
      preset_(std::move(preset)),
      f_(std::move(f)),
      lipschitz_(lipschitzBound),
      material_(material) {
    if (!(lipschitzBound > 0.0)) throw std::invalid_argument("ImplicitScale: lipschitz bound must be positive");
}

std::shared_ptr<ImplicitScale> ImplicitScale::sphere(Point3 center, double radius, CellIndex dims) {
    if (!(radius > 0)) throw std::invalid_argument("sphere radius must be positive");
    Point3 r{radius, radius, radius};
    return std::make_shared<ImplicitScale>(
        "sphere", [center, radius](const Point3& p) { return dist(p, center) - radius; }, 1.0,
        Box3{center - r, center + r}, dims);
}

std::shared_ptr<ImplicitScale> ImplicitScale::plane(Point3 normal, double offset, Box3 bounds, CellIndex dims) {
    double l = norm(normal);
    if (!(l > 0)) throw std::invalid_argument("plane normal must be non-zero");
    Point3 n = normal / l;
    double o = offset / l;
    return std::make_shared<ImplicitScale>(
        "plane", [n, o](const Point3& p) { return dot(n, p) - o; }, 1.0, bounds, dims);
}

std::shared_ptr<ImplicitScale> ImplicitScale::gyroid(double period, double threshold, Box3 bounds, CellIndex dims) {
    if (!(period > 0)) throw std::invalid_argument("gyroid period must be positive");
    double k = 2.0 * std::numbers::pi / period;
    return std::make_shared<ImplicitScale>(
        "gyroid", [k, threshold](const Point3& p) { return std::abs(gyroidValue(p * k)) - threshold; },
        gyroidLipschitz(k), bounds, dims);
}

MembershipResult ImplicitScale::pointMembership(const Point3& p) const { return {f_(p) <= 0.0}; }

DistanceResult ImplicitScale::pointDistance(const Point3& p) const { return {f_(p) / lipschitz_}; }

CellSample ImplicitScale::pointSample(const Point3& p) const {
    double v = f_(p);
    return {v <= 0.0, v / lipschitz_};
}

MaterialResult ImplicitScale::insideMaterial(const Point3& p) const { return field_ ? field_(p) : material_; }

}  // namespace msq
