#pragma once

#include "msq/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace msq {

struct Tetrahedron {
    std::array<int, 4> v;      // indices into the input point list
    Point3 circumcenter;       // original coordinates
    double circumradius = 0.0; // original units
};

struct Tetrahedralization {
    std::vector<Tetrahedron> tets;
    // Uniform transform used during construction: unit = (p - offset) * scale.
    Point3 offset;
    double scale = 1.0;

    Point3 toUnit(const Point3& p) const { return (p - offset) * scale; }
};

inline constexpr double kDelaunayEps = 1e-9;

// Bowyer-Watson after uniform rescaling of the input into the unit cube.
// Throws std::invalid_argument on fewer than 4 points or coplanar input.
Tetrahedralization buildTetrahedralization(const std::vector<Point3>& pts, double eps = kDelaunayEps);

}  // namespace msq
