#pragma once

#include "msq/core.hpp"

#include <functional>
#include <string>

namespace msq {

using MaterialField = std::function<MaterialResult(const Point3&)>;

MaterialResult solidMaterial(double density = 1.0, double modulus = 1.0, std::uint32_t id = 1);

class BoxScale : public Scale {
public:
    BoxScale(Point3 min, Point3 max, CellIndex dims = {1, 1, 1}, MaterialResult material = solidMaterial());

    std::string typeName() const override { return "box"; }
    bool isCoarse() const override { return true; }
    const Box3& box() const { return box_; }
    void setMaterialField(MaterialField f) { field_ = std::move(f); }

    MembershipResult pointMembership(const Point3& p) const override;
    DistanceResult pointDistance(const Point3& p) const override;
    MaterialResult insideMaterial(const Point3& p) const override;
    CellSample pointSample(const Point3& p) const override;

private:
    Box3 box_;
    MaterialResult material_;
    MaterialField field_;
};

// f < 0 inside; distance estimate f / lipschitzBound.
class ImplicitScale : public Scale {
public:
    using Function = std::function<double(const Point3&)>;

    ImplicitScale(std::string preset, Function f, double lipschitzBound, Box3 bounds, CellIndex dims = {1, 1, 1},
                  MaterialResult material = solidMaterial());

    static std::shared_ptr<ImplicitScale> sphere(Point3 center, double radius, CellIndex dims = {1, 1, 1});
    static std::shared_ptr<ImplicitScale> plane(Point3 normal, double offset, Box3 bounds, CellIndex dims = {1, 1, 1});
    static std::shared_ptr<ImplicitScale> gyroid(double period, double threshold, Box3 bounds,
                                                 CellIndex dims = {1, 1, 1});

    std::string typeName() const override { return "implicit-fn"; }
    const std::string& preset() const { return preset_; }
    bool isCoarse() const override { return true; }
    double lipschitzBound() const { return lipschitz_; }
    double value(const Point3& p) const { return f_(p); }
    void setMaterialField(MaterialField f) { field_ = std::move(f); }

    MembershipResult pointMembership(const Point3& p) const override;
    DistanceResult pointDistance(const Point3& p) const override;
    MaterialResult insideMaterial(const Point3& p) const override;
    CellSample pointSample(const Point3& p) const override;

private:
    std::string preset_;
    Function f_;
    double lipschitz_;
    MaterialResult material_;
    MaterialField field_;
};

double gyroidValue(const Point3& q);
// Componentwise derivative bound of the gyroid on coordinates scaled by k.
inline double gyroidLipschitz(double k) { return 2.0 * k * 1.7320508075688772; }

}  // namespace msq
