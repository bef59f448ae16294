#pragma once

#include "msq/core.hpp"
#include "msq/foam.hpp"
#include "msq/repetitive.hpp"

#include <stdexcept>
#include <string>
#include <variant>

namespace msq {

class ModelParseError : public std::runtime_error {
public:
    ModelParseError(int line, const std::string& msg)
        : std::runtime_error("model line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct GridSpec {
    Point3 origin;
    Point3 cellSize{1, 1, 1};
    CellIndex dims{1, 1, 1};
    NeighborhoodGrid grid() const { return {origin, cellSize, dims}; }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct BoxSpec {
    Point3 min;
    Point3 max{1, 1, 1};
    CellIndex dims{1, 1, 1};
    MaterialResult material{1, {1.0, 1.0}};
    friend bool operator==(const BoxSpec&, const BoxSpec&) = default;
};

struct ImplicitSpec {
    std::string preset = "sphere";  // sphere | plane | gyroid
    Point3 center;
    double radius = 1.0;
    Point3 normal{0, 0, 1};
    double offset = 0.0;
    double period = 1.0;
    double threshold = 0.3;
    Box3 bounds{{-1, -1, -1}, {1, 1, 1}};  // plane and gyroid
    CellIndex dims{1, 1, 1};
    MaterialResult material{1, {1.0, 1.0}};
    friend bool operator==(const ImplicitSpec& a, const ImplicitSpec& b) {
        return a.preset == b.preset && a.center == b.center && a.radius == b.radius && a.normal == b.normal &&
               a.offset == b.offset && a.period == b.period && a.threshold == b.threshold &&
               a.bounds.lo == b.bounds.lo && a.bounds.hi == b.bounds.hi && a.dims == b.dims &&
               a.material == b.material;
    }
};

struct FoamSpec {
    GridSpec grid;
    double beamRadius = 0.05;
    std::uint64_t salt = 1;
    int gatherRing = 2;
    double distanceReach = 0.0;
    int subcells = 4;
    FoamMethod method = FoamMethod::Method2;
    MaterialResult material{1, {1.0, 1.0}};
    friend bool operator==(const FoamSpec&, const FoamSpec&) = default;
};

struct LatticeSpec {
    GridSpec grid;
    std::string preset;          // empty when struts are listed explicitly
    std::vector<Strut> struts;   // used when preset is empty
    ParameterField radius = ParameterField::constant(0.05);
    int subdivisions = 8;
    bool fastDistance = false;
    MaterialResult material{2, {1.0, 1.0}};
    friend bool operator==(const LatticeSpec& a, const LatticeSpec& b) {
        return a.grid == b.grid && a.preset == b.preset && a.struts == b.struts && a.radius.a0 == b.radius.a0 &&
               a.radius.grad == b.radius.grad && a.subdivisions == b.subdivisions &&
               a.fastDistance == b.fastDistance && a.material == b.material;
    }
};

struct GyroidSpec {
    GridSpec grid;
    double period = 1.0;
    ParameterField threshold = ParameterField::constant(0.3);
    int subdivisions = 8;
    int samplesPerAxis = 9;
    bool fastDistance = false;
    MaterialResult material{3, {1.0, 1.0}};
    friend bool operator==(const GyroidSpec& a, const GyroidSpec& b) {
        return a.grid == b.grid && a.period == b.period && a.threshold.a0 == b.threshold.a0 &&
               a.threshold.grad == b.threshold.grad && a.subdivisions == b.subdivisions &&
               a.samplesPerAxis == b.samplesPerAxis && a.fastDistance == b.fastDistance && a.material == b.material;
    }
};

using ScaleSpec = std::variant<BoxSpec, ImplicitSpec, FoamSpec, LatticeSpec, GyroidSpec>;

struct ModelDescription {
    std::vector<ScaleSpec> scales;  // coarsest first
    friend bool operator==(const ModelDescription&, const ModelDescription&) = default;
};

const char* scaleTypeTag(const ScaleSpec& s);

ModelDescription parseModel(const std::string& text);
ModelDescription loadModelFile(const std::string& path);
// Every number is written with 17 significant digits, so parse(serialize(d)) == d.
std::string serializeModel(const ModelDescription& d);
void saveModelFile(const ModelDescription& d, const std::string& path);

std::shared_ptr<Scale> buildScale(const ScaleSpec& s);
MultiscaleModel buildModel(const ModelDescription& d);

// Overrides the method of every foam scale in the description.
void setFoamMethod(ModelDescription& d, FoamMethod m);

}  // namespace msq
