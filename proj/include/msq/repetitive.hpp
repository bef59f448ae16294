#pragma once

#include "msq/core.hpp"

#include <memory>
#include <string>
#include <utility>

namespace msq {

// Structure parameter per neighborhood cell: a0 + grad . (cell center).
struct ParameterField {
    double a0 = 0.0;
    Point3 grad;

    static ParameterField constant(double v) { return {v, {}}; }
    bool isConstant() const { return grad == Point3{}; }
    double at(const Point3& cellCenter) const { return a0 + dot(grad, cellCenter); }
};

using Strut = std::pair<Point3, Point3>;

// Struts in unit-cell coordinates [0,1]^3.
struct LatticeCell {
    std::vector<Strut> struts;

    static LatticeCell preset(const std::string& name);
    static std::vector<std::string> presetNames();
};

struct GyroidCell {
    double period = 1.0;  // in unit-cell coordinates
    double k() const;
    // |g| on unit-cell coordinates.
    double value(const Point3& u) const;
    // Certified bound on |grad g| with respect to unit-cell coordinates.
    double lipschitz() const;
};

struct ClusterInterval {
    double dMinCorner = 0.0;
    bool skeletonIntersects = false;
    double rAllInside = 0.0;
    double rAllOutside = 0.0;
};

class SubgridIntervalTable {
public:
    SubgridIntervalTable(int n, Point3 cellSize, std::vector<ClusterInterval> clusters);

    int n() const { return n_; }
    const Point3& cellSize() const { return cellSize_; }
    const ClusterInterval& cluster(int idx) const { return clusters_[idx]; }
    const ClusterInterval& cluster(int i, int j, int k) const { return clusters_[i + n_ * (j + n_ * k)]; }
    std::size_t size() const { return clusters_.size(); }
    // Cluster of a point in cell-local coordinates [0, cellSize].
    int clusterOf(const Point3& local) const;
    Box3 clusterBox(int i, int j, int k) const;

private:
    int n_;
    Point3 cellSize_;
    std::vector<ClusterInterval> clusters_;
};

// Lattice table on the cell box [0, cellSize]; distances in model units.
std::shared_ptr<const SubgridIntervalTable> buildIntervalsLattice(const LatticeCell& cell, Point3 cellSize, int n);
// Gyroid table from m^3 samples per cluster, widened by the Lipschitz bound times the sample covering radius.
std::shared_ptr<const SubgridIntervalTable> buildIntervalsSampled(const GyroidCell& cell, Point3 cellSize, int n,
                                                                   int samplesPerAxis);
// Interval from sampled extrema of the field and a widening term.
ClusterInterval intervalFromSamples(double minSample, double maxSample, double widen);

struct RepetitiveCellState : CellState {
    CellIndex cell;
    Point3 lo;
    double r = 0.0;
    std::size_t bytes() const override { return sizeof(*this); }
};

// Common dispatch for fine scales whose geometry repeats per neighborhood cell and depends on one parameter r.
class RepetitiveScale : public Scale {
public:
    RepetitiveScale(NeighborhoodGrid grid, ParameterField r, int subdivisions, MaterialResult material);

    const ParameterField& parameter() const { return r_; }
    double parameterAt(const CellIndex& c) const;
    const SubgridIntervalTable& table() const { return *table_; }
    std::shared_ptr<const SubgridIntervalTable> tablePtr() const { return table_; }
    // The table used for a cell; the same object for every cell.
    const SubgridIntervalTable* tableFor(const CellIndex&) const { return table_.get(); }
    int subdivisions() const { return n_; }
    // When set, set-query distances on fast-path clusters return the interval bound instead of the exact value.
    void setFastDistance(bool on) { fastDistance_ = on; }
    bool fastDistance() const { return fastDistance_; }

    // Geometry in cell-local model coordinates.
    virtual double localValue(const Point3& local) const = 0;
    // Conservative signed distance from the cell's own geometry given its local value and parameter r.
    virtual double signedFromValue(double value, double r) const = 0;

    MembershipResult pointMembership(const Point3& p) const override;
    DistanceResult pointDistance(const Point3& p) const override;
    MaterialResult insideMaterial(const Point3& p) const override;
    CellSample pointSample(const Point3& p) const override;

    bool providesSetQueries() const override { return true; }
    std::shared_ptr<const CellState> prepareCell(const CellIndex& cell) const override;
    bool cellMembership(const CellState& state, const Point3& p) const override;
    CellSample cellSample(const CellState& state, const Point3& p) const override;
    int subgridResolution() const override { return n_; }

protected:
    void setTable(std::shared_ptr<const SubgridIntervalTable> t) { table_ = std::move(t); }
    // Own-cell signed bound combined with the bounds of the surrounding cells; neighbors are evaluated
    // only when `evaluate` is set, otherwise their box distance alone is used.
    double combineDistance(const Point3& p, const CellIndex& c, bool inside, double ownSigned, bool evaluate) const;

    ParameterField r_;
    int n_;
    MaterialResult material_;
    std::shared_ptr<const SubgridIntervalTable> table_;
    bool fastDistance_ = false;
};

class LatticeScale : public RepetitiveScale {
public:
    LatticeScale(NeighborhoodGrid grid, LatticeCell cell, ParameterField strutRadius, int subdivisions = 8,
                 MaterialResult material = MaterialResult{2, {1.0, 1.0}}, std::string presetName = "");

    std::string typeName() const override { return "lattice"; }
    const LatticeCell& cell() const { return cell_; }
    const std::string& presetName() const { return preset_; }
    double localValue(const Point3& local) const override;
    double signedFromValue(double value, double r) const override { return value - r; }

private:
    LatticeCell cell_;
    std::vector<Strut> modelStruts_;
    std::string preset_;
};

class GyroidScale : public RepetitiveScale {
public:
    GyroidScale(NeighborhoodGrid grid, GyroidCell cell, ParameterField threshold, int subdivisions = 8,
                int samplesPerAxis = 9, MaterialResult material = MaterialResult{3, {1.0, 1.0}});

    std::string typeName() const override { return "gyroid"; }
    const GyroidCell& cell() const { return cell_; }
    int samplesPerAxis() const { return samples_; }
    double localValue(const Point3& local) const override;
    double signedFromValue(double value, double r) const override { return (value - r) / lipModel_; }
    // Lipschitz bound of |g| in model units.
    double modelLipschitz() const { return lipModel_; }

private:
    GyroidCell cell_;
    int samples_;
    double lipModel_;
};

}  // namespace msq
