#pragma once

#include "msq/geometry.hpp"
#include "msq/pointsets.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace msq {

class LengthScale {
public:
    explicit LengthScale(double value);
    double value() const { return value_; }

private:
    double value_;
};

struct MembershipResult {
    bool inside = false;
    friend bool operator==(const MembershipResult&, const MembershipResult&) = default;
};

// Signed: negative inside, positive outside; |distance| never exceeds the distance to the boundary.
struct DistanceResult {
    double distance = 0.0;
};

struct MaterialResult {
    static constexpr std::size_t kPropertyCount = 2;
    static constexpr std::array<const char*, kPropertyCount> kPropertyNames{"density", "modulus"};
    static constexpr std::uint32_t kVoidId = 0;

    std::uint32_t materialId = kVoidId;
    std::array<double, kPropertyCount> properties{0.0, 0.0};

    static MaterialResult voidMaterial() { return {}; }
    bool isVoid() const { return materialId == kVoidId; }
    double density() const { return properties[0]; }
    double modulus() const { return properties[1]; }
    friend bool operator==(const MaterialResult&, const MaterialResult&) = default;
};

// Membership plus distance for one point; used by the distance dispatch and the ray marcher.
struct CellSample {
    bool inside = false;
    double distance = 0.0;
};

// Per-neighborhood precomputation owned by a scale; immutable once built.
class CellState {
public:
    virtual ~CellState() = default;
    virtual std::size_t bytes() const = 0;
};

enum class GroupingUnit { Neighborhood, Subgrid };

struct ScaleConfig {
    bool disableSetQueries = false;
    GroupingUnit grouping = GroupingUnit::Neighborhood;
};

struct ScaleCounters {
    std::atomic<std::uint64_t> setQueryGroups{0};
    std::atomic<std::uint64_t> setQueryPoints{0};
    std::atomic<std::uint64_t> precompBuilds{0};
    std::atomic<std::uint64_t> fastPathHits{0};
    std::atomic<std::uint64_t> fastPathTotal{0};

    void reset();
    double fastPathFraction() const;
};

// Wall time split of a query: coarse scales, fine per-cell precomputation, fine per-point work.
struct TimeSplit {
    double coarse = 0.0;
    double perCell = 0.0;
    double perPoint = 0.0;

    TimeSplit& operator+=(const TimeSplit& o) {
        coarse += o.coarse;
        perCell += o.perCell;
        perPoint += o.perPoint;
        return *this;
    }
    double total() const { return coarse + perCell + perPoint; }
};

class Scale {
public:
    explicit Scale(NeighborhoodGrid grid) : grid_(grid) {}
    virtual ~Scale() = default;
    Scale(const Scale&) = delete;
    Scale& operator=(const Scale&) = delete;

    virtual std::string typeName() const = 0;
    // Coarse scales are timed as coarse work and never carry per-cell state.
    virtual bool isCoarse() const { return false; }

    const NeighborhoodGrid& neighborhood() const { return grid_; }
    ScaleConfig& config() { return config_; }
    const ScaleConfig& config() const { return config_; }
    ScaleCounters& counters() const { return counters_; }

    virtual MembershipResult pointMembership(const Point3& p) const = 0;
    virtual DistanceResult pointDistance(const Point3& p) const = 0;
    virtual MaterialResult insideMaterial(const Point3& p) const = 0;
    MaterialResult pointMaterial(const Point3& p) const {
        return pointMembership(p).inside ? insideMaterial(p) : MaterialResult::voidMaterial();
    }
    virtual CellSample pointSample(const Point3& p) const {
        return {pointMembership(p).inside, pointDistance(p).distance};
    }

    // Optional specialization. A scale providing it builds per-cell state once per group and
    // answers each point against that state; answers must equal the point queries.
    virtual bool providesSetQueries() const { return false; }
    bool setQueriesEnabled() const { return providesSetQueries() && !config_.disableSetQueries; }
    virtual std::shared_ptr<const CellState> prepareCell(const CellIndex& cell) const;
    virtual bool cellMembership(const CellState& state, const Point3& p) const;
    virtual CellSample cellSample(const CellState& state, const Point3& p) const;
    // Whether a renderer should keep this scale's cell states in its cache.
    virtual bool cacheableState() const { return false; }
    // Subgrid resolution used when grouping by subgrid.
    virtual int subgridResolution() const { return 1; }

protected:
    NeighborhoodGrid grid_;
    ScaleConfig config_;
    mutable ScaleCounters counters_;
};

// Point-query loop over a group, used when a scale has no specialized set query.
void defaultSetMembership(const Scale& s, const PointGroup& g, MembershipResult* out);
void defaultSetSample(const Scale& s, const PointGroup& g, CellSample* out);
void defaultSetMaterial(const Scale& s, const PointGroup& g, MaterialResult* out);

class MultiscaleModel {
public:
    explicit MultiscaleModel(std::vector<std::shared_ptr<Scale>> scales);

    std::size_t size() const { return scales_.size(); }
    const Scale& scale(std::size_t i) const { return *scales_[i]; }
    Scale& scale(std::size_t i) { return *scales_[i]; }
    const std::shared_ptr<Scale>& scalePtr(std::size_t i) const { return scales_[i]; }
    // Scales consulted at a length scale: the coarsest always, finer ones iff cell edge >= ls.
    std::vector<std::size_t> consulted(LengthScale ls) const;
    void resetCounters() const;

private:
    std::vector<std::shared_ptr<Scale>> scales_;
};

struct QueryOptions {
    int threads = 0;   // 0 = hardware concurrency
    bool subgridGrouping = false;
};

struct QueryReport {
    TimeSplit time;
    std::vector<std::uint64_t> forwarded;   // points handed to each scale
    std::vector<std::uint64_t> insideCount; // points each scale answered inside
    std::uint64_t groups = 0;
};

MembershipResult pointMembershipQ(const MultiscaleModel& m, const Point3& p, LengthScale ls);
DistanceResult pointDistanceQ(const MultiscaleModel& m, const Point3& p, LengthScale ls);
MaterialResult pointMaterialQ(const MultiscaleModel& m, const Point3& p, LengthScale ls);

std::vector<MembershipResult> setMembershipQ(const MultiscaleModel& m, const PointSetDescriptor& pts, LengthScale ls,
                                             const QueryOptions& opt = {}, QueryReport* report = nullptr);
std::vector<DistanceResult> setDistanceQ(const MultiscaleModel& m, const PointSetDescriptor& pts, LengthScale ls,
                                         const QueryOptions& opt = {}, QueryReport* report = nullptr);
std::vector<MaterialResult> setMaterialQ(const MultiscaleModel& m, const PointSetDescriptor& pts, LengthScale ls,
                                         const QueryOptions& opt = {}, QueryReport* report = nullptr);

// Grid used to group a descriptor for a model: that of the finest consulted scale.
const NeighborhoodGrid& groupingGrid(const MultiscaleModel& m, LengthScale ls);
// Materialized point positions of a descriptor in slot order.
std::vector<Point3> materialize(const PointSetDescriptor& pts, const NeighborhoodGrid& grid);

}  // namespace msq
