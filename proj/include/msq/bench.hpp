#pragma once

#include "msq/foam.hpp"
#include "msq/method.hpp"
#include "msq/model_io.hpp"

#include <string>
#include <vector>

namespace msq {

struct CostSample {
    double cells = 0.0;
    double points = 0.0;
    double seconds = 0.0;
};

// total time = overhead + cells * perCell + points * perPoint
struct CostModel {
    double overhead = 0.0;
    double perCell = 0.0;
    double perPoint = 0.0;
    double r2 = 0.0;
    int samples = 0;

    double predict(double cells, double points) const { return overhead + cells * perCell + points * perPoint; }
};

// Least-squares fit. With withPerCell unset the per-cell term is fixed at 0 (point-by-point methods).
// Throws std::invalid_argument on fewer than 5 distinct points-per-cell values or a rank-deficient design.
CostModel fitCostModel(const std::vector<CostSample>& samples, bool withPerCell = true);

// perCell / (naivePerPoint - setPerPoint), +inf when the set query is not cheaper per point.
double crossoverPointsPerCell(double perCell, double naivePerPoint, double setPerPoint);

// Deterministic samples of a known linear model with relative multiplicative noise.
std::vector<CostSample> syntheticSweep(const CostModel& truth, const std::vector<int>& pointsPerCell,
                                       const std::vector<int>& cellsPerSide, double relNoise, std::uint64_t seed);

struct SweepConfig {
    double cellEdge = 1.0 / 16.0;
    double beamFraction = 0.16;  // beam radius in cell edges
    std::uint64_t salt = 1;
    std::vector<int> pointsPerCell{4, 8, 16, 32, 64, 128};
    std::vector<int> cellsPerSide{4, 6};
    int repeats = 1;  // best of n per point
    int threads = 1;
};

// Times stratified set membership over a (side^3)-cell foam for each sweep entry.
std::vector<CostSample> measureFoamSweep(const SweepConfig& cfg, QueryMethod method);

struct CrossoverReport {
    CostModel naive, setq1, setq2;
    double crossover1 = 0.0;
    double crossover2 = 0.0;
};

CrossoverReport runCrossover(const SweepConfig& cfg);
std::string crossoverReportText(const CrossoverReport& r);

struct MatrixConfig {
    std::vector<std::string> coarse{"box"};
    std::vector<std::string> fine{"voronoi-foam", "lattice", "gyroid"};
    std::vector<int> gridSides{8};
    std::vector<QueryMethod> methods{QueryMethod::Naive, QueryMethod::SetQ2};
    std::vector<int> resolutions{32, 64};
    int threads = 0;
};

struct MatrixRow {
    std::string coarse, fine;
    int grid = 0;
    QueryMethod method = QueryMethod::Naive;
    int resolution = 0;
    double wall = 0.0, coarseSeconds = 0.0, perCellSeconds = 0.0, perPointSeconds = 0.0;
    double pointsPerCell = 0.0;
};

// Slice timing for every combination of the configured dimensions (no disk output).
std::vector<MatrixRow> runMatrix(const MatrixConfig& cfg);
std::string matrixReportText(const std::vector<MatrixRow>& rows);

struct RenderBenchConfig {
    int gridSide = 16;
    int resolution = 512;
    std::size_t cacheBytes = std::size_t(1) << 30;
    int threads = 0;
};

struct RenderBenchReport {
    double naiveSeconds = 0.0, coldSeconds = 0.0, warmSeconds = 0.0;
    std::uint64_t coldBuilt = 0, warmBuilt = 0;
    bool masksEqual = false;
    double maxDepthDiff = 0.0;
};

RenderBenchReport runRenderBench(const RenderBenchConfig& cfg);
std::string renderBenchReportText(const RenderBenchReport& r);

// Unit-cube coarse scale (box or implicit sphere) over a fine scale of the given type with side^3 cells.
ModelDescription benchModel(const std::string& fine, int side, const std::string& coarse = "box");

}  // namespace msq
