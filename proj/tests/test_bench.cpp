#include "msq/bench.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>

using namespace msq;

TEST_CASE("cost fit recovers a synthetic linear model") {
    CostModel truth{2e-3, 4e-6, 1e-7};
    auto s = syntheticSweep(truth, {4, 8, 16, 32, 64, 128}, {4, 8, 12}, 0.01, 7);
    CHECK(s.size() == 18);
    CostModel fit = fitCostModel(s);
    CHECK(std::abs(fit.perCell - truth.perCell) <= 0.05 * truth.perCell);
    CHECK(std::abs(fit.perPoint - truth.perPoint) <= 0.05 * truth.perPoint);
    CHECK(fit.r2 > 0.99);
    CHECK(fit.samples == 18);

    CostModel pointOnly{1e-3, 0, 3e-7};
    CostModel f2 = fitCostModel(syntheticSweep(pointOnly, {4, 8, 16, 32, 64}, {4, 8}, 0.0, 1), false);
    CHECK(f2.perCell == 0.0);
    CHECK(f2.perPoint == doctest::Approx(3e-7).epsilon(1e-9));
    CHECK(f2.overhead == doctest::Approx(1e-3).epsilon(1e-9));
}

TEST_CASE("degenerate sweeps are rejected") {
    CostModel truth{0, 1e-6, 1e-7};
    CHECK_THROWS_AS(fitCostModel(syntheticSweep(truth, {4, 8, 16, 32}, {4, 8}, 0.0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(fitCostModel(syntheticSweep(truth, {16, 16, 16, 16, 16, 16}, {4, 8}, 0.0, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(fitCostModel({}), std::invalid_argument);
}

TEST_CASE("crossover formula") {
    CHECK(crossoverPointsPerCell(10, 1, 0.5) == doctest::Approx(20));
    CHECK(std::isinf(crossoverPointsPerCell(10, 1, 1)));
    CHECK(std::isinf(crossoverPointsPerCell(10, 1, 2)));
    char buf[16];
    // reference constants: 1.129e-3 / (3.11e-5 - 1.54e-6) and 1.183e-3 / (3.11e-5 - 5.72e-7)
    double c1 = crossoverPointsPerCell(1.129e-3, 3.11e-5, 1.54e-6);
    double c2 = crossoverPointsPerCell(1.183e-3, 3.11e-5, 5.72e-7);
    std::snprintf(buf, sizeof buf, "%.1f", std::trunc(c1 * 10) / 10);
    CHECK(std::string(buf) == "38.1");
    CHECK(c1 == doctest::Approx(1.129e-3 / 2.956e-5));
    std::snprintf(buf, sizeof buf, "%.1f", std::trunc(c2 * 10) / 10);
    CHECK(std::string(buf) == "38.7");
}

TEST_CASE("matrix covers every combination") {
    MatrixConfig cfg;
    cfg.fine = {"voronoi-foam", "gyroid"};
    cfg.gridSides = {2, 4};
    cfg.resolutions = {8};
    cfg.methods = {QueryMethod::Naive, QueryMethod::SetQ2};
    cfg.threads = 1;
    auto rows = runMatrix(cfg);
    CHECK(rows.size() == 1 * 2 * 2 * 2 * 1);
    for (const auto& r : rows) {
        CHECK(r.wall > 0);
        CHECK(r.resolution == 8);
    }
    CHECK(matrixReportText(rows).find("gyroid") != std::string::npos);
}

TEST_CASE("bench models") {
    CHECK(benchModel("none", 2).scales.size() == 1);
    CHECK(benchModel("lattice", 2, "sphere").scales.size() == 2);
    CHECK_THROWS(benchModel("teapot", 2));
    CHECK_THROWS(benchModel("lattice", 0));
}
