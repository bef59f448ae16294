#include "msq/bench.hpp"

#include "msq/parallel.hpp"
#include "msq/raycaster.hpp"
#include "msq/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace msq {

namespace {

// Solves the k x k system a x = b in place by partial pivoting; false when singular.
bool solve(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t k = b.size();
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (!(std::abs(a[piv][c]) > 1e-12)) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            double f = a[r][c] / a[c][c];
            for (std::size_t q = c; q < k; ++q) a[r][q] -= f * a[c][q];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = 0; c < k; ++c) b[c] /= a[c][c];
    return true;
}

}  // namespace

CostModel fitCostModel(const std::vector<CostSample>& samples, bool withPerCell) {
    std::set<long long> ppc;
    for (const CostSample& s : samples) {
        if (!(s.cells > 0) || !(s.points >= 0) || !std::isfinite(s.seconds))
            throw std::invalid_argument("fitCostModel: invalid sample");
        ppc.insert(std::llround(s.points / s.cells * 1e6));
    }
    if (ppc.size() < 5) throw std::invalid_argument("fitCostModel: sweep needs at least 5 distinct points-per-cell values");
    // columns scaled to unit max so the normal equations stay well conditioned
    const std::size_t k = withPerCell ? 3 : 2;
    double sc = 0, sp = 0;
    for (const CostSample& s : samples) sc = std::max(sc, s.cells), sp = std::max(sp, s.points);
    auto row = [&](const CostSample& s) {
        std::vector<double> x{1.0};
        if (withPerCell) x.push_back(s.cells / sc);
        x.push_back(s.points / sp);
        return x;
    };
    std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
    std::vector<double> b(k, 0.0);
    for (const CostSample& s : samples) {
        auto x = row(s);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) a[i][j] += x[i] * x[j];
            b[i] += x[i] * s.seconds;
        }
    }
    if (!solve(a, b)) throw std::invalid_argument("fitCostModel: degenerate sweep (cells and points not independent)");
    CostModel m;
    m.overhead = b[0];
    m.perCell = withPerCell ? b[1] / sc : 0.0;
    m.perPoint = b[k - 1] / sp;
    m.samples = static_cast<int>(samples.size());
    double mean = 0;
    for (const CostSample& s : samples) mean += s.seconds;
    mean /= static_cast<double>(samples.size());
    double ssr = 0, sst = 0;
    for (const CostSample& s : samples) {
        double e = s.seconds - m.predict(s.cells, s.points);
        ssr += e * e;
        sst += (s.seconds - mean) * (s.seconds - mean);
    }
    m.r2 = sst > 0 ? 1.0 - ssr / sst : 1.0;
    return m;
}

double crossoverPointsPerCell(double perCell, double naivePerPoint, double setPerPoint) {
    double d = naivePerPoint - setPerPoint;
    if (!(d > 0)) return std::numeric_limits<double>::infinity();
    return perCell / d;
}

std::vector<CostSample> syntheticSweep(const CostModel& truth, const std::vector<int>& pointsPerCell,
                                       const std::vector<int>& cellsPerSide, double relNoise, std::uint64_t seed) {
    std::vector<CostSample> out;
    std::uint64_t ctr = 0;
    for (int side : cellsPerSide)
        for (int p : pointsPerCell) {
            double cells = static_cast<double>(side) * side * side;
            double points = cells * p;
            double u = 2.0 * unitFromBits(splitmix64(seed ^ ctr++)) - 1.0;
            out.push_back({cells, points, truth.predict(cells, points) * (1.0 + relNoise * u)});
        }
    return out;
}

ModelDescription benchModel(const std::string& fine, int side, const std::string& coarse) {
    if (side < 1) throw std::invalid_argument("benchModel: side must be >= 1");
    ModelDescription d;
    if (coarse == "box") {
        d.scales.push_back(BoxSpec{});
    } else if (coarse == "sphere") {
        ImplicitSpec s;
        s.preset = "sphere";
        s.center = {0.5, 0.5, 0.5};
        s.radius = 0.5;
        d.scales.push_back(s);
    } else {
        throw std::invalid_argument("benchModel: unknown coarse type " + coarse);
    }
    GridSpec g{{0, 0, 0}, Point3{1, 1, 1} / side, {side, side, side}};
    const double edge = 1.0 / side;
    if (fine == "voronoi-foam") {
        FoamSpec f;
        f.grid = g;
        f.beamRadius = 0.16 * edge;
        d.scales.push_back(f);
    } else if (fine == "lattice") {
        LatticeSpec l;
        l.grid = g;
        l.preset = "octet";
        l.radius = ParameterField::constant(0.05 * edge);
        d.scales.push_back(l);
    } else if (fine == "gyroid") {
        GyroidSpec y;
        y.grid = g;
        d.scales.push_back(y);
    } else if (fine != "none") {
        throw std::invalid_argument("benchModel: unknown fine type " + fine);
    }
    return d;
}

std::vector<CostSample> measureFoamSweep(const SweepConfig& cfg, QueryMethod method) {
    std::vector<CostSample> out;
    for (int side : cfg.cellsPerSide) {
        FoamParams p;
        p.beamRadius = cfg.beamFraction * cfg.cellEdge;
        p.rngSalt = cfg.salt;
        NeighborhoodGrid g({0, 0, 0}, {cfg.cellEdge, cfg.cellEdge, cfg.cellEdge}, {side, side, side});
        MultiscaleModel m({std::make_shared<FoamScale>(g, p)});
        applyMethod(m, method);
        LengthScale ls(cfg.cellEdge);
        QueryOptions opt;
        opt.threads = cfg.threads;
        for (int ppc : cfg.pointsPerCell) {
            StratifiedRandom d{ppc, 0x5eedULL + static_cast<std::uint64_t>(ppc)};
            double best = std::numeric_limits<double>::infinity();
            for (int r = 0; r < std::max(1, cfg.repeats); ++r) {
                Stopwatch sw;
                auto res = setMembershipQ(m, d, ls, opt);
                best = std::min(best, sw.seconds());
            }
            double cells = static_cast<double>(g.cellCount());
            out.push_back({cells, cells * ppc, best});
        }
    }
    return out;
}

CrossoverReport runCrossover(const SweepConfig& cfg) {
    CrossoverReport r;
    r.naive = fitCostModel(measureFoamSweep(cfg, QueryMethod::Naive), false);
    r.setq1 = fitCostModel(measureFoamSweep(cfg, QueryMethod::SetQ1), true);
    r.setq2 = fitCostModel(measureFoamSweep(cfg, QueryMethod::SetQ2), true);
    r.crossover1 = crossoverPointsPerCell(r.setq1.perCell, r.naive.perPoint, r.setq1.perPoint);
    r.crossover2 = crossoverPointsPerCell(r.setq2.perCell, r.naive.perPoint, r.setq2.perPoint);
    return r;
}

std::string crossoverReportText(const CrossoverReport& r) {
    std::ostringstream o;
    o << std::setprecision(4);
    o << std::left << std::setw(8) << "method" << std::setw(12) << "overhead" << std::setw(12) << "per_cell"
      << std::setw(12) << "per_point" << std::setw(8) << "r2" << "points_per_cell\n";
    auto line = [&](const char* n, const CostModel& m, double x) {
        o << std::setw(8) << n << std::setw(12) << m.overhead << std::setw(12) << m.perCell << std::setw(12)
          << m.perPoint << std::setw(8) << m.r2;
        if (std::isnan(x)) o << "-";
        else o << x;
        o << "\n";
    };
    line("naive", r.naive, std::numeric_limits<double>::quiet_NaN());
    line("setq1", r.setq1, r.crossover1);
    line("setq2", r.setq2, r.crossover2);
    return o.str();
}

std::vector<MatrixRow> runMatrix(const MatrixConfig& cfg) {
    std::vector<MatrixRow> rows;
    for (const auto& c : cfg.coarse)
        for (const auto& f : cfg.fine)
            for (int g : cfg.gridSides)
                for (QueryMethod m : cfg.methods)
                    for (int res : cfg.resolutions) {
                        MultiscaleModel model = buildModel(benchModel(f, g, c));
                        SliceJob job;
                        job.resolution = {res, res, res};
                        job.region = Box3{{0, 0, 0}, {1, 1, 1}};
                        job.method = m;
                        job.threads = cfg.threads;
                        SliceResult sr = slice(model, job);
                        MatrixRow row;
                        row.coarse = c;
                        row.fine = f;
                        row.grid = g;
                        row.method = sr.report.method;
                        row.resolution = res;
                        row.wall = sr.report.wallSeconds;
                        row.coarseSeconds = sr.report.time.coarse;
                        row.perCellSeconds = sr.report.time.perCell;
                        row.perPointSeconds = sr.report.time.perPoint;
                        row.pointsPerCell = sr.report.pointsPerCell;
                        rows.push_back(row);
                    }
    return rows;
}

std::string matrixReportText(const std::vector<MatrixRow>& rows) {
    std::ostringstream o;
    o << std::left << std::setw(8) << "coarse" << std::setw(14) << "fine" << std::setw(6) << "grid" << std::setw(8)
      << "method" << std::setw(6) << "res" << std::setw(12) << "wall_s" << std::setw(12) << "coarse_s"
      << std::setw(12) << "cell_s" << std::setw(12) << "point_s" << "pts_per_cell\n";
    o << std::setprecision(4);
    for (const auto& r : rows)
        o << std::setw(8) << r.coarse << std::setw(14) << r.fine << std::setw(6) << r.grid << std::setw(8)
          << queryMethodName(r.method) << std::setw(6) << r.resolution << std::setw(12) << r.wall << std::setw(12)
          << r.coarseSeconds << std::setw(12) << r.perCellSeconds << std::setw(12) << r.perPointSeconds
          << r.pointsPerCell << "\n";
    return o.str();
}

RenderBenchReport runRenderBench(const RenderBenchConfig& cfg) {
    RenderBenchReport r;
    MultiscaleModel model = buildModel(benchModel("voronoi-foam", cfg.gridSide));
    Camera cam = Camera::front({{0, 0, 0}, {1, 1, 1}}, cfg.resolution, cfg.resolution);
    RenderSettings s;
    s.threads = cfg.threads;
    s.method = QueryMethod::Naive;
    Stopwatch sw;
    RenderResult naive = renderFrame(model, cam, s);
    r.naiveSeconds = sw.seconds();
    PrecompCache cache(cfg.cacheBytes);
    s.method = QueryMethod::SetQ2;
    sw.restart();
    RenderResult cold = renderFrame(model, cam, s, &cache);
    r.coldSeconds = sw.seconds();
    r.coldBuilt = cold.stats.cellsBuilt;
    sw.restart();
    RenderResult warm = renderFrame(model, cam, s, &cache);
    r.warmSeconds = sw.seconds();
    r.warmBuilt = warm.stats.cellsBuilt;
    r.masksEqual = naive.mask == cold.mask && cold.mask == warm.mask;
    for (std::size_t i = 0; i < naive.depth.size(); ++i)
        if (naive.mask[i] && cold.mask[i]) r.maxDepthDiff = std::max(r.maxDepthDiff, std::abs(naive.depth[i] - cold.depth[i]));
    return r;
}

std::string renderBenchReportText(const RenderBenchReport& r) {
    std::ostringstream o;
    o << std::setprecision(4);
    o << "naive_seconds " << r.naiveSeconds << "\ncold_seconds " << r.coldSeconds << "\nwarm_seconds "
      << r.warmSeconds << "\ncold_cells_built " << r.coldBuilt << "\nwarm_cells_built " << r.warmBuilt
      << "\nmasks_equal " << (r.masksEqual ? 1 : 0) << "\nmax_depth_diff " << r.maxDepthDiff << "\n";
    return o.str();
}

}  // namespace msq
