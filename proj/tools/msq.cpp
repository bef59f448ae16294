#include "msq/bench.hpp"
#include "msq/model_io.hpp"
#include "msq/raycaster.hpp"
#include "msq/slicer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

msq::Camera makeCamera(const std::string& spec, const msq::Box3& box, int w, int h) {
    if (spec == "front") return msq::Camera::front(box, w, h);
    if (spec == "corner") return msq::Camera::corner(box, w, h);
    // explicit: "px py pz lx ly lz ux uy uz fov"
    std::istringstream in(spec);
    double v[10];
    for (double& x : v)
        if (!(in >> x)) throw std::invalid_argument("camera must be front, corner or 'px py pz lx ly lz ux uy uz fov'");
    return msq::Camera({v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, v[9], w, h);
}

void writeText(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale shape-material queries: slicing, rendering and benchmarks"};
    app.require_subcommand(1);

    auto* sl = app.add_subcommand("slice", "Write a binary slice stack of a model");
    std::string slModel, slOut, slMethod = "setq2";
    std::vector<int> slRes{64, 64, 64};
    bool slChunked = false;
    int slThreads = 0;
    double slBudgetMb = 1024;
    sl->add_option("--model", slModel, "Model description file")->required();
    sl->add_option("--res", slRes, "Samples per axis NX NY NZ")->expected(3);
    sl->add_option("--method", slMethod, "naive|setq1|setq2|auto");
    sl->add_flag("--chunked", slChunked, "One neighborhood-cell layer at a time");
    sl->add_option("--out", slOut, "Output directory")->required();
    sl->add_option("--threads", slThreads, "Worker threads (0 = all cores)");
    sl->add_option("--budget-mb", slBudgetMb, "Memory budget for full-stack mode");

    auto* rd = app.add_subcommand("render", "Ray-cast depth and hit-mask images of a model");
    std::string rdModel, rdCamera = "front", rdMethod = "setq2", rdOut;
    std::vector<int> rdRes{256, 256};
    double rdCacheMb = 1024;
    int rdThreads = 0, rdFrames = 1;
    rd->add_option("--model", rdModel, "Model description file")->required();
    rd->add_option("--camera", rdCamera, "front|corner|'px py pz lx ly lz ux uy uz fov'");
    rd->add_option("--res", rdRes, "Image size W H")->expected(2);
    rd->add_option("--method", rdMethod, "naive|setq1|setq2");
    rd->add_option("--cache-mb", rdCacheMb, "Precomputation cache budget in MiB (0 = no cache)");
    rd->add_option("--frames", rdFrames, "Render the frame this many times with a shared cache");
    rd->add_option("--threads", rdThreads, "Worker threads (0 = all cores)");
    rd->add_option("--out", rdOut, "Output prefix")->required();

    auto* bn = app.add_subcommand("bench", "Run a benchmark suite");
    std::string bnSuite = "crossover", bnOut = "-";
    int bnThreads = 1, bnRes = 512, bnGrid = 16;
    bn->add_option("--suite", bnSuite, "crossover|matrix|render")->check(CLI::IsMember({"crossover", "matrix", "render"}));
    bn->add_option("--out", bnOut, "Report file ('-' = stdout)");
    bn->add_option("--threads", bnThreads, "Worker threads (0 = all cores)");
    bn->add_option("--res", bnRes, "Image size for the render suite");
    bn->add_option("--grid", bnGrid, "Neighborhood cells per side for the render suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sl) {
            msq::MultiscaleModel model = msq::buildModel(msq::loadModelFile(slModel));
            msq::SliceJob job;
            job.resolution = {slRes[0], slRes[1], slRes[2]};
            job.method = msq::parseQueryMethod(slMethod);
            job.mode = slChunked ? msq::ChunkMode::PerLayer : msq::ChunkMode::Full;
            job.outDir = slOut;
            job.threads = slThreads;
            job.memoryBudgetBytes = static_cast<std::uint64_t>(slBudgetMb * 1024 * 1024);
            msq::SliceResult r = msq::slice(model, job);
            std::cout << msq::sliceReportText(r.report);
        } else if (*rd) {
            msq::ModelDescription d = msq::loadModelFile(rdModel);
            msq::MultiscaleModel model = msq::buildModel(d);
            msq::Camera cam = makeCamera(rdCamera, model.scale(0).neighborhood().extent(), rdRes[0], rdRes[1]);
            msq::RenderSettings s;
            s.method = msq::parseQueryMethod(rdMethod);
            s.threads = rdThreads;
            msq::PrecompCache cache(static_cast<std::size_t>(rdCacheMb * 1024 * 1024));
            msq::RenderResult r;
            for (int f = 0; f < std::max(1, rdFrames); ++f) {
                r = msq::renderFrame(model, cam, s, &cache);
                std::cout << "frame " << f << " seconds " << r.stats.totalSeconds << " cells_built "
                          << r.stats.cellsBuilt << "\n";
            }
            msq::writeRender(r, rdOut);
            std::cout << msq::renderStatsText(r.stats);
        } else if (*bn) {
            std::string text;
            if (bnSuite == "crossover") {
                msq::SweepConfig cfg;
                cfg.threads = bnThreads;
                cfg.repeats = 2;
                text = msq::crossoverReportText(msq::runCrossover(cfg));
            } else if (bnSuite == "matrix") {
                msq::MatrixConfig cfg;
                cfg.threads = bnThreads;
                text = msq::matrixReportText(msq::runMatrix(cfg));
            } else {
                msq::RenderBenchConfig cfg;
                cfg.threads = bnThreads;
                cfg.resolution = bnRes;
                cfg.gridSide = bnGrid;
                text = msq::renderBenchReportText(msq::runRenderBench(cfg));
            }
            writeText(bnOut, text);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
