#include "msq/slicer.hpp"

#include "msq/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace msq {

namespace {

std::string layerName(int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "layer_%05d.pbm", k);
    return buf;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void writeManifest(const std::string& dir, const RegularGrid& lattice, const Box3& region, int layers) {
    std::ofstream f(std::filesystem::path(dir) / "manifest.txt");
    if (!f) throw std::runtime_error("cannot write manifest in " + dir);
    f << "msq-slices 1\n";
    f << "width " << lattice.counts.i << "\nheight " << lattice.counts.j << "\nlayers " << layers << "\n";
    f << "region_min " << num(region.lo.x) << " " << num(region.lo.y) << " " << num(region.lo.z) << "\n";
    f << "region_max " << num(region.hi.x) << " " << num(region.hi.y) << " " << num(region.hi.z) << "\n";
    f << "origin " << num(lattice.origin.x) << " " << num(lattice.origin.y) << " " << num(lattice.origin.z) << "\n";
    f << "spacing " << num(lattice.spacing.x) << " " << num(lattice.spacing.y) << " " << num(lattice.spacing.z)
      << "\n";
    f << "sample voxel-center\n";
    for (int k = 0; k < layers; ++k) f << "file " << layerName(k) << "\n";
}

// Chunk start layers; each chunk covers one z-layer of cells of the grouping grid.
std::vector<int> chunkStarts(const SliceJob& job, const RegularGrid& lattice, const NeighborhoodGrid& fine) {
    const int nz = lattice.counts.k;
    std::vector<int> starts{0};
    if (job.mode == ChunkMode::Full) return starts;
    int prev = fine.cellOfClamped(lattice.sample(0, 0, 0)).k;
    for (int k = 1; k < nz; ++k) {
        int c = fine.cellOfClamped(lattice.sample(0, 0, k)).k;
        if (c != prev) starts.push_back(k);
        prev = c;
    }
    if (job.chunkMisalignLayers != 0) {
        for (std::size_t q = 1; q < starts.size(); ++q) starts[q] = std::clamp(starts[q] + job.chunkMisalignLayers, 1, nz);
        // the shift may open a leading chunk wider than one cell layer; split it at the shift
        if (job.chunkMisalignLayers > 0 && job.chunkMisalignLayers < nz) starts.insert(starts.begin() + 1, job.chunkMisalignLayers);
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        while (!starts.empty() && starts.back() >= nz) starts.pop_back();
    }
    return starts;
}

}  // namespace

RegularGrid sliceLattice(const Box3& region, const CellIndex& res) {
    if (res.i < 1 || res.j < 1 || res.k < 1) throw std::invalid_argument("slice resolution must be >= 1 per axis");
    Point3 size = region.size();
    if (!(size.x > 0 && size.y > 0 && size.z > 0)) throw std::invalid_argument("slice region must have positive size");
    RegularGrid g;
    g.spacing = {size.x / res.i, size.y / res.j, size.z / res.k};
    g.origin = region.lo + g.spacing * 0.5;
    g.counts = res;
    return g;
}

void writePbm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& packed) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "P4\n" << width << " " << height << "\n";
    f.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> readPbm(const std::string& path, int& width, int& height) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string magic;
    f >> magic >> width >> height;
    if (magic != "P4" || width < 1 || height < 1) throw std::runtime_error("not a P4 bitmap: " + path);
    f.get();
    std::vector<std::uint8_t> out(((static_cast<std::size_t>(width) + 7) / 8) * height);
    f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("truncated bitmap: " + path);
    return out;
}

SliceResult slice(MultiscaleModel& model, const SliceJob& job) {
    const Box3 region = job.region ? *job.region : model.scale(0).neighborhood().extent();
    const RegularGrid lattice = sliceLattice(region, job.resolution);
    const double spacing = std::min({lattice.spacing.x, lattice.spacing.y, lattice.spacing.z});
    const LengthScale ls(spacing);
    const NeighborhoodGrid& fine = groupingGrid(model, ls);
    const int nx = lattice.counts.i, ny = lattice.counts.j, nz = lattice.counts.k;
    const std::size_t rowBytes = (static_cast<std::size_t>(nx) + 7) / 8;
    const std::size_t layerBytes = rowBytes * ny;
    const auto total = static_cast<std::uint64_t>(lattice.size());

    SliceResult result;
    SliceReport& rep = result.report;
    {
        CellIndex a = fine.cellOfClamped(region.lo), b = fine.cellOfClamped(region.hi);
        double cells = static_cast<double>(b.i - a.i + 1) * (b.j - a.j + 1) * (b.k - a.k + 1);
        rep.pointsPerCell = static_cast<double>(total) / cells;
    }
    rep.method = resolveMethod(job.method, rep.pointsPerCell, job.autoCrossover);
    applyMethod(model, rep.method);

    std::vector<int> starts = chunkStarts(job, lattice, fine);
    auto chunkBytes = [&](int layers) {
        return static_cast<std::uint64_t>(layers) * (static_cast<std::uint64_t>(nx) * ny * sizeof(MembershipResult) +
                                                     layerBytes);
    };
    int widest = 0;
    for (std::size_t q = 0; q < starts.size(); ++q)
        widest = std::max(widest, (q + 1 < starts.size() ? starts[q + 1] : nz) - starts[q]);
    if (chunkBytes(widest) > job.memoryBudgetBytes) {
        std::ostringstream msg;
        msg << "slice needs " << chunkBytes(widest) << " bytes in memory, budget is " << job.memoryBudgetBytes
            << (job.mode == ChunkMode::Full ? "; rerun in chunked mode (--chunked)" : "; reduce the resolution");
        throw SliceBudgetError(msg.str());
    }
    if (!job.outDir.empty()) std::filesystem::create_directories(job.outDir);

    model.resetCounters();
    if (job.keepStack) {
        result.stack.width = nx;
        result.stack.height = ny;
        result.stack.layers.reserve(static_cast<std::size_t>(nz));
    }
    rep.layerSeconds.assign(static_cast<std::size_t>(nz), 0.0);
    Stopwatch wall;
    QueryOptions opt;
    opt.threads = job.threads;
    for (std::size_t q = 0; q < starts.size(); ++q) {
        const int k0 = starts[q], k1 = q + 1 < starts.size() ? starts[q + 1] : nz;
        RegularGrid chunk = lattice;
        chunk.first.k = k0;
        chunk.counts.k = k1 - k0;
        Stopwatch sw;
        QueryReport qr;
        std::vector<MembershipResult> mem = setMembershipQ(model, chunk, ls, opt, &qr);
        double secs = sw.seconds();
        rep.time += qr.time;
        for (int k = k0; k < k1; ++k) rep.layerSeconds[static_cast<std::size_t>(k)] = secs / (k1 - k0);
        for (int k = 0; k < k1 - k0; ++k) {
            std::vector<std::uint8_t> bits(layerBytes, 0);
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i)
                    if (mem[static_cast<std::size_t>(chunk.slot(i, j, k))].inside) {
                        bits[j * rowBytes + i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
                        ++rep.insideCount;
                    }
            if (!job.outDir.empty())
                writePbm((std::filesystem::path(job.outDir) / layerName(k0 + k)).string(), nx, ny, bits);
            if (job.keepStack) result.stack.layers.push_back(std::move(bits));
        }
    }
    rep.wallSeconds = wall.seconds();
    rep.chunks = static_cast<int>(starts.size());
    for (std::size_t k = 0; k < model.size(); ++k) {
        rep.setQueryGroups += model.scale(k).counters().setQueryGroups.load();
        rep.precompBuilds += model.scale(k).counters().precompBuilds.load();
    }
    if (!job.outDir.empty()) writeManifest(job.outDir, lattice, region, nz);
    return result;
}

std::string sliceReportText(const SliceReport& r) {
    std::ostringstream o;
    o << "method " << queryMethodName(r.method) << "\n";
    o << "wall_seconds " << r.wallSeconds << "\n";
    o << "coarse_seconds " << r.time.coarse << "\n";
    o << "fine_per_cell_seconds " << r.time.perCell << "\n";
    o << "fine_per_point_seconds " << r.time.perPoint << "\n";
    o << "points_per_cell " << r.pointsPerCell << "\n";
    o << "chunks " << r.chunks << "\n";
    o << "set_query_groups " << r.setQueryGroups << "\n";
    o << "precomp_builds " << r.precompBuilds << "\n";
    o << "inside_voxels " << r.insideCount << "\n";
    return o.str();
}

}  // namespace msq
