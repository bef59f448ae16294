#pragma once

#include "msq/core.hpp"
#include "msq/method.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msq {

class SliceBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ChunkMode { Full, PerLayer };

struct SliceJob {
    CellIndex resolution{64, 64, 64};
    // Sliced region; defaults to the extent of the coarsest scale.
    std::optional<Box3> region;
    ChunkMode mode = ChunkMode::Full;
    QueryMethod method = QueryMethod::SetQ2;
    double autoCrossover = kDefaultCrossover;
    // Empty: nothing is written to disk.
    std::string outDir;
    // Keep the packed stack in the result (tests); chunked runs otherwise hold one chunk at a time.
    bool keepStack = false;
    // Full mode fails when the stack plus its query results exceed this.
    std::uint64_t memoryBudgetBytes = 1ULL << 30;
    int threads = 0;
    // Test-only: shift chunk boundaries by this many sample layers so they no longer align with cells.
    int chunkMisalignLayers = 0;
};

// One 1-bit image per z-layer; rows along y (row 0 = lowest y), bits along x, MSB first, rows padded to bytes.
struct SliceStack {
    int width = 0;
    int height = 0;
    std::vector<std::vector<std::uint8_t>> layers;

    std::size_t rowBytes() const { return (static_cast<std::size_t>(width) + 7) / 8; }
    bool pixel(int layer, int i, int j) const {
        return (layers[layer][j * rowBytes() + i / 8] >> (7 - i % 8)) & 1;
    }
    friend bool operator==(const SliceStack&, const SliceStack&) = default;
};

struct SliceReport {
    QueryMethod method = QueryMethod::SetQ2;  // resolved
    TimeSplit time;                          // summed over workers
    double wallSeconds = 0.0;
    double pointsPerCell = 0.0;
    std::uint64_t setQueryGroups = 0;
    std::uint64_t precompBuilds = 0;
    std::uint64_t insideCount = 0;
    int chunks = 0;
    // Wall seconds per slice layer; layers of one chunk share the chunk's time evenly.
    std::vector<double> layerSeconds;
};

struct SliceResult {
    SliceReport report;
    SliceStack stack;  // filled when keepStack is set
};

// Voxel-center sample lattice of a job.
RegularGrid sliceLattice(const Box3& region, const CellIndex& res);

// Configures the model for the job's method, then slices.
SliceResult slice(MultiscaleModel& model, const SliceJob& job);

void writePbm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& packed);
// Reads a P4 file back into packed rows.
std::vector<std::uint8_t> readPbm(const std::string& path, int& width, int& height);

std::string sliceReportText(const SliceReport& r);

}  // namespace msq
