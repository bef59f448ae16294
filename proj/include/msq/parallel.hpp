#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace msq {

int resolveThreads(int requested);

// Runs fn(task, worker) for task in [0, n); tasks are claimed dynamically.
void parallelFor(std::int64_t n, int threads, const std::function<void(std::int64_t, int)>& fn);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void restart() { start_ = std::chrono::steady_clock::now(); }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace msq
