#pragma once

#include "msq/core.hpp"

#include <string>

namespace msq {

enum class QueryMethod { Naive, SetQ1, SetQ2, Auto };

const char* queryMethodName(QueryMethod m);
QueryMethod parseQueryMethod(const std::string& s);

// Points-per-cell threshold used by Auto when no fitted cost model is supplied.
inline constexpr double kDefaultCrossover = 40.0;

// Auto picks the set query at or above the crossover and the naive loop below it.
QueryMethod resolveMethod(QueryMethod m, double pointsPerCell, double crossover = kDefaultCrossover);

// Configures every fine scale of the model for a concrete method (Auto must be resolved first).
// Naive disables set queries; SetQ1 and SetQ2 enable them and select the matching foam precomputation.
void applyMethod(MultiscaleModel& m, QueryMethod method);

}  // namespace msq
