#include "msq/method.hpp"

#include "msq/foam.hpp"

#include <stdexcept>

namespace msq {

const char* queryMethodName(QueryMethod m) {
    switch (m) {
        case QueryMethod::Naive: return "naive";
        case QueryMethod::SetQ1: return "setq1";
        case QueryMethod::SetQ2: return "setq2";
        case QueryMethod::Auto: return "auto";
    }
    return "?";
}

QueryMethod parseQueryMethod(const std::string& s) {
    if (s == "naive") return QueryMethod::Naive;
    if (s == "setq1") return QueryMethod::SetQ1;
    if (s == "setq2") return QueryMethod::SetQ2;
    if (s == "auto") return QueryMethod::Auto;
    throw std::invalid_argument("unknown method '" + s + "' (expected naive|setq1|setq2|auto)");
}

QueryMethod resolveMethod(QueryMethod m, double pointsPerCell, double crossover) {
    if (m != QueryMethod::Auto) return m;
    return pointsPerCell >= crossover ? QueryMethod::SetQ2 : QueryMethod::Naive;
}

void applyMethod(MultiscaleModel& m, QueryMethod method) {
    if (method == QueryMethod::Auto) throw std::invalid_argument("applyMethod: resolve auto first");
    for (std::size_t k = 0; k < m.size(); ++k) {
        Scale& s = m.scale(k);
        if (s.isCoarse()) continue;
        s.config().disableSetQueries = method == QueryMethod::Naive;
        if (auto* f = dynamic_cast<FoamScale*>(&s)) {
            if (method == QueryMethod::SetQ1) f->setMethod(FoamMethod::Method1);
            if (method == QueryMethod::SetQ2) f->setMethod(FoamMethod::Method2);
        }
    }
}

}  // namespace msq
