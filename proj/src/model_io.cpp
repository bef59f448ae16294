#include "msq/model_io.hpp"

#include "msq/coarse.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace msq {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string vec(const Point3& p) { return num(p.x) + " " + num(p.y) + " " + num(p.z); }

std::string idx(const CellIndex& c) {
    return std::to_string(c.i) + " " + std::to_string(c.j) + " " + std::to_string(c.k);
}

class Line {
public:
    Line(int no, std::vector<std::string> tok) : no_(no), tok_(std::move(tok)) {}

    const std::string& key() const { return tok_[0]; }
    int number() const { return no_; }
    [[noreturn]] void fail(const std::string& msg) const { throw ModelParseError(no_, msg); }

    void expect(std::size_t n) const {
        if (tok_.size() != n + 1) fail("'" + key() + "' expects " + std::to_string(n) + " value(s)");
    }
    double real(std::size_t i) const {
        const std::string& s = tok_[i + 1];
        char* end = nullptr;
        errno = 0;
        double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0' || errno == ERANGE) fail("bad number '" + s + "'");
        return v;
    }
    long long integer(std::size_t i) const {
        const std::string& s = tok_[i + 1];
        char* end = nullptr;
        errno = 0;
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (end == s.c_str() || *end != '\0' || errno == ERANGE) fail("bad integer '" + s + "'");
        return v;
    }
    unsigned long long unsignedInt(std::size_t i) const {
        const std::string& s = tok_[i + 1];
        char* end = nullptr;
        errno = 0;
        unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (end == s.c_str() || *end != '\0' || errno == ERANGE || s[0] == '-') fail("bad unsigned integer '" + s + "'");
        return v;
    }
    const std::string& word(std::size_t i) const { return tok_[i + 1]; }
    Point3 point(std::size_t first = 0) const { return {real(first), real(first + 1), real(first + 2)}; }
    double one() const {
        expect(1);
        return real(0);
    }
    Point3 three() const {
        expect(3);
        return point();
    }
    int oneInt() const {
        expect(1);
        long long v = integer(0);
        if (v < INT32_MIN || v > INT32_MAX) fail("integer out of range");
        return static_cast<int>(v);
    }
    CellIndex dims() const {
        expect(3);
        CellIndex c;
        for (int a = 0; a < 3; ++a) {
            long long v = integer(static_cast<std::size_t>(a));
            if (v < 1 || v > 1 << 20) fail("dims must be in [1, 2^20]");
            (a == 0 ? c.i : a == 1 ? c.j : c.k) = static_cast<int>(v);
        }
        return c;
    }
    bool flag() const {
        expect(1);
        long long v = integer(0);
        if (v != 0 && v != 1) fail("flag must be 0 or 1");
        return v == 1;
    }
    MaterialResult material() const {
        expect(3);
        MaterialResult m;
        long long id = integer(0);
        if (id < 0 || id > UINT32_MAX) fail("material id out of range");
        m.materialId = static_cast<std::uint32_t>(id);
        m.properties = {real(1), real(2)};
        return m;
    }

private:
    int no_;
    std::vector<std::string> tok_;
};

// Grid keys shared by the fine scales; the extent form is converted to origin and cell size.
struct GridParse {
    GridSpec spec;
    bool haveOrigin = false, haveSize = false, haveMin = false, haveMax = false;
    Point3 emin, emax;

    bool accept(const Line& l) {
        const std::string& k = l.key();
        if (k == "origin") spec.origin = l.three(), haveOrigin = true;
        else if (k == "cell_size") spec.cellSize = l.three(), haveSize = true;
        else if (k == "extent_min") emin = l.three(), haveMin = true;
        else if (k == "extent_max") emax = l.three(), haveMax = true;
        else if (k == "dims") spec.dims = l.dims();
        else return false;
        return true;
    }
    GridSpec finish(int line) const {
        GridSpec g = spec;
        if (haveMin || haveMax) {
            if (haveOrigin || haveSize) throw ModelParseError(line, "use either origin/cell_size or extent_min/extent_max");
            if (!(haveMin && haveMax)) throw ModelParseError(line, "extent needs both extent_min and extent_max");
            NeighborhoodGrid n = NeighborhoodGrid::fromExtent(emin, emax, g.dims);
            g.origin = n.origin();
            g.cellSize = n.cellSize();
        }
        return g;
    }
};

std::string gridText(const GridSpec& g) {
    return "  origin " + vec(g.origin) + "\n  cell_size " + vec(g.cellSize) + "\n  dims " + idx(g.dims) + "\n";
}

std::string materialText(const MaterialResult& m) {
    return "  material " + std::to_string(m.materialId) + " " + num(m.properties[0]) + " " + num(m.properties[1]) + "\n";
}

std::string fieldText(const std::string& key, const ParameterField& f) {
    std::string s = "  " + key + " " + num(f.a0) + "\n";
    if (!f.isConstant()) s += "  " + key + "_gradient " + vec(f.grad) + "\n";
    return s;
}

ScaleSpec parseBlock(const std::string& type, const std::vector<Line>& lines, int startLine) {
    if (type == "box") {
        BoxSpec b;
        for (const Line& l : lines) {
            const std::string& k = l.key();
            if (k == "min") b.min = l.three();
            else if (k == "max") b.max = l.three();
            else if (k == "dims") b.dims = l.dims();
            else if (k == "material") b.material = l.material();
            else l.fail("unknown box key '" + k + "'");
        }
        return b;
    }
    if (type == "implicit-fn") {
        ImplicitSpec s;
        for (const Line& l : lines) {
            const std::string& k = l.key();
            if (k == "preset") {
                l.expect(1);
                s.preset = l.word(0);
                if (s.preset != "sphere" && s.preset != "plane" && s.preset != "gyroid")
                    l.fail("unknown implicit preset '" + s.preset + "'");
            } else if (k == "center") s.center = l.three();
            else if (k == "radius") s.radius = l.one();
            else if (k == "normal") s.normal = l.three();
            else if (k == "offset") s.offset = l.one();
            else if (k == "period") s.period = l.one();
            else if (k == "threshold") s.threshold = l.one();
            else if (k == "bounds_min") s.bounds.lo = l.three();
            else if (k == "bounds_max") s.bounds.hi = l.three();
            else if (k == "dims") s.dims = l.dims();
            else if (k == "material") s.material = l.material();
            else l.fail("unknown implicit-fn key '" + k + "'");
        }
        return s;
    }
    if (type == "voronoi-foam") {
        FoamSpec f;
        GridParse g;
        for (const Line& l : lines) {
            const std::string& k = l.key();
            if (g.accept(l)) continue;
            if (k == "beam_radius") f.beamRadius = l.one();
            else if (k == "salt") {
                l.expect(1);
                f.salt = l.unsignedInt(0);
            } else if (k == "gather_ring") f.gatherRing = l.oneInt();
            else if (k == "distance_reach") f.distanceReach = l.one();
            else if (k == "subcells") f.subcells = l.oneInt();
            else if (k == "method") {
                l.expect(1);
                try {
                    f.method = parseFoamMethod(l.word(0));
                } catch (const std::exception& e) {
                    l.fail(e.what());
                }
            } else if (k == "material") f.material = l.material();
            else l.fail("unknown voronoi-foam key '" + k + "'");
        }
        f.grid = g.finish(startLine);
        return f;
    }
    if (type == "lattice") {
        LatticeSpec s;
        GridParse g;
        for (const Line& l : lines) {
            const std::string& k = l.key();
            if (g.accept(l)) continue;
            if (k == "preset") {
                l.expect(1);
                s.preset = l.word(0);
            } else if (k == "strut") {
                l.expect(6);
                s.struts.push_back({l.point(0), l.point(3)});
            } else if (k == "strut_radius") s.radius.a0 = l.one();
            else if (k == "strut_radius_gradient") s.radius.grad = l.three();
            else if (k == "subdivisions") s.subdivisions = l.oneInt();
            else if (k == "fast_distance") s.fastDistance = l.flag();
            else if (k == "material") s.material = l.material();
            else l.fail("unknown lattice key '" + k + "'");
        }
        if (!s.preset.empty() && !s.struts.empty())
            throw ModelParseError(startLine, "lattice takes either a preset or strut lines, not both");
        if (s.preset.empty() && s.struts.empty()) s.preset = "cross3d";
        s.grid = g.finish(startLine);
        return s;
    }
    if (type == "gyroid") {
        GyroidSpec s;
        GridParse g;
        for (const Line& l : lines) {
            const std::string& k = l.key();
            if (g.accept(l)) continue;
            if (k == "period") s.period = l.one();
            else if (k == "threshold") s.threshold.a0 = l.one();
            else if (k == "threshold_gradient") s.threshold.grad = l.three();
            else if (k == "subdivisions") s.subdivisions = l.oneInt();
            else if (k == "samples_per_axis") s.samplesPerAxis = l.oneInt();
            else if (k == "fast_distance") s.fastDistance = l.flag();
            else if (k == "material") s.material = l.material();
            else l.fail("unknown gyroid key '" + k + "'");
        }
        s.grid = g.finish(startLine);
        return s;
    }
    throw ModelParseError(startLine, "unknown scale type '" + type + "'");
}

}  // namespace

const char* scaleTypeTag(const ScaleSpec& s) {
    static constexpr const char* tags[] = {"box", "implicit-fn", "voronoi-foam", "lattice", "gyroid"};
    return tags[s.index()];
}

ModelDescription parseModel(const std::string& text) {
    ModelDescription d;
    std::istringstream in(text);
    std::string raw;
    int no = 0;
    bool open = false;
    std::string type;
    int start = 0;
    std::vector<Line> body;
    while (std::getline(in, raw)) {
        ++no;
        if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "scale") {
            if (open) throw ModelParseError(no, "nested scale block");
            if (tok.size() != 2) throw ModelParseError(no, "expected 'scale <type>'");
            open = true;
            type = tok[1];
            start = no;
            body.clear();
        } else if (tok[0] == "end") {
            if (!open) throw ModelParseError(no, "'end' without 'scale'");
            if (tok.size() != 1) throw ModelParseError(no, "'end' takes no values");
            d.scales.push_back(parseBlock(type, body, start));
            open = false;
        } else {
            if (!open) throw ModelParseError(no, "key outside a scale block");
            body.emplace_back(no, std::move(tok));
        }
    }
    if (open) throw ModelParseError(start, "unterminated scale block");
    if (d.scales.empty()) throw ModelParseError(no, "model has no scales");
    return d;
}

ModelDescription loadModelFile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parseModel(ss.str());
}

std::string serializeModel(const ModelDescription& d) {
    std::string out;
    for (const ScaleSpec& s : d.scales) {
        out += std::string("scale ") + scaleTypeTag(s) + "\n";
        if (const auto* b = std::get_if<BoxSpec>(&s)) {
            out += "  min " + vec(b->min) + "\n  max " + vec(b->max) + "\n  dims " + idx(b->dims) + "\n";
            out += materialText(b->material);
        } else if (const auto* m = std::get_if<ImplicitSpec>(&s)) {
            out += "  preset " + m->preset + "\n";
            if (m->preset == "sphere") {
                out += "  center " + vec(m->center) + "\n  radius " + num(m->radius) + "\n";
            } else {
                if (m->preset == "plane")
                    out += "  normal " + vec(m->normal) + "\n  offset " + num(m->offset) + "\n";
                else
                    out += "  period " + num(m->period) + "\n  threshold " + num(m->threshold) + "\n";
                out += "  bounds_min " + vec(m->bounds.lo) + "\n  bounds_max " + vec(m->bounds.hi) + "\n";
            }
            out += "  dims " + idx(m->dims) + "\n" + materialText(m->material);
        } else if (const auto* f = std::get_if<FoamSpec>(&s)) {
            out += gridText(f->grid);
            out += "  beam_radius " + num(f->beamRadius) + "\n  salt " + std::to_string(f->salt) + "\n";
            out += "  gather_ring " + std::to_string(f->gatherRing) + "\n  distance_reach " + num(f->distanceReach) + "\n";
            out += "  subcells " + std::to_string(f->subcells) + "\n  method " + foamMethodName(f->method) + "\n";
            out += materialText(f->material);
        } else if (const auto* l = std::get_if<LatticeSpec>(&s)) {
            out += gridText(l->grid);
            if (!l->preset.empty()) out += "  preset " + l->preset + "\n";
            for (const auto& [a, b] : l->struts) out += "  strut " + vec(a) + " " + vec(b) + "\n";
            out += fieldText("strut_radius", l->radius);
            out += "  subdivisions " + std::to_string(l->subdivisions) + "\n";
            out += "  fast_distance " + std::string(l->fastDistance ? "1" : "0") + "\n" + materialText(l->material);
        } else if (const auto* g = std::get_if<GyroidSpec>(&s)) {
            out += gridText(g->grid);
            out += "  period " + num(g->period) + "\n" + fieldText("threshold", g->threshold);
            out += "  subdivisions " + std::to_string(g->subdivisions) + "\n";
            out += "  samples_per_axis " + std::to_string(g->samplesPerAxis) + "\n";
            out += "  fast_distance " + std::string(g->fastDistance ? "1" : "0") + "\n" + materialText(g->material);
        }
        out += "end\n";
    }
    return out;
}

void saveModelFile(const ModelDescription& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write model file " + path);
    f << serializeModel(d);
}

std::shared_ptr<Scale> buildScale(const ScaleSpec& s) {
    if (const auto* b = std::get_if<BoxSpec>(&s)) return std::make_shared<BoxScale>(b->min, b->max, b->dims, b->material);
    if (const auto* m = std::get_if<ImplicitSpec>(&s)) {
        std::shared_ptr<ImplicitScale> out;
        if (m->preset == "sphere")
            out = ImplicitScale::sphere(m->center, m->radius, m->dims);
        else if (m->preset == "plane")
            out = ImplicitScale::plane(m->normal, m->offset, m->bounds, m->dims);
        else if (m->preset == "gyroid")
            out = ImplicitScale::gyroid(m->period, m->threshold, m->bounds, m->dims);
        else
            throw std::invalid_argument("unknown implicit preset " + m->preset);
        MaterialResult mat = m->material;
        out->setMaterialField([mat](const Point3&) { return mat; });
        return out;
    }
    if (const auto* f = std::get_if<FoamSpec>(&s)) {
        FoamParams p;
        p.beamRadius = f->beamRadius;
        p.rngSalt = f->salt;
        p.gatherRing = f->gatherRing;
        p.distanceReach = f->distanceReach;
        p.subcells = f->subcells;
        return std::make_shared<FoamScale>(f->grid.grid(), p, f->method, f->material);
    }
    if (const auto* l = std::get_if<LatticeSpec>(&s)) {
        LatticeCell cell = l->preset.empty() ? LatticeCell{l->struts} : LatticeCell::preset(l->preset);
        auto out = std::make_shared<LatticeScale>(l->grid.grid(), cell, l->radius, l->subdivisions, l->material,
                                                  l->preset);
        out->setFastDistance(l->fastDistance);
        return out;
    }
    const auto& g = std::get<GyroidSpec>(s);
    auto out = std::make_shared<GyroidScale>(g.grid.grid(), GyroidCell{g.period}, g.threshold, g.subdivisions,
                                             g.samplesPerAxis, g.material);
    out->setFastDistance(g.fastDistance);
    return out;
}

MultiscaleModel buildModel(const ModelDescription& d) {
    std::vector<std::shared_ptr<Scale>> scales;
    for (const ScaleSpec& s : d.scales) scales.push_back(buildScale(s));
    return MultiscaleModel(std::move(scales));
}

void setFoamMethod(ModelDescription& d, FoamMethod m) {
    for (ScaleSpec& s : d.scales)
        if (auto* f = std::get_if<FoamSpec>(&s)) f->method = m;
}

}  // namespace msq
