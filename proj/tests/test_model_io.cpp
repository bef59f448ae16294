#include "msq/coarse.hpp"
#include "msq/model_io.hpp"
#include "msq/repetitive.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace msq;

namespace {

const char* kAllTypes = R"(# every scale type
scale box
  min 0 0 0
  max 1 2 1
  dims 2 4 2
  material 1 0.5 2.5
end
scale implicit-fn
  preset gyroid
  period 0.5
  threshold 0.25
  bounds_min 0 0 0
  bounds_max 1 2 1
end
scale voronoi-foam
  extent_min 0 0 0
  extent_max 1 2 1
  dims 4 8 4
  beam_radius 0.03  # absolute units
  salt 18446744073709551615
  gather_ring 2
  subcells 3
  method setq1
end
scale lattice
  origin 0 0 0
  cell_size 0.125 0.25 0.125
  dims 8 8 8
  strut 0 0 0 1 1 1
  strut 0 1 0 1 0 1
  strut_radius 0.01
  strut_radius_gradient 0.001 0 0.002
  fast_distance 1
end
scale gyroid
  origin 0 0 0
  cell_size 0.1 0.1 0.1
  dims 10 20 10
  period 0.7
  threshold 0.4
  samples_per_axis 5
  subdivisions 6
end
)";

}  // namespace

TEST_CASE("model text round-trips through serialization") {
    ModelDescription d = parseModel(kAllTypes);
    REQUIRE(d.scales.size() == 5);
    CHECK(std::string(scaleTypeTag(d.scales[2])) == "voronoi-foam");
    const auto& f = std::get<FoamSpec>(d.scales[2]);
    CHECK(f.grid.cellSize == Point3{0.25, 0.25, 0.25});
    CHECK(f.salt == 18446744073709551615ULL);
    CHECK(f.method == FoamMethod::Method1);
    const auto& l = std::get<LatticeSpec>(d.scales[3]);
    CHECK(l.struts.size() == 2);
    CHECK(l.fastDistance);
    CHECK(l.radius.grad == Point3{0.001, 0, 0.002});
    ModelDescription back = parseModel(serializeModel(d));
    CHECK(back == d);
    CHECK(serializeModel(back) == serializeModel(d));
}

TEST_CASE("model files save and load") {
    auto path = std::filesystem::temp_directory_path() / "msq_model_io_test.model";
    ModelDescription d = parseModel(kAllTypes);
    saveModelFile(d, path.string());
    CHECK(loadModelFile(path.string()) == d);
    std::filesystem::remove(path);
    CHECK_THROWS(loadModelFile("/nonexistent/dir/x.model"));
}

TEST_CASE("built models answer like directly constructed scales") {
    ModelDescription d = parseModel(kAllTypes);
    MultiscaleModel m = buildModel(d);
    REQUIRE(m.size() == 5);
    CHECK(m.scale(0).typeName() == "box");
    CHECK(m.scale(1).typeName() == "implicit-fn");
    CHECK(m.scale(2).typeName() == "voronoi-foam");
    CHECK(m.scale(3).typeName() == "lattice");
    CHECK(m.scale(4).typeName() == "gyroid");
    const auto& lat = static_cast<const LatticeScale&>(m.scale(3));
    CHECK(lat.fastDistance());
    CHECK(lat.cell().struts.size() == 2);
    auto g = std::get<GyroidSpec>(d.scales[4]);
    GyroidScale direct(g.grid.grid(), GyroidCell{0.7}, ParameterField::constant(0.4), 6, 5);
    for (double t = 0.01; t < 1; t += 0.037) {
        Point3 p{t, 2 * (1 - t), 0.5 * t};
        CHECK(m.scale(4).pointMembership(p).inside == direct.pointMembership(p).inside);
    }
}

TEST_CASE("a lattice without preset or struts defaults to cross3d") {
    auto d = parseModel("scale lattice\n dims 2 2 2\nend\n");
    CHECK(std::get<LatticeSpec>(d.scales[0]).preset == "cross3d");
}

TEST_CASE("parse errors name the offending line") {
    struct Case {
        const char* text;
        int line;
    };
    for (Case c : {Case{"scale box\n  min 0 0\nend\n", 2}, Case{"scale box\n  colour red\nend\n", 2},
                   Case{"scale teapot\nend\n", 1}, Case{"min 0 0 0\n", 1}, Case{"scale box\n", 1},
                   Case{"scale box\nscale box\n", 2}, Case{"scale voronoi-foam\n method fast\nend\n", 2},
                   Case{"scale lattice\n preset octet\n strut 0 0 0 1 1 1\nend\n", 1},
                   Case{"scale box\n  max 1 x 1\nend\n", 2}, Case{"\n# only a comment\n", 2}}) {
        try {
            parseModel(c.text);
            FAIL("no error for: " << c.text);
        } catch (const ModelParseError& e) {
            CHECK_MESSAGE(e.line() == c.line, c.text);
        }
    }
}

TEST_CASE("invalid parameters are rejected when the model is built") {
    CHECK_THROWS(buildModel(parseModel("scale box\n min 1 1 1\n max 0 0 0\nend\n")));
    CHECK_THROWS(buildModel(parseModel("scale voronoi-foam\n dims 4 4 4\n cell_size 0.25 0.25 0.25\n beam_radius 0.5\nend\n")));
    CHECK_THROWS(buildModel(parseModel("scale lattice\n preset nope\nend\n")));
}

TEST_CASE("foam method override") {
    ModelDescription d = parseModel(kAllTypes);
    setFoamMethod(d, FoamMethod::Method2);
    CHECK(std::get<FoamSpec>(d.scales[2]).method == FoamMethod::Method2);
}
