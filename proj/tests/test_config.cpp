#include <doctest.h>

#include "ulamsteer/config.hpp"
#include "ulamsteer/error.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace ulamsteer;
using nlohmann::json;

namespace {

json base() {
    return json::parse(R"({
      "system": {"name": "double_integrator"},
      "domain": {"lower": [0, 0], "upper": [1, 1], "resolution": [8, 8]},
      "controls": {"lower": [-0.25], "upper": [0.25], "counts": [3]},
      "horizon": 4,
      "initial": {"type": "dirac", "point": [0, 0]},
      "target": {"type": "uniform"}
    })");
}

RunConfig parse(const json& j) { return parse_config(j.dump()); }

} // namespace

TEST_CASE("defaults") {
    const auto c = parse(base());
    CHECK(c.quadrature == 8);
    CHECK(c.cost == "quadratic");
    CHECK(c.tolerances.eps_mass == 1e-12);
    CHECK(c.tolerances.terminal == 1e-6);
    CHECK(c.system.drift == 0.15);
    CHECK(c.horizon == 4);
}

TEST_CASE("unknown keys are rejected at every level") {
    for (const char* path : {"/extra", "/system/speed", "/domain/cells", "/initial/mass", "/target/oops"}) {
        json j = base();
        j[json::json_pointer(path)] = 1;
        CHECK_THROWS_AS(parse(j), ConfigError);
    }
    json t = base();
    t["tolerances"] = {{"lp", 1e-8}, {"bogus", 1}};
    CHECK_THROWS_AS(parse(t), ConfigError);
    json r = base();
    r["rollout"] = {{"agents", 10}, {"speed", 1}};
    CHECK_THROWS_AS(parse(r), ConfigError);
}

TEST_CASE("names and shapes must resolve") {
    json a = base();
    a["system"]["name"] = "pendulum";
    CHECK_THROWS_AS(parse(a), ConfigError);
    json b = base();
    b["cost"] = "cubic";
    CHECK_THROWS_AS(parse(b), ConfigError);
    json c = base();
    c["horizon"] = 0;
    CHECK_THROWS_AS(parse(c), ConfigError);
    json d = base();
    d["domain"]["resolution"] = json::array({8});
    CHECK_THROWS_AS(parse(d), ConfigError);
    json e = base();
    e["controls"]["lower"] = json::array({1.0});
    CHECK_THROWS_AS(parse(e), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);

    json g = base();
    g["system"] = {{"name", "double_gyre"}, {"A", 0.1}};
    g["domain"] = {{"lower", {0, 0}}, {"upper", {2, 1}}, {"resolution", {4, 2}}};
    g["controls"] = {{"lower", {-1, 0}}, {"upper", {1, 6.28}}, {"counts", {3, 8}}};
    const auto cg = parse(g);
    CHECK(cg.system.name == "gyre_unicycle");
    CHECK(cg.system.gyre.A == 0.1);
    CHECK(make_system(cg)->name() == "gyre_unicycle");
    CHECK(make_controls(cg).size() == 24);
}

TEST_CASE("canonical text and hash follow the content") {
    const auto a = parse(base());
    const auto b = parse_config(base().dump(4));
    CHECK(a.hash() == b.hash());
    json j = base();
    j["horizon"] = 5;
    CHECK(parse(j).hash() != a.hash());
}

TEST_CASE("measure projection") {
    Partition p({0, 0}, {1, 1}, {8, 8});
    MeasureSpec dirac{.type = "dirac", .point = {0, 0}};
    const auto d = project_measure(dirac, p, 8);
    CHECK(d[0] == 1.0);
    CHECK(d.total() == 1.0);

    dirac.point = {1.2, 0.5};
    CHECK_THROWS_AS(project_measure(dirac, p, 8), ConfigError);

    MeasureSpec uni{.type = "uniform"};
    const auto u = project_measure(uni, p, 8);
    for (std::size_t i = 0; i < 64; ++i) CHECK(u[i] == doctest::Approx(1.0 / 64).epsilon(1e-14));

    MeasureSpec sub{.type = "uniform", .box = Box{{0, 0}, {0.5, 0.25}}};
    const auto s = project_measure(sub, p, 8);
    CHECK(std::abs(s.total() - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < 64; ++i) {
        const auto m = p.multi_index(i);
        CHECK(s[i] == doctest::Approx(m[0] < 4 && m[1] < 2 ? 1.0 / 8 : 0.0).epsilon(1e-14));
    }

    MeasureSpec mix{.type = "gaussian_mixture",
                    .centers = {{0.8, 0.1}, {0.8, 0.8}},
                    .weights = {0.5, 0.5},
                    .sigmas = {0.05, 0.05},
                    .truncate_sigmas = 3.0};
    Partition fine({0, 0}, {1, 1}, {32, 32});
    const auto g = project_measure(mix, fine, 8);
    CHECK(std::abs(g.total() - 1.0) <= 1e-12);
    CHECK_NOTHROW(g.validate());
    // Two separated blobs with their peaks at the centre cells.
    const auto c1 = fine.locate(std::vector<double>{0.8, 0.1});
    const auto c2 = fine.locate(std::vector<double>{0.8, 0.8});
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < fine.size(); ++i)
        if (g[i] > g[argmax]) argmax = i;
    CHECK((argmax == c1 || argmax == c2));
    CHECK(g[fine.locate(std::vector<double>{0.8, 0.45})] == 0.0);
    CHECK(g[fine.locate(std::vector<double>{0.1, 0.5})] == 0.0);

    mix.sigmas = {0.05, 0.0};
    CHECK_THROWS_AS(project_measure(mix, fine, 8), ConfigError);

    MeasureSpec ex{.type = "explicit", .weights = std::vector<double>(64, 1.0 / 64)};
    CHECK(project_measure(ex, p, 1).weights == ex.weights);
    ex.weights[0] += 0.01;
    CHECK_THROWS_AS(project_measure(ex, p, 1), ConfigError);
    ex.weights.pop_back();
    CHECK_THROWS_AS(project_measure(ex, p, 1), ConfigError);
}

TEST_CASE("explicit weights from a file") {
    const auto dir = std::filesystem::temp_directory_path() / "ulamsteer_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "w.txt");
        f << "# weights\n0.25 0.25\n0.5\n0\n";
    }
    Partition p({0}, {1}, {4});
    MeasureSpec ex{.type = "explicit", .file = "w.txt"};
    const auto m = project_measure(ex, p, 1, dir.string());
    CHECK(m.weights == std::vector<double>{0.25, 0.25, 0.5, 0.0});
    ex.file = "missing.txt";
    CHECK_THROWS_AS(project_measure(ex, p, 1, dir.string()), ConfigError);
}
