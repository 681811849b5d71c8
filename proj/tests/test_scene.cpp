#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hartogs/scene.hpp"

using namespace hartogs;

namespace {

const char* kPolydiscScene = R"js({
  "n": 2,
  "omega": {"kind": "polydisc", "center": [[0,0],[0,0]], "radius": 1.5},
  "hole": {"kind": "closed_polydisc", "center": [[0,0],[0,0]], "radius": 0.5},
  "i": 2,
  "function": "1/(z2-3)",
  "reference": "1/(z2-3)",
  "grid": {"counts": [5,5,3,3],
           "ranges": [[-1.2,1.2],[-1.2,1.2],[-1.2,1.2],[-1.2,1.2]]},
  "eps": 0.4,
  "step": 0.1
})js";

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream out(p);
    out << contents;
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("scenes parse with defaults and validate strictly") {
    Scene s = scene_from_json_text(kPolydiscScene, "test");
    CHECK(s.n == 2);
    CHECK(s.slot == 2);
    CHECK(s.eps == 0.4);
    CHECK(s.verify);
    CHECK(s.omega.contains(ComplexPoint{Complex(1.0, 0), Complex(1.0, 0)}));
    CHECK(s.hole.contains(ComplexPoint{Complex(0.5, 0), Complex(0.0, 0)}));
    CHECK(s.tol.grid == 1e-6);

    // unknown keys anywhere are rejected
    std::string with_unknown = kPolydiscScene;
    with_unknown.insert(with_unknown.rfind('}'), R"(, "surprise": 1)");
    CHECK_THROWS_AS(scene_from_json_text(with_unknown, "test"), SceneError);

    CHECK_THROWS_AS(scene_from_json_text("{not json", "test"), SceneError);
    CHECK_THROWS_AS(scene_from_json_text(R"js({"n": 2})js", "test"), SceneError);
}

TEST_CASE("n = 1 scenes are rejected citing the hypothesis") {
    std::string one_dim = R"js({
      "n": 1,
      "omega": {"kind": "polydisc", "center": [[0,0]], "radius": 1.0},
      "hole": {"kind": "closed_polydisc", "center": [[0,0]], "radius": 0.1},
      "function": "1/z1",
      "grid": {"counts": [3,3], "ranges": [[-1,1],[-1,1]]}
    })js";
    try {
        scene_from_json_text(one_dim, "test");
        FAIL("expected HypothesisError");
    } catch (const HypothesisError& e) {
        CHECK(std::string(e.what()).find("n >= 2") != std::string::npos);
        CHECK(exit_code_for(e) == 2);
    }
}

TEST_CASE("hole must sit inside omega") {
    std::string bad = R"js({
      "n": 2,
      "omega": {"kind": "polydisc", "center": [[0,0],[0,0]], "radius": 0.4},
      "hole": {"kind": "closed_polydisc", "center": [[0,0],[0,0]], "radius": 0.5},
      "function": "1/(z2-3)",
      "grid": {"counts": [3,3,3,3], "ranges": [[-1,1],[-1,1],[-1,1],[-1,1]]}
    })js";
    CHECK_THROWS_AS(scene_from_json_text(bad, "test"), SceneError);
}

TEST_CASE("hartogs scenes wire the figure, complement and slot 1") {
    std::string hs = R"js({
      "n": 2,
      "omega": {"kind": "hartogs_figure", "q": [0.5, 0.5]},
      "hole": {"kind": "hartogs_complement"},
      "function": "1/(z1-3)",
      "reference": "1/(z1-3)",
      "grid": {"counts": [3,3,3,3],
               "ranges": [[-0.9,0.9],[-0.9,0.9],[-0.9,0.9],[-0.9,0.9]]},
      "eps": 0.25
    })js";
    Scene s = scene_from_json_text(hs, "test");
    CHECK(s.slot == 1);
    CHECK(s.omega.bounds.radius == 1.0);
    // A contains (0.3, 0.8): |z1| <= 0.5 and 0.5 <= |z2| < 1
    CHECK(s.hole.contains(ComplexPoint{Complex(0.3, 0), Complex(0.8, 0)}));
    CHECK_FALSE(s.hole.contains(ComplexPoint{Complex(0.3, 0), Complex(0.3, 0)}));
    ComplexPoint b = scene_default_base(s);
    CHECK(std::abs(b[0]) == doctest::Approx(0.75));
}

TEST_CASE("predicate holes parse modulus inequalities") {
    std::string ps = R"js({
      "n": 2,
      "omega": {"kind": "polydisc", "center": [[0,0],[0,0]], "radius": 1.5},
      "hole": {"kind": "predicate_expr", "expr": "|z1| <= 0.5 and |z2| <= 0.5"},
      "function": "1/(z2-3)",
      "grid": {"counts": [3,3,3,3], "ranges": [[-1,1],[-1,1],[-1,1],[-1,1]]},
      "eps": 0.4
    })js";
    Scene s = scene_from_json_text(ps, "test");
    CHECK(s.hole.contains(ComplexPoint{Complex(0.4, 0), Complex(0.0, 0.4)}));
    CHECK_FALSE(s.hole.contains(ComplexPoint{Complex(0.6, 0), Complex(0, 0)}));

    std::string bad = ps;
    bad.replace(bad.find("|z1| <= 0.5 and |z2| <= 0.5"), 27, "|z3| <= 0.5 and |z2| < 0.5");
    CHECK_THROWS_AS(scene_from_json_text(bad, "test"), SceneError);
}

TEST_CASE("cmd_contour writes JSON and passes windings") {
    Scene s = scene_from_json_text(kPolydiscScene, "test");
    auto out = std::filesystem::temp_directory_path() / "hartogs_test_contour.json";
    std::ostringstream report;
    int code = cmd_contour(s, std::nullopt, out, report);
    CHECK(code == 0);

    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j.contains("h"));
    CHECK(j["loops"].size() >= 1);
    auto rep = nlohmann::json::parse(report.str());
    CHECK(rep["pass"].get<bool>());
    CHECK(rep["max_winding_dev_fiber"].get<double>() <= 1e-9);
    std::filesystem::remove(out);

    // a base outside the projection of the hole has an empty fiber
    std::ostringstream sink;
    CHECK_THROWS_AS(cmd_contour(s, ComplexPoint{Complex(0.9, 0)}, out, sink), GeometryError);
}

TEST_CASE("cmd_contour on a hartogs scene rings the q1 disc") {
    std::string hs = R"js({
      "n": 2,
      "omega": {"kind": "hartogs_figure", "q": [0.5, 0.5]},
      "hole": {"kind": "hartogs_complement"},
      "function": "1/(z1-3)",
      "grid": {"counts": [3,3,3,3],
               "ranges": [[-0.9,0.9],[-0.9,0.9],[-0.9,0.9],[-0.9,0.9]]},
      "eps": 0.2
    })js";
    Scene s = scene_from_json_text(hs, "test");
    auto out = std::filesystem::temp_directory_path() / "hartogs_test_contour_h.json";
    std::ostringstream report;
    // base with |z'| = 0.7 sits in pi^1(A); its fiber is the closed q1-disc
    int code = cmd_contour(s, ComplexPoint{Complex(0.7, 0)}, out, report);
    CHECK(code == 0);
    auto rep = nlohmann::json::parse(report.str());
    CHECK(rep["pass"].get<bool>());
    auto j = nlohmann::json::parse(slurp(out));
    // the loop must surround the disc of radius q1 = 0.5
    PolygonalContour p;
    p.h = j["h"].get<double>();
    for (const auto& lj : j["loops"]) {
        PolygonalContour::Loop loop;
        for (const auto& v : lj)
            loop.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
        p.loops.push_back(loop);
    }
    CHECK(encloses(p, Complex(0.5, 0)));
    CHECK(encloses(p, Complex(0, -0.5)));
    CHECK_FALSE(encloses(p, Complex(0.98, 0)));
    std::filesystem::remove(out);
}

TEST_CASE("cmd_extend writes a deterministic grid and summary") {
    Scene s = scene_from_json_text(kPolydiscScene, "test");
    auto out1 = std::filesystem::temp_directory_path() / "hartogs_grid1.csv";
    auto out2 = std::filesystem::temp_directory_path() / "hartogs_grid2.csv";

    std::ostringstream sum1, sum2;
    CHECK(cmd_extend(s, out1, sum1, /*no_verify=*/true, std::nullopt, 1) == 0);
    CHECK(cmd_extend(s, out2, sum2, /*no_verify=*/true, std::nullopt, 2) == 0);

    std::string csv1 = slurp(out1), csv2 = slurp(out2);
    CHECK(csv1 == csv2);  // byte-identical regardless of thread count
    CHECK(sum1.str() == sum2.str());

    CHECK(csv1.rfind("re_z1,im_z1,re_z2,im_z2,re_val,im_val,err_est,provenance,ref_dev\n",
                     0) == 0);
    auto sj = nlohmann::json::parse(sum1.str());
    CHECK(sj["pass"].get<bool>());
    CHECK(sj["max_ref_dev"].get<double>() <= 1e-6);
    CHECK(sj["rows"].get<int>() == 5 * 5 * 3 * 3);
    CHECK(sj["provenance_counts"].contains("passthrough"));

    std::filesystem::remove(out1);
    std::filesystem::remove(out2);
}

TEST_CASE("scene-level verify switch selects the fast path") {
    std::string fast = kPolydiscScene;
    fast.insert(fast.rfind('}'), R"js(, "verify": false)js");
    Scene s = scene_from_json_text(fast, "test");
    CHECK_FALSE(s.verify);

    auto out = std::filesystem::temp_directory_path() / "hartogs_grid_fast.csv";
    std::ostringstream sum;
    CHECK(cmd_extend(s, out, sum, /*no_verify=*/false, std::nullopt, 1) == 0);
    std::string csv = slurp(out);
    CHECK(csv.find("fiber_integral") != std::string::npos);
    CHECK(csv.find("glued_chain") == std::string::npos);
    std::filesystem::remove(out);
}

TEST_CASE("cmd_verify reports the property suite") {
    Scene s = scene_from_json_text(kPolydiscScene, "test");
    std::ostringstream report;
    int code = cmd_verify(s, report, std::nullopt);
    CHECK(code == 0);
    auto rj = nlohmann::json::parse(report.str());
    CHECK(rj["pass"].get<bool>());
    REQUIRE(rj["properties"].size() >= 6);
    for (const auto& p : rj["properties"]) CHECK(p["pass"].get<bool>());
}

TEST_CASE("cmd_verify aborts on a conj function before integrating") {
    std::string conj_scene = kPolydiscScene;
    conj_scene.replace(conj_scene.find("\"1/(z2-3)\""), 10, "\"conj(z1)\"");
    conj_scene.replace(conj_scene.find("\"1/(z2-3)\""), 10, "\"z1\"");  // reference
    Scene s = scene_from_json_text(conj_scene, "test");
    std::ostringstream report;
    try {
        cmd_verify(s, report, std::nullopt);
        FAIL("expected ToleranceError");
    } catch (const ToleranceError& e) {
        CHECK(exit_code_for(e) == 4);
    }
    auto rj = nlohmann::json::parse(report.str());
    REQUIRE(rj["properties"].size() == 1);  // aborted after the wirtinger check
    CHECK_FALSE(rj["properties"][0]["pass"].get<bool>());
    CHECK(rj["properties"][0]["max_residual"].get<double>() ==
          doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("separation failure surfaces as a geometric error") {
    std::string tight = kPolydiscScene;
    tight.replace(tight.find("\"eps\": 0.4"), 10, "\"eps\": 1.2");
    Scene s = scene_from_json_text(tight, "test");
    std::ostringstream report;
    try {
        cmd_verify(s, report, std::nullopt);
        FAIL("expected GeometryError");
    } catch (const GeometryError& e) {
        CHECK(exit_code_for(e) == 3);
    }
    // the report still carries the failed property and nothing after it
    auto rj = nlohmann::json::parse(report.str());
    bool saw_contour = false;
    for (const auto& p : rj["properties"])
        if (p["name"] == "contour_construction") {
            saw_contour = true;
            CHECK_FALSE(p["pass"].get<bool>());
        }
    CHECK(saw_contour);
}

TEST_CASE("exit codes map exception types") {
    CHECK(exit_code_for(SceneError("x")) == 2);
    CHECK(exit_code_for(ParseError("x", 0)) == 2);
    CHECK(exit_code_for(HypothesisError("x")) == 2);
    CHECK(exit_code_for(GeometryError("x")) == 3);
    CHECK(exit_code_for(ProximityError("x")) == 3);
    CHECK(exit_code_for(ToleranceError("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 5);
}

TEST_CASE("load_scene reads files and reports missing ones") {
    auto p = temp_file("hartogs_scene_ok.json", kPolydiscScene);
    Scene s = load_scene(p);
    CHECK(s.n == 2);
    std::filesystem::remove(p);
    CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), SceneError);
}
