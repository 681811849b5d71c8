#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "hartogs/geometry.hpp"
#include "hartogs/quadrature.hpp"

using namespace hartogs;

namespace {

PlanarCompactSet disc(Complex c, double r) {
    return PlanarCompactSet{[c, r](Complex w) { return std::abs(w - c) <= r; },
                            Box{c.real() - r, c.real() + r, c.imag() - r, c.imag() + r}};
}

PlanarOpenSet open_disc(Complex c, double r) {
    return PlanarOpenSet{[c, r](Complex w) { return std::abs(w - c) < r; },
                         Box{c.real() - r, c.real() + r, c.imag() - r, c.imag() + r}};
}

const auto kOne = [](Complex) { return Complex(1.0, 0.0); };

}  // namespace

TEST_CASE("fibers of a closed polydisc are closed discs") {
    RemovableSetSpec a = closed_polydisc_set(Polydisc(ComplexPoint::zero(2), 0.5));

    PlanarCompactSet f0 = fiber(a, 2, ComplexPoint{Complex(0, 0)});
    CHECK(f0.contains(Complex(0.5, 0)));           // closed: boundary included
    CHECK(f0.contains(Complex(0.3, 0.3)));         // sup-norm, not euclidean
    CHECK_FALSE(f0.contains(Complex(0.51, 0)));
    CHECK_FALSE(planar_set_empty_on_grid(f0));

    PlanarCompactSet fout = fiber(a, 2, ComplexPoint{Complex(0.9, 0)});
    CHECK(planar_set_empty_on_grid(fout));  // reported, not an error

    CHECK_THROWS_AS(fiber(a, 3, ComplexPoint{Complex(0, 0)}), Error);
    CHECK_THROWS_AS(fiber(a, 2, ComplexPoint{Complex(0, 0), Complex(0, 0)}), Error);
}

TEST_CASE("hartogs figure membership and complement fibers") {
    HartogsFigure hf = hartogs_figure({0.5, 0.5});
    CHECK(hf.slot == 1);

    CHECK(hf.figure.contains(ComplexPoint{Complex(0.7, 0), Complex(0.9, 0)}));   // |z1| > q1
    CHECK(hf.figure.contains(ComplexPoint{Complex(0.3, 0), Complex(0.3, 0)}));   // |z2| < q2
    CHECK_FALSE(hf.figure.contains(ComplexPoint{Complex(0.3, 0), Complex(0.8, 0)}));
    CHECK_FALSE(hf.figure.contains(ComplexPoint{Complex(1.1, 0), Complex(0, 0)}));

    // the fiber of the complement over z' with q2 <= |z2| < 1 is the closed
    // disc of radius q1
    PlanarCompactSet f = fiber(hf.complement, 1, ComplexPoint{Complex(0.7, 0)});
    CHECK(f.contains(Complex(0.5, 0)));
    CHECK(f.contains(Complex(0, 0)));
    CHECK_FALSE(f.contains(Complex(0.50001, 0)));
    CHECK(planar_set_empty_on_grid(fiber(hf.complement, 1, ComplexPoint{Complex(0.2, 0)})));

    CHECK_THROWS_AS(hartogs_figure({0.5}), Error);
    CHECK_THROWS_AS(hartogs_figure({0.5, 1.0}), Error);
    CHECK_THROWS_AS(hartogs_figure({0.0, 0.5}), Error);
}

TEST_CASE("projection identity of the hartogs complement") {
    // pi^1(A) is exactly the unit polydisc minus the small one in the
    // remaining coordinates, so together they fill the unit polydisc
    HartogsFigure hf = hartogs_figure({0.5, 0.5});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        Complex zp(uni(rng), uni(rng));
        if (!(std::abs(zp) < 1.0)) continue;
        bool in_proj =
            !planar_set_empty_on_grid(fiber(hf.complement, 1, ComplexPoint{zp}), 32);
        bool in_small = std::abs(zp) < 0.5;
        CHECK(in_proj == !in_small);
    }
}

TEST_CASE("trace_loops walks squares and rejects bad inputs") {
    // single counterclockwise square
    std::vector<GridEdge> sq = {
        {{0, 0}, {1, 0}}, {{1, 0}, {1, 1}}, {{1, 1}, {0, 1}}, {{0, 1}, {0, 0}}};
    auto loops = trace_loops(sq);
    REQUIRE(loops.size() == 1);
    CHECK(loops[0].size() == 4);

    // two disjoint squares
    std::vector<GridEdge> two = sq;
    for (const GridEdge& e : sq)
        two.push_back({{e.from.x + 5, e.from.y}, {e.to.x + 5, e.to.y}});
    CHECK(trace_loops(two).size() == 2);

    // dangling edge: in/out degrees cannot balance
    std::vector<GridEdge> dangling = sq;
    dangling.push_back({{7, 7}, {8, 7}});
    CHECK_THROWS_AS(trace_loops(dangling), GeometryError);

    // non-unit edge
    CHECK_THROWS_AS(trace_loops({{{0, 0}, {2, 0}}}), GeometryError);

    // checkerboard vertex: left-turn pairing keeps the two loops separate
    std::vector<GridEdge> checker;
    auto square_at = [&](std::int64_t x, std::int64_t y) {
        checker.push_back({{x, y}, {x + 1, y}});
        checker.push_back({{x + 1, y}, {x + 1, y + 1}});
        checker.push_back({{x + 1, y + 1}, {x, y + 1}});
        checker.push_back({{x, y + 1}, {x, y}});
    };
    square_at(0, 0);
    square_at(1, 1);  // touches (1,1) diagonally
    auto cloops = trace_loops(checker);
    REQUIRE(cloops.size() == 2);
    CHECK(cloops[0].size() == 4);
    CHECK(cloops[1].size() == 4);
}

TEST_CASE("lattice contour around a small disc") {
    PlanarCompactSet k = disc(0.0, 0.1);
    PlanarOpenSet u = open_disc(0.0, 1.0);
    PolygonalContour p = build_lattice_contour(k, u, 0.4);

    CHECK(p.h == doctest::Approx(0.4 * std::sqrt(2.0) / 2.0));
    REQUIRE(p.loops.size() == 1);

    // combinatorial winding: 1 on K, 0 far outside
    CHECK(winding_number(p, Complex(0, 0)) == 1);
    CHECK(winding_number(p, Complex(0.05, -0.05)) == 1);
    CHECK(winding_number(p, Complex(0.9, 0)) == 0);

    // quadrature winding oracle
    IntegralResult w1 = cauchy_compact(kOne, p, Complex(0, 0));
    CHECK(std::abs(w1.value - 1.0) <= 1e-9);
    IntegralResult w0 = cauchy_compact(kOne, p, Complex(0.6, 0.6));
    CHECK(std::abs(w0.value) <= 1e-9);

    // every edge is axis-aligned with length h (up to a rounding ulp in the
    // lattice coordinates), loops close
    for (const auto& loop : p.loops) {
        REQUIRE(loop.vertices.size() >= 4);
        for (std::size_t i = 0; i < loop.vertices.size(); ++i) {
            Complex a = loop.vertices[i];
            Complex b = loop.vertices[(i + 1) % loop.vertices.size()];
            bool horizontal =
                a.imag() == b.imag() && std::abs(std::abs(a.real() - b.real()) - p.h) < 1e-14;
            bool vertical =
                a.real() == b.real() && std::abs(std::abs(a.imag() - b.imag()) - p.h) < 1e-14;
            CHECK((horizontal || vertical));
        }
        CHECK(loop.signed_area > 0.0);
    }
    CHECK(p.total_length() == doctest::Approx(p.edge_count() * p.h));
}

TEST_CASE("two components produce two loops with the right windings") {
    PlanarCompactSet k{[](Complex w) {
                           return std::abs(w - Complex(0.5, 0)) <= 0.05 ||
                                  std::abs(w + Complex(0.5, 0)) <= 0.05;
                       },
                       Box{-0.55, 0.55, -0.05, 0.05}};
    PlanarOpenSet u = open_disc(0.0, 1.0);
    PolygonalContour p = build_lattice_contour(k, u, 0.2);
    CHECK(p.loops.size() == 2);

    IntegralResult right = cauchy_compact(kOne, p, Complex(0.5, 0));
    IntegralResult left = cauchy_compact(kOne, p, Complex(-0.5, 0));
    CHECK(std::abs(right.value - 1.0) <= 1e-9);
    CHECK(std::abs(left.value - 1.0) <= 1e-9);

    // each loop alone winds once about its own center, not the other
    PolygonalContour only_first{p.h, {p.loops[0]}};
    int w_r = winding_number(only_first, Complex(0.5, 0));
    int w_l = winding_number(only_first, Complex(-0.5, 0));
    CHECK(w_r + w_l == 1);  // exactly one of the centers is inside

    double area = 0.0;
    for (const auto& loop : p.loops) area += loop.signed_area;
    CHECK(area > 0.0);
}

TEST_CASE("an annulus K produces an inner loop with the right windings") {
    // occupied cells form a ring; the cavity survives the neighbor ring, so
    // the boundary has an outer counterclockwise and an inner clockwise loop
    PlanarCompactSet k{[](Complex w) {
                           double r = std::abs(w);
                           return r >= 0.3 && r <= 0.45;
                       },
                       Box{-0.45, 0.45, -0.45, 0.45}};
    PlanarOpenSet u = open_disc(0.0, 1.0);
    PolygonalContour p = build_lattice_contour(k, u, 0.15);

    REQUIRE(p.loops.size() >= 2);
    bool has_negative = false, has_positive = false;
    double area_sum = 0.0;
    for (const auto& loop : p.loops) {
        has_negative = has_negative || loop.signed_area < 0.0;
        has_positive = has_positive || loop.signed_area > 0.0;
        area_sum += loop.signed_area;
    }
    CHECK(has_positive);
    CHECK(has_negative);  // the inner loop runs clockwise
    CHECK(area_sum > 0.0);

    // dichotomy: 1 on K, 0 in the cavity, 0 outside; combinatorial and
    // integral windings agree
    for (Complex w : {Complex(0.375, 0), Complex(0, -0.4), Complex(-0.35, 0.13)}) {
        REQUIRE(k.contains(w));
        CHECK(winding_number(p, w) == 1);
        CHECK(std::abs(cauchy_compact(kOne, p, w).value - 1.0) <= 1e-9);
    }
    CHECK(winding_number(p, Complex(0, 0)) == 0);
    CHECK(std::abs(cauchy_compact(kOne, p, Complex(0, 0)).value) <= 1e-9);
    CHECK(winding_number(p, Complex(0.8, 0.1)) == 0);
    CHECK(std::abs(cauchy_compact(kOne, p, Complex(0.8, 0.1)).value) <= 1e-9);
}

TEST_CASE("separation check failure is a hard error") {
    PlanarCompactSet k = disc(0.0, 0.9);
    PlanarOpenSet u = open_disc(0.0, 1.0);
    CHECK_THROWS_AS(build_lattice_contour(k, u, 0.5), GeometryError);  // 0.9 + 0.5 > 1

    PlanarCompactSet empty{[](Complex) { return false; }, Box{-1, 1, -1, 1}};
    CHECK_THROWS_AS(build_lattice_contour(empty, u, 0.1), GeometryError);
}

TEST_CASE("halving eps refines the contour without losing K") {
    PlanarCompactSet k = disc(Complex(0.05, -0.1), 0.22);
    PlanarOpenSet u = open_disc(0.0, 1.2);
    const double eps = 0.3;
    PolygonalContour coarse = build_lattice_contour(k, u, eps);
    PolygonalContour fine = build_lattice_contour(k, u, eps / 2.0);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-1.2, 1.2);
    for (int trial = 0; trial < 800; ++trial) {
        Complex w(uni(rng), uni(rng));
        if (k.contains(w)) {
            CHECK(encloses(coarse, w));
            CHECK(encloses(fine, w));
        }
        if (encloses(fine, w))
            CHECK((encloses(coarse, w) || distance_to_contour(coarse, w) <= eps));
    }
}

TEST_CASE("combinatorial and integral winding agree at random safe points") {
    PlanarCompactSet k = disc(0.0, 0.3);
    PlanarOpenSet u = open_disc(0.0, 1.3);
    PolygonalContour p = build_lattice_contour(k, u, 0.25);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-1.1, 1.1);
    int used = 0;
    for (int trial = 0; trial < 120 && used < 40; ++trial) {
        Complex w(uni(rng), uni(rng));
        if (distance_to_contour(p, w) <= p.h / 8.0) continue;
        IntegralResult r = cauchy_compact(kOne, p, w);
        CHECK(std::abs(r.value - static_cast<double>(winding_number(p, w))) <= 1e-9);
        ++used;
    }
    CHECK(used == 40);
}

TEST_CASE("contour serializes to the documented JSON shape") {
    PlanarCompactSet k = disc(0.0, 0.1);
    PlanarOpenSet u = open_disc(0.0, 1.0);
    PolygonalContour p = build_lattice_contour(k, u, 0.4);

    nlohmann::json j = nlohmann::json::parse(contour_to_json(p));
    REQUIRE(j.contains("h"));
    REQUIRE(j.contains("loops"));
    CHECK(j["h"].get<double>() == p.h);
    REQUIRE(j["loops"].size() == p.loops.size());
    const auto& loop = j["loops"][0];
    REQUIRE(loop.size() == p.loops[0].vertices.size());
    CHECK(loop[0][0].get<double>() == p.loops[0].vertices[0].real());
    CHECK(loop[0][1].get<double>() == p.loops[0].vertices[0].imag());
}
