#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "hartogs/expr.hpp"
#include "hartogs/quadrature.hpp"

using namespace hartogs;

namespace {

const auto kOne = [](Complex) { return Complex(1.0, 0.0); };
const auto kZero = [](Complex) { return Complex(0.0, 0.0); };
const auto kSquare = [](Complex z) { return z * z; };
const auto kExp = [](Complex z) { return std::exp(z); };
const auto kInv = [](Complex z) {
    if (z == Complex(0.0, 0.0)) throw EvaluationError("pole at 0");
    return 1.0 / z;
};

PolygonalContour contour_around_origin(double k_radius, double u_radius, double eps) {
    PlanarCompactSet k{[k_radius](Complex w) { return std::abs(w) <= k_radius; },
                       Box{-k_radius, k_radius, -k_radius, k_radius}};
    PlanarOpenSet u{[u_radius](Complex w) { return std::abs(w) < u_radius; },
                    Box{-u_radius, u_radius, -u_radius, u_radius}};
    return build_lattice_contour(k, u, eps);
}

// Residue-calculus oracle for f(zeta) = 1/(zeta - pole): the kernel pole at z
// and the pole of f each contribute according to the combinatorial winding.
Complex simple_pole_oracle(const PolygonalContour& p, Complex pole, Complex z) {
    double wp = winding_number(p, pole);
    double wz = winding_number(p, z);
    return (wp - wz) / (pole - z);
}

}  // namespace

TEST_CASE("segment integral has the closed-form antiderivative value") {
    // integral of 1/(zeta - i) from -1 to 1 = log(1-i) - log(-1-i) = i*pi/2
    IntegralResult r = integrate_cauchy_segment(kOne, {Complex(-1, 0), Complex(1, 0)},
                                                Complex(0, 1));
    Complex oracle = std::log(Complex(1, -1)) - std::log(Complex(-1, -1));
    CHECK(std::abs(oracle - Complex(0.0, std::numbers::pi / 2)) < 1e-15);
    CHECK(std::abs(r.value - Complex(0.0, std::numbers::pi / 2)) < 1e-12);
    CHECK(r.nodes_used > 0);
    CHECK(r.error_estimate < 1e-10);

    IntegralResult z0 = integrate_cauchy_segment(kZero, {Complex(-1, 0), Complex(1, 0)},
                                                 Complex(0, 1));
    CHECK(z0.value == Complex(0.0, 0.0));

    CHECK_THROWS_AS(integrate_cauchy_segment(kOne, {Complex(-1, 0), Complex(1, 0)},
                                             Complex(0, 0)),
                    ProximityError);  // z at segment midpoint
}

TEST_CASE("random segments match the log antiderivative") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    int used = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Segment seg{Complex(uni(rng), uni(rng)), Complex(uni(rng), uni(rng))};
        Complex z(uni(rng), uni(rng));
        if (distance_to_segment(z, seg.start, seg.end) < 0.3) continue;
        if (std::abs(seg.end - seg.start) < 0.1) continue;
        // principal log telescoped along subdivisions stays on one branch
        Complex oracle = 0.0;
        const int m = 64;
        for (int j = 0; j < m; ++j) {
            Complex a = seg.start + (seg.end - seg.start) * (static_cast<double>(j) / m);
            Complex b = seg.start + (seg.end - seg.start) * (static_cast<double>(j + 1) / m);
            oracle += std::log((b - z) / (a - z));
        }
        IntegralResult r = integrate_cauchy_segment(kOne, seg, z);
        CHECK(std::abs(r.value - oracle) < 1e-10);
        ++used;
    }
    CHECK(used >= 30);
}

TEST_CASE("rectangle dichotomy") {
    RectangleDomain r{-1, 1, -1, 1};
    CHECK(std::abs(cauchy_rectangle(kOne, r, Complex(0, 0)).value - 1.0) <= 1e-10);

    Complex at(0.5, 0.5);
    CHECK(std::abs(cauchy_rectangle(kSquare, r, at).value - Complex(0.0, 0.5)) <= 1e-10);
    CHECK(std::abs(cauchy_rectangle(kExp, r, at).value - std::exp(at)) <= 1e-10);

    CHECK(std::abs(cauchy_rectangle(kOne, r, Complex(3, 0)).value) <= 1e-10);
    CHECK(std::abs(cauchy_rectangle(kExp, r, Complex(-2, 1.7)).value) <= 1e-10);

    CHECK_THROWS_AS(cauchy_rectangle(kOne, r, Complex(1, 0)), ProximityError);
    CHECK_THROWS_AS(cauchy_rectangle(kOne, RectangleDomain{1, -1, 0, 1}, Complex(0, 0)),
                    Error);
}

TEST_CASE("two abutting rectangles glue into one") {
    RectangleDomain left{-1, 0, -1, 1};
    RectangleDomain right{0, 1, -1, 1};
    RectangleDomain whole{-1, 1, -1, 1};
    // interior points off the shared side, plus points 1e-3 away from it
    for (Complex z : {Complex(-0.5, 0.25), Complex(0.4, -0.6), Complex(-1e-3, 0.2),
                      Complex(1e-3, 0.2)}) {
        Complex glued = cauchy_rectangle(kExp, left, z).value +
                        cauchy_rectangle(kExp, right, z).value;
        Complex direct = cauchy_rectangle(kExp, whole, z).value;
        CHECK(std::abs(glued - direct) <= 2e-10);
        CHECK(std::abs(direct - std::exp(z)) <= 1e-9);
    }
}

TEST_CASE("integral is linear in the integrand") {
    RectangleDomain r{-1, 1, -1, 1};
    Complex alpha(2.0, -1.0), beta(0.5, 3.0);
    auto combo = [&](Complex z) { return alpha * std::exp(z) + beta * z * z; };
    for (Complex z : {Complex(0.2, 0.3), Complex(-0.7, 0.1), Complex(2.5, 0)}) {
        Complex lhs = cauchy_rectangle(combo, r, z).value;
        Complex rhs = alpha * cauchy_rectangle(kExp, r, z).value +
                      beta * cauchy_rectangle(kSquare, r, z).value;
        double scale = std::max(1.0, std::abs(lhs));
        CHECK(std::abs(lhs - rhs) / scale <= 1e-12);
    }
}

TEST_CASE("flipping every segment negates the sum exactly") {
    PolygonalContour p = contour_around_origin(0.1, 1.0, 0.4);
    std::vector<Segment> fwd = contour_segments(p);
    std::vector<Segment> rev;
    for (const Segment& s : fwd) rev.push_back({s.end, s.start});

    for (Complex z : {Complex(0.02, -0.01), Complex(0.7, 0.55)}) {
        IntegralResult a = cauchy_segments(kExp, fwd, z);
        IntegralResult b = cauchy_segments(kExp, rev, z);
        CHECK(a.value.real() == -b.value.real());
        CHECK(a.value.imag() == -b.value.imag());
        CHECK(a.nodes_used == b.nodes_used);
    }
}

TEST_CASE("contour dichotomy for functions holomorphic on all of U") {
    PolygonalContour p = contour_around_origin(0.1, 1.0, 0.4);
    IntegralResult inside = cauchy_compact(kExp, p, Complex(0.05, 0));
    CHECK(std::abs(inside.value - std::exp(Complex(0.05, 0))) <= 1e-9);
    IntegralResult winding = cauchy_compact(kOne, p, Complex(0.02, 0.03));
    CHECK(std::abs(winding.value - 1.0) <= 1e-9);
}

TEST_CASE("function holomorphic only off K reproduces residues, not f") {
    PolygonalContour p = contour_around_origin(0.1, 1.0, 0.4);
    // z outside the closure: only the pole of f at 0 contributes
    Complex z(0.5, 0.0);
    REQUIRE_FALSE(encloses(p, z));
    IntegralResult r = cauchy_compact(kInv, p, z);
    CHECK(std::abs(r.value - Complex(-2.0, 0.0)) <= 1e-8);
    CHECK(std::abs(r.value - simple_pole_oracle(p, 0.0, z)) <= 1e-8);
    // the dichotomy's second case (0 outside) fails for this f
    CHECK(std::abs(r.value) >= 0.5);

    // z inside P: the kernel pole cancels the f pole
    Complex zi(0.25, 0.2);
    REQUIRE(encloses(p, zi));
    IntegralResult ri = cauchy_compact(kInv, p, zi);
    CHECK(std::abs(ri.value - simple_pole_oracle(p, 0.0, zi)) <= 1e-8);
    CHECK(std::abs(ri.value) <= 1e-8);
}

TEST_CASE("contour agreement across lattice resolutions") {
    PolygonalContour p1 = contour_around_origin(0.1, 1.0, 0.4);
    PolygonalContour p2 = contour_around_origin(0.1, 1.0, 0.2);

    std::vector<Complex> interior, exterior;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> uni(-0.95, 0.95);
    while (interior.size() < 20 || exterior.size() < 20) {
        Complex w(uni(rng), uni(rng));
        if (std::abs(w) <= 0.12) continue;  // off K
        if (distance_to_contour(p1, w) <= p1.h / 8.0) continue;
        if (distance_to_contour(p2, w) <= p2.h / 8.0) continue;
        bool in1 = encloses(p1, w), in2 = encloses(p2, w);
        if (in1 && in2 && interior.size() < 20) interior.push_back(w);
        if (!in1 && !in2 && exterior.size() < 20 && std::abs(w) < 0.95) exterior.push_back(w);
    }

    CHECK(contour_agreement(kInv, p1, p2, interior) <= 1e-8);
    CHECK(contour_agreement(kInv, p1, p2, exterior) <= 1e-8);
    CHECK(contour_agreement(kExp, p1, p2, interior) <= 1e-9);  // entire f
    CHECK(contour_agreement(kExp, p1, p2, std::vector<Complex>{}) == 0.0);  // vacuous

    for (Complex z : interior) {
        IntegralResult r = cauchy_compact(kInv, p1, z);
        CHECK(std::abs(r.value - simple_pole_oracle(p1, 0.0, z)) <= 1e-8);
    }
    for (Complex z : exterior) {
        IntegralResult r = cauchy_compact(kInv, p2, z);
        CHECK(std::abs(r.value - (-1.0 / z)) <= 1e-8);
    }
}

TEST_CASE("the integral is a holomorphic function of z inside P") {
    PolygonalContour p = contour_around_origin(0.15, 1.2, 0.35);
    auto as_fn = [&](const ComplexPoint& zp) {
        return cauchy_compact(kInv, p, zp[0]).value;
    };
    for (Complex z : {Complex(0.05, 0.02), Complex(-0.1, 0.12), Complex(0.55, -0.5)}) {
        if (distance_to_contour(p, z) <= p.h / 5.0) continue;
        double res = wirtinger_residual(std::function<Complex(const ComplexPoint&)>(as_fn),
                                        ComplexPoint{z}, 1, 1e-5);
        CHECK(res <= 1e-6);
    }
}

TEST_CASE("singularity at a quadrature node names the node") {
    PolygonalContour p = contour_around_origin(0.1, 1.0, 0.4);
    auto singular = [](Complex zeta) {
        // singular on a circle the contour must cross
        Complex d = zeta - Complex(0.3828, 0.0);
        if (std::abs(d) < 1e-3) throw EvaluationError("manufactured singularity");
        return 1.0 / d;
    };
    // may or may not hit a node depending on the lattice; evaluate defensively
    try {
        cauchy_compact(singular, p, Complex(0.0, 0.0));
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("quadrature node") != std::string::npos);
    }
}

TEST_CASE("quadrature configuration is validated") {
    CHECK_THROWS_AS(integrate_cauchy_segment(kOne, {Complex(0, 0), Complex(1, 0)},
                                             Complex(0, 1), QuadratureConfig{1, 6, 1e-10}),
                    Error);
    CHECK_THROWS_AS(integrate_cauchy_segment(kOne, {Complex(0, 0), Complex(1, 0)},
                                             Complex(0, 1), QuadratureConfig{8, 6, 0.0}),
                    Error);
}
