#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hartogs/complexcore.hpp"

namespace hartogs {

// Axis-aligned rectangle in the plane, used as a bounding box.
struct Box {
    double re_min, re_max, im_min, im_max;

    bool contains(Complex z) const {
        return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min &&
               z.imag() <= im_max;
    }
    double width() const { return re_max - re_min; }
    double height() const { return im_max - im_min; }
};

// Compact planar set given by a closed-semantics membership predicate plus a
// bounding box. Predicates stay exact; only the contour build discretizes.
struct PlanarCompactSet {
    std::function<bool(Complex)> contains;
    Box bounds;
};

// Open planar set (the ambient U of the contour construction).
struct PlanarOpenSet {
    std::function<bool(Complex)> contains;
    Box bounds;
};

// Omega: a domain in C^n with a membership predicate and a bounding polydisc.
struct DomainSpec {
    int n;
    std::function<bool(const ComplexPoint&)> contains;
    Polydisc bounds;
};

// A: the set to extend through. Closed-set semantics; fibers are expected to
// be compact (declared by the caller, spot-checked by sampling).
struct RemovableSetSpec {
    int n;
    std::function<bool(const ComplexPoint&)> contains;
    Polydisc bounds;
    bool fibers_compact = true;
};

DomainSpec polydisc_domain(const Polydisc& d);
RemovableSetSpec closed_polydisc_set(const Polydisc& d);

// Closed, oriented, axis-aligned polygonal loops bounding a lattice-built
// open set P. Every segment has length exactly h; consecutive vertices of a
// loop differ in one coordinate by h, and the last vertex closes to the first.
struct PolygonalContour {
    struct Loop {
        std::vector<Complex> vertices;  // traversal order
        double signed_area = 0.0;
    };
    double h = 0.0;
    std::vector<Loop> loops;

    std::size_t edge_count() const;
    double total_length() const;
};

// pi_i(A_i(z')): the planar fiber of A over the base point zp (dimension n-1)
// in coordinate slot. May be empty; emptiness is reported, not an error.
PlanarCompactSet fiber(const RemovableSetSpec& a, int slot, const ComplexPoint& zp);

bool planar_set_empty_on_grid(const PlanarCompactSet& k, int samples_per_axis = 32);

// The Hartogs figure H(q_1..q_n) inside the unit polydisc, together with its
// complement A = unit polydisc minus H and the slot for which the fibers of A
// are closed discs of radius q_1.
struct HartogsFigure {
    DomainSpec figure;
    RemovableSetSpec complement;
    int slot;  // always 1
};
HartogsFigure hartogs_figure(const std::vector<double>& q);

// Lattice vertices and directed unit edges in integer grid coordinates.
struct GridPoint {
    std::int64_t x = 0, y = 0;
    bool operator==(const GridPoint&) const = default;
    auto operator<=>(const GridPoint&) const = default;
};
struct GridEdge {
    GridPoint from, to;
    bool operator==(const GridEdge&) const = default;
    auto operator<=>(const GridEdge&) const = default;
};

// Partitions a balanced directed edge set into closed loops. At a vertex with
// two incoming and two outgoing edges each incoming edge continues along the
// outgoing edge turning left, which keeps the enclosed region on the loop's
// left and every loop simple.
std::vector<std::vector<GridPoint>> trace_loops(std::vector<GridEdge> edges);

// Builds the boundary of a union of lattice squares covering k inside u:
// cell size eps*sqrt(2)/2, all cells meeting k (3x3 sub-grid test) plus one
// ring of neighbors, boundary sides oriented so every selected square is
// positively oriented and shared sides cancel.
PolygonalContour build_lattice_contour(const PlanarCompactSet& k, const PlanarOpenSet& u,
                                       double eps);

// Combinatorial winding number of the contour about z (ray crossings; no
// quadrature). The test suites pair this against the integral of 1/(zeta-z).
int winding_number(const PolygonalContour& p, Complex z);
bool encloses(const PolygonalContour& p, Complex z);

double distance_to_segment(Complex z, Complex a, Complex b);
double distance_to_contour(const PolygonalContour& p, Complex z);

// { "h": ..., "loops": [[[re,im],...],...] } with vertices in traversal order.
std::string contour_to_json(const PolygonalContour& p);

}  // namespace hartogs
