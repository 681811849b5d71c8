#pragma once

#include <functional>
#include <span>

#include "hartogs/complexcore.hpp"
#include "hartogs/geometry.hpp"

namespace hartogs {

struct QuadratureConfig {
    int gauss_order = 8;        // Gauss-Legendre points per panel
    int max_subdivisions = 6;   // bisection depth per segment
    double rel_tol = 1e-10;     // refinement stop, relative to the running value
};

struct IntegralResult {
    Complex value{};
    double error_estimate = 0.0;  // last refinement difference, accumulated
    long nodes_used = 0;
};

struct Segment {
    Complex start, end;
};

struct RectangleDomain {
    double re_min, re_max, im_min, im_max;  // a < b, c < d
};

using PlanarFn = std::function<Complex(Complex)>;

// Integral of f(zeta)/(zeta - z) along the oriented segment, Gauss-Legendre
// panels bisected adaptively. Node layout is symmetric under segment
// reversal, so reversing a segment negates the result bit for bit.
IntegralResult integrate_cauchy_segment(const PlanarFn& f, Segment seg, Complex z,
                                        const QuadratureConfig& cfg = {});

// (1/2πi) times the boundary integral over the positively oriented rectangle.
IntegralResult cauchy_rectangle(const PlanarFn& f, const RectangleDomain& rect, Complex z,
                                const QuadratureConfig& cfg = {});

// (1/2πi) times the sum over the given segments, in order.
IntegralResult cauchy_segments(const PlanarFn& f, std::span<const Segment> segments,
                               Complex z, const QuadratureConfig& cfg = {});

// (1/2πi) times the boundary integral over a lattice contour. Evaluation
// points must keep a distance of h/10 from every edge.
IntegralResult cauchy_compact(const PlanarFn& f, const PolygonalContour& p, Complex z,
                              const QuadratureConfig& cfg = {});

std::vector<Segment> contour_segments(const PolygonalContour& p);

// Max over samples of the difference between the two contour integrals; both
// contours must surround the same compact set. Empty sample list gives 0.
double contour_agreement(const PlanarFn& f, const PolygonalContour& p1,
                         const PolygonalContour& p2, std::span<const Complex> samples,
                         const QuadratureConfig& cfg = {});

}  // namespace hartogs
