#include "hartogs/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "hartogs/format.hpp"

namespace hartogs {

namespace {

void validate(const QuadratureConfig& cfg) {
    if (cfg.gauss_order < 2) throw Error("gauss_order must be >= 2");
    if (cfg.max_subdivisions < 0) throw Error("max_subdivisions must be >= 0");
    if (!(cfg.rel_tol > 0.0)) throw Error("quadrature tolerance must be positive");
}

struct GLTable {
    std::vector<double> x;  // nodes on [-1,1], stored exactly symmetric
    std::vector<double> w;
};

// Newton iteration on Legendre polynomials; nodes are written in +/- pairs so
// x[k] == -x[n-1-k] holds bit-exactly.
GLTable compute_gauss_legendre(int n) {
    GLTable t;
    t.x.assign(static_cast<std::size_t>(n), 0.0);
    t.w.assign(static_cast<std::size_t>(n), 0.0);
    int m = (n + 1) / 2;
    for (int i = 1; i <= m; ++i) {
        double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            double pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15) break;
        }
        if (n % 2 == 1 && i == m) z = 0.0;  // middle root of an odd order
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        double pp = n * (z * p1 - p2) / (z * z - 1.0);
        double weight = 2.0 / ((1.0 - z * z) * pp * pp);
        t.x[static_cast<std::size_t>(i - 1)] = -z;
        t.x[static_cast<std::size_t>(n - i)] = z;
        t.w[static_cast<std::size_t>(i - 1)] = weight;
        t.w[static_cast<std::size_t>(n - i)] = weight;
    }
    return t;
}

const GLTable& gauss_legendre(int n) {
    static std::mutex mtx;
    static std::map<int, GLTable> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

struct SegmentIntegrator {
    const PlanarFn& f;
    Complex mid, half, z;
    const GLTable& gl;
    double rel_tol;
    int max_depth;
    long nodes = 0;
    double err = 0.0;
    double scale = 0.0;

    Complex integrand(double s) {
        // s in [-1,1] along the segment; zeta = mid + half*s.
        Complex zeta = mid + half * s;
        Complex fv;
        try {
            fv = f(zeta);
        } catch (const EvaluationError& e) {
            throw EvaluationError(std::string(e.what()) + " [quadrature node " +
                                  format_complex(zeta) + "]");
        }
        Complex v = fv / (zeta - z);
        if (!is_finite(v))
            throw EvaluationError("integrand not finite at quadrature node " +
                                  format_complex(zeta));
        return v;
    }

    // One Gauss-Legendre panel over the s-interval with the given midpoint
    // and half-width. Contributions are summed in mirrored pairs so that a
    // reversed segment yields the exact negation.
    Complex panel(double t_mid, double t_half) {
        int n = static_cast<int>(gl.x.size());
        Complex acc = 0.0;
        for (int k = 0; k < n / 2; ++k) {
            Complex a = integrand(t_mid + t_half * gl.x[static_cast<std::size_t>(k)]);
            Complex b = integrand(t_mid + t_half * gl.x[static_cast<std::size_t>(n - 1 - k)]);
            acc += gl.w[static_cast<std::size_t>(k)] * (a + b);
        }
        if (n % 2 == 1)
            acc += gl.w[static_cast<std::size_t>(n / 2)] *
                   integrand(t_mid + t_half * gl.x[static_cast<std::size_t>(n / 2)]);
        nodes += n;
        return (half * t_half) * acc;
    }

    Complex refine(double a, double b, Complex whole, int depth) {
        double m = 0.5 * (a + b);
        double quarter = 0.25 * (b - a);
        Complex left = panel(0.5 * (a + m), quarter);
        Complex right = panel(0.5 * (m + b), quarter);
        Complex sum2 = left + right;
        double diff = std::abs(sum2 - whole);
        if (diff <= rel_tol * std::max(std::abs(sum2), scale) || depth >= max_depth) {
            err += diff;
            return sum2;
        }
        return refine(a, m, left, depth + 1) + refine(m, b, right, depth + 1);
    }

    Complex run() {
        Complex whole = panel(0.0, 1.0);
        scale = std::max(std::abs(whole), 1e-30);
        if (max_depth == 0) return whole;
        return refine(-1.0, 1.0, whole, 1);
    }
};

}  // namespace

IntegralResult integrate_cauchy_segment(const PlanarFn& f, Segment seg, Complex z,
                                        const QuadratureConfig& cfg) {
    validate(cfg);
    if (!is_finite(seg.start) || !is_finite(seg.end) || !is_finite(z))
        throw Error("non-finite segment or evaluation point");
    if (distance_to_segment(z, seg.start, seg.end) <= 1e-12)
        throw ProximityError("evaluation point " + format_complex(z) +
                             " lies on or numerically on the segment");
    SegmentIntegrator s{f,
                        0.5 * (seg.start + seg.end),
                        0.5 * (seg.end - seg.start),
                        z,
                        gauss_legendre(cfg.gauss_order),
                        cfg.rel_tol,
                        cfg.max_subdivisions};
    IntegralResult r;
    r.value = s.run();
    r.error_estimate = s.err;
    r.nodes_used = s.nodes;
    return r;
}

namespace {

// 1/(2 pi i) = -i/(2 pi)
const Complex kCauchyScale(0.0, -1.0 / (2.0 * std::numbers::pi));

}  // namespace

IntegralResult cauchy_segments(const PlanarFn& f, std::span<const Segment> segments,
                               Complex z, const QuadratureConfig& cfg) {
    validate(cfg);
    IntegralResult total;
    Complex acc = 0.0;
    for (const Segment& seg : segments) {
        IntegralResult r = integrate_cauchy_segment(f, seg, z, cfg);
        acc += r.value;
        total.error_estimate += r.error_estimate;
        total.nodes_used += r.nodes_used;
    }
    total.value = acc * kCauchyScale;
    total.error_estimate /= 2.0 * std::numbers::pi;
    return total;
}

IntegralResult cauchy_rectangle(const PlanarFn& f, const RectangleDomain& rect, Complex z,
                                const QuadratureConfig& cfg) {
    if (!(rect.re_min < rect.re_max) || !(rect.im_min < rect.im_max))
        throw Error("rectangle requires re_min < re_max and im_min < im_max");
    const Complex bl(rect.re_min, rect.im_min);
    const Complex br(rect.re_max, rect.im_min);
    const Complex tr(rect.re_max, rect.im_max);
    const Complex tl(rect.re_min, rect.im_max);
    const Segment sides[4] = {{bl, br}, {br, tr}, {tr, tl}, {tl, bl}};
    return cauchy_segments(f, sides, z, cfg);
}

std::vector<Segment> contour_segments(const PolygonalContour& p) {
    std::vector<Segment> segs;
    segs.reserve(p.edge_count());
    for (const auto& loop : p.loops) {
        const auto& vs = loop.vertices;
        for (std::size_t k = 0; k < vs.size(); ++k)
            segs.push_back({vs[k], vs[(k + 1) % vs.size()]});
    }
    return segs;
}

IntegralResult cauchy_compact(const PlanarFn& f, const PolygonalContour& p, Complex z,
                              const QuadratureConfig& cfg) {
    if (p.loops.empty()) throw Error("contour has no loops");
    double d = distance_to_contour(p, z);
    if (d <= p.h / 10.0)
        throw ProximityError("evaluation point " + format_complex(z) +
                             " is within h/10 of the contour (distance " + format_double(d) +
                             ", h " + format_double(p.h) + ")");
    std::vector<Segment> segs = contour_segments(p);
    return cauchy_segments(f, segs, z, cfg);
}

double contour_agreement(const PlanarFn& f, const PolygonalContour& p1,
                         const PolygonalContour& p2, std::span<const Complex> samples,
                         const QuadratureConfig& cfg) {
    double worst = 0.0;
    for (Complex z : samples) {
        IntegralResult a = cauchy_compact(f, p1, z, cfg);
        IntegralResult b = cauchy_compact(f, p2, z, cfg);
        worst = std::max(worst, std::abs(a.value - b.value));
    }
    return worst;
}

}  // namespace hartogs
