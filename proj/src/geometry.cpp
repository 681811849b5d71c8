#include "hartogs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include "hartogs/format.hpp"

namespace hartogs {

DomainSpec polydisc_domain(const Polydisc& d) {
    return DomainSpec{d.dim(), [d](const ComplexPoint& z) { return d.contains(z); }, d};
}

RemovableSetSpec closed_polydisc_set(const Polydisc& d) {
    // The bounding polydisc is open, so it gets a margin over the closed set.
    Polydisc bound(d.center, d.radius * 1.25);
    return RemovableSetSpec{
        d.dim(), [d](const ComplexPoint& z) { return d.contains_closed(z); }, bound, true};
}

std::size_t PolygonalContour::edge_count() const {
    std::size_t n = 0;
    for (const Loop& l : loops) n += l.vertices.size();
    return n;
}

double PolygonalContour::total_length() const {
    return static_cast<double>(edge_count()) * h;
}

PlanarCompactSet fiber(const RemovableSetSpec& a, int slot, const ComplexPoint& zp) {
    if (a.n < 2) throw Error("fiber extraction requires dimension >= 2");
    check_slot(slot, a.n);
    if (zp.dim() != a.n - 1)
        throw Error("fiber base point has dimension " + std::to_string(zp.dim()) +
                    ", expected " + std::to_string(a.n - 1));
    Complex c = a.bounds.center[slot - 1];
    double r = a.bounds.radius;
    Box box{c.real() - r, c.real() + r, c.imag() - r, c.imag() + r};
    auto member = a.contains;
    auto pred = [member, slot, zp](Complex w) { return member(insert_at(zp, slot, w)); };
    return PlanarCompactSet{pred, box};
}

bool planar_set_empty_on_grid(const PlanarCompactSet& k, int samples_per_axis) {
    int m = std::max(2, samples_per_axis);
    for (int jx = 0; jx < m; ++jx) {
        double x = k.bounds.re_min + k.bounds.width() * jx / (m - 1);
        for (int jy = 0; jy < m; ++jy) {
            double y = k.bounds.im_min + k.bounds.height() * jy / (m - 1);
            if (k.contains(Complex(x, y))) return false;
        }
    }
    return true;
}

HartogsFigure hartogs_figure(const std::vector<double>& q) {
    int n = static_cast<int>(q.size());
    if (n < 2) throw Error("a Hartogs figure needs dimension >= 2");
    for (double qj : q)
        if (!(qj > 0.0) || !(qj < 1.0))
            throw Error("Hartogs figure parameters must lie strictly in (0,1)");

    Polydisc unit(ComplexPoint::zero(n), 1.0);

    auto in_figure = [q, n](const ComplexPoint& z) {
        if (z.dim() != n) throw Error("dimension mismatch in Hartogs figure predicate");
        for (int k = 0; k < n; ++k)
            if (!(std::abs(z[k]) < 1.0)) return false;
        if (std::abs(z[0]) > q[0]) return true;
        for (int k = 1; k < n; ++k)
            if (!(std::abs(z[k]) < q[static_cast<std::size_t>(k)])) return false;
        return true;
    };

    // Unit polydisc minus the figure: |z1| <= q1, the remaining coordinates
    // inside the unit polydisc but not all inside the small one.
    auto in_complement = [q, n](const ComplexPoint& z) {
        if (z.dim() != n) throw Error("dimension mismatch in Hartogs complement predicate");
        if (std::abs(z[0]) > q[0]) return false;
        bool some_large = false;
        for (int k = 1; k < n; ++k) {
            if (!(std::abs(z[k]) < 1.0)) return false;
            if (std::abs(z[k]) >= q[static_cast<std::size_t>(k)]) some_large = true;
        }
        return some_large;
    };

    DomainSpec figure{n, in_figure, unit};
    RemovableSetSpec complement{n, in_complement, unit, true};
    return HartogsFigure{std::move(figure), std::move(complement), 1};
}

// ---------------------------------------------------------------------------
// Loop tracing

namespace {

GridPoint rotate_left(GridPoint d) { return GridPoint{-d.y, d.x}; }
GridPoint rotate_right(GridPoint d) { return GridPoint{d.y, -d.x}; }

std::string grid_point_str(GridPoint p) {
    return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

}  // namespace

std::vector<std::vector<GridPoint>> trace_loops(std::vector<GridEdge> edges) {
    for (const GridEdge& e : edges) {
        std::int64_t dx = e.to.x - e.from.x, dy = e.to.y - e.from.y;
        if (std::abs(dx) + std::abs(dy) != 1)
            throw GeometryError("edge is not an axis-aligned unit step");
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw GeometryError("duplicate directed edge in boundary set");

    std::map<GridPoint, std::vector<std::size_t>> outgoing;
    std::map<GridPoint, int> in_degree;
    for (std::size_t id = 0; id < edges.size(); ++id) {
        outgoing[edges[id].from].push_back(id);
        ++in_degree[edges[id].to];
    }
    for (const auto& [v, outs] : outgoing) {
        auto it = in_degree.find(v);
        int in = it == in_degree.end() ? 0 : it->second;
        if (in != static_cast<int>(outs.size()))
            throw GeometryError("degree mismatch at lattice vertex " + grid_point_str(v));
    }
    for (const auto& [v, in] : in_degree) {
        auto it = outgoing.find(v);
        int out = it == outgoing.end() ? 0 : static_cast<int>(it->second.size());
        if (in != out)
            throw GeometryError("degree mismatch at lattice vertex " + grid_point_str(v));
    }

    std::vector<bool> used(edges.size(), false);
    std::vector<std::vector<GridPoint>> loops;

    auto next_edge = [&](std::size_t cur) -> std::size_t {
        GridPoint v = edges[cur].to;
        GridPoint d{v.x - edges[cur].from.x, v.y - edges[cur].from.y};
        const GridPoint prefs[3] = {rotate_left(d), d, rotate_right(d)};
        for (const GridPoint& want : prefs) {
            GridPoint target{v.x + want.x, v.y + want.y};
            for (std::size_t id : outgoing[v])
                if (!used[id] && edges[id].to == target) return id;
        }
        throw GeometryError("no continuation at lattice vertex " + grid_point_str(v));
    };

    for (std::size_t start = 0; start < edges.size(); ++start) {
        if (used[start]) continue;
        std::vector<GridPoint> loop;
        std::size_t cur = start;
        for (;;) {
            used[cur] = true;
            loop.push_back(edges[cur].from);
            if (edges[cur].to == edges[start].from) break;
            cur = next_edge(cur);
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

// ---------------------------------------------------------------------------
// Lattice contour construction

namespace {

double shoelace_area(const std::vector<Complex>& vs) {
    double acc = 0.0;
    for (std::size_t k = 0; k < vs.size(); ++k) {
        const Complex& a = vs[k];
        const Complex& b = vs[(k + 1) % vs.size()];
        acc += a.real() * b.imag() - b.real() * a.imag();
    }
    return 0.5 * acc;
}

}  // namespace

PolygonalContour build_lattice_contour(const PlanarCompactSet& k, const PlanarOpenSet& u,
                                       double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("eps must be positive and finite");
    if (!k.contains || !u.contains) throw Error("planar set is missing its predicate");
    if (!(k.bounds.width() >= 0.0) || !(k.bounds.height() >= 0.0))
        throw Error("invalid bounding box");

    const double h = eps * std::sqrt(2.0) / 2.0;
    const double ax = k.bounds.re_min;
    const double ay = k.bounds.im_min;
    const int nx = std::max(1, static_cast<int>(std::ceil(k.bounds.width() / h)));
    const int ny = std::max(1, static_cast<int>(std::ceil(k.bounds.height() / h)));

    // 3x3 sub-grid of the closed cell (ix, iy).
    auto sub_point = [&](int ix, int iy, int sx, int sy) {
        return Complex(ax + ix * h + sx * (h / 2.0), ay + iy * h + sy * (h / 2.0));
    };

    std::vector<std::uint8_t> occupied(static_cast<std::size_t>(nx) * ny, 0);
    auto occ_at = [&](int ix, int iy) -> std::uint8_t& {
        return occupied[static_cast<std::size_t>(iy) * nx + ix];
    };

    bool any = false;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            for (int sy = 0; sy < 3 && !occ_at(ix, iy); ++sy)
                for (int sx = 0; sx < 3; ++sx)
                    if (k.contains(sub_point(ix, iy, sx, sy))) {
                        occ_at(ix, iy) = 1;
                        any = true;
                        break;
                    }
    if (!any)
        throw GeometryError("compact set is empty at the working grid resolution");

    // Separation: around every sampled point of K the closed eps-disc must
    // stay in U, checked at 16 boundary angles.
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            if (!occ_at(ix, iy)) continue;
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    Complex p = sub_point(ix, iy, sx, sy);
                    if (!k.contains(p)) continue;
                    if (!u.contains(p))
                        throw GeometryError("separation check failed: K sample " +
                                            format_complex(p) + " is not in U");
                    for (int j = 0; j < 16; ++j) {
                        double th = 2.0 * std::numbers::pi * j / 16.0;
                        Complex q = p + eps * Complex(std::cos(th), std::sin(th));
                        if (!u.contains(q))
                            throw GeometryError(
                                "separation check failed: the eps-disc about " +
                                format_complex(p) + " leaves U at " + format_complex(q));
                    }
                }
        }

    // Selected cells: occupied plus one ring of neighbors, so K ends up in
    // the interior of the union even when it touches cell corners. Indices
    // shift by one to make room for the ring.
    const int mx = nx + 2, my = ny + 2;
    std::vector<std::uint8_t> selected(static_cast<std::size_t>(mx) * my, 0);
    auto sel_at = [&](int ix, int iy) -> std::uint8_t& {
        return selected[static_cast<std::size_t>(iy + 1) * mx + (ix + 1)];
    };
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            if (occ_at(ix, iy))
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) sel_at(ix + dx, iy + dy) = 1;

    for (int iy = -1; iy <= ny; ++iy)
        for (int ix = -1; ix <= nx; ++ix) {
            if (!sel_at(ix, iy)) continue;
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    Complex p = sub_point(ix, iy, sx, sy);
                    if (!u.contains(p))
                        throw GeometryError("selected lattice squares escape U at " +
                                            format_complex(p));
                }
        }

    // Boundary sides: the sides of selected squares whose neighbor across the
    // side is unselected, oriented counterclockwise around each square.
    auto sel_q = [&](int ix, int iy) -> bool {
        if (ix < -1 || ix > nx || iy < -1 || iy > ny) return false;
        return sel_at(ix, iy) != 0;
    };
    std::vector<GridEdge> edges;
    for (int iy = -1; iy <= ny; ++iy)
        for (int ix = -1; ix <= nx; ++ix) {
            if (!sel_q(ix, iy)) continue;
            if (!sel_q(ix, iy - 1)) edges.push_back({{ix, iy}, {ix + 1, iy}});
            if (!sel_q(ix + 1, iy)) edges.push_back({{ix + 1, iy}, {ix + 1, iy + 1}});
            if (!sel_q(ix, iy + 1)) edges.push_back({{ix + 1, iy + 1}, {ix, iy + 1}});
            if (!sel_q(ix - 1, iy)) edges.push_back({{ix, iy + 1}, {ix, iy}});
        }

    std::vector<std::vector<GridPoint>> grid_loops = trace_loops(std::move(edges));

    PolygonalContour contour;
    contour.h = h;
    for (const auto& gl : grid_loops) {
        PolygonalContour::Loop loop;
        loop.vertices.reserve(gl.size());
        for (const GridPoint& p : gl)
            loop.vertices.emplace_back(ax + static_cast<double>(p.x) * h,
                                       ay + static_cast<double>(p.y) * h);
        loop.signed_area = shoelace_area(loop.vertices);
        contour.loops.push_back(std::move(loop));
    }
    return contour;
}

// ---------------------------------------------------------------------------
// Point queries

int winding_number(const PolygonalContour& p, Complex z) {
    int w = 0;
    for (const auto& loop : p.loops) {
        const auto& vs = loop.vertices;
        for (std::size_t k = 0; k < vs.size(); ++k) {
            const Complex& a = vs[k];
            const Complex& b = vs[(k + 1) % vs.size()];
            if (a.real() != b.real()) continue;  // only vertical edges cross the ray
            if (a.real() <= z.real()) continue;
            double lo = std::min(a.imag(), b.imag());
            double hi = std::max(a.imag(), b.imag());
            if (z.imag() >= lo && z.imag() < hi) w += b.imag() > a.imag() ? 1 : -1;
        }
    }
    return w;
}

bool encloses(const PolygonalContour& p, Complex z) { return winding_number(p, z) != 0; }

double distance_to_segment(Complex z, Complex a, Complex b) {
    Complex ab = b - a;
    double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(z - a);
    double t = ((z.real() - a.real()) * ab.real() + (z.imag() - a.imag()) * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(z - (a + t * ab));
}

double distance_to_contour(const PolygonalContour& p, Complex z) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& loop : p.loops) {
        const auto& vs = loop.vertices;
        for (std::size_t k = 0; k < vs.size(); ++k)
            best = std::min(best,
                            distance_to_segment(z, vs[k], vs[(k + 1) % vs.size()]));
    }
    return best;
}

std::string contour_to_json(const PolygonalContour& p) {
    std::string out = "{\"h\": " + format_double(p.h) + ", \"loops\": [";
    for (std::size_t li = 0; li < p.loops.size(); ++li) {
        if (li > 0) out += ", ";
        out += "[";
        const auto& vs = p.loops[li].vertices;
        for (std::size_t k = 0; k < vs.size(); ++k) {
            if (k > 0) out += ", ";
            out += "[" + format_double(vs[k].real()) + ", " + format_double(vs[k].imag()) + "]";
        }
        out += "]";
    }
    out += "]}";
    return out;
}

}  // namespace hartogs
