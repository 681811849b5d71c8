#include "hartogs/extension.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hartogs/format.hpp"

namespace hartogs {

std::string Provenance::code() const {
    switch (kind) {
        case ProvenanceKind::Passthrough:
            return "passthrough";
        case ProvenanceKind::FiberIntegral:
            return "fiber_integral";
        case ProvenanceKind::GluedChain:
            return "glued_chain(" + std::to_string(chain_length) + ")";
    }
    return "unknown";
}

namespace {

ComplexPoint lerp(const ComplexPoint& a, const ComplexPoint& b, double t) {
    std::vector<Complex> cs(static_cast<std::size_t>(a.dim()));
    for (int k = 0; k < a.dim(); ++k) cs[static_cast<std::size_t>(k)] = a[k] + t * (b[k] - a[k]);
    return ComplexPoint(std::move(cs));
}

Box slice_box(const Polydisc& bound, int slot) {
    Complex c = bound.center[slot - 1];
    double r = bound.radius;
    return Box{c.real() - r, c.real() + r, c.imag() - r, c.imag() + r};
}

}  // namespace

// ---------------------------------------------------------------------------
// ProjectedSets

ProjectedSets::ProjectedSets(DomainSpec omega, RemovableSetSpec a, int slot, int fiber_grid)
    : omega_(std::move(omega)), a_(std::move(a)), slot_(slot), fiber_grid_(fiber_grid) {
    if (omega_.n != a_.n) throw Error("dimension mismatch between Omega and A");
    if (omega_.n < 2) throw HypothesisError("projections require dimension n >= 2");
    check_slot(slot_, omega_.n);
    if (fiber_grid_ < 2) throw Error("fiber sampling grid must have at least 2 points per axis");
}

bool ProjectedSets::in_a(const ComplexPoint& base) const {
    PlanarCompactSet fs = fiber(a_, slot_, base);
    return !planar_set_empty_on_grid(fs, fiber_grid_);
}

bool ProjectedSets::in_omega(const ComplexPoint& base) const {
    Box box = slice_box(omega_.bounds, slot_);
    const int m = 16;
    for (int jx = 0; jx < m; ++jx)
        for (int jy = 0; jy < m; ++jy) {
            Complex w(box.re_min + box.width() * jx / (m - 1),
                      box.im_min + box.height() * jy / (m - 1));
            if (omega_.contains(insert_at(base, slot_, w))) return true;
        }
    return false;
}

const std::vector<ComplexPoint>& ProjectedSets::exterior_samples() const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (exterior_) return *exterior_;

    ComplexPoint pc = project_skip(slot_, omega_.bounds.center);
    double r = omega_.bounds.radius;
    int axes = 2 * (omega_.n - 1);
    int m = std::max(4, static_cast<int>(std::floor(std::pow(4096.0, 1.0 / axes))));

    std::vector<ComplexPoint> out;
    std::vector<int> idx(static_cast<std::size_t>(axes), 0);
    for (;;) {
        std::vector<Complex> coords(static_cast<std::size_t>(omega_.n - 1));
        for (int k = 0; k < omega_.n - 1; ++k) {
            double re = pc[k].real() - r + 2.0 * r * idx[static_cast<std::size_t>(2 * k)] / (m - 1);
            double im =
                pc[k].imag() - r + 2.0 * r * idx[static_cast<std::size_t>(2 * k + 1)] / (m - 1);
            coords[static_cast<std::size_t>(k)] = Complex(re, im);
        }
        ComplexPoint p(std::move(coords));
        if (in_omega(p) && !in_a(p)) out.push_back(p);
        int d = 0;
        while (d < axes) {
            if (++idx[static_cast<std::size_t>(d)] < m) break;
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == axes) break;
    }
    exterior_ = std::move(out);
    return *exterior_;
}

ComplexPoint ProjectedSets::nearest_exterior(const ComplexPoint& base) const {
    const auto& ext = exterior_samples();
    if (ext.empty())
        throw HypothesisError(
            "projection of Omega minus projection of A has no sampled points "
            "(theorem hypothesis violated)");
    std::size_t best = 0;
    double best_d = sup_distance(base, ext[0]);
    for (std::size_t k = 1; k < ext.size(); ++k) {
        double d = sup_distance(base, ext[k]);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return ext[best];
}

// ---------------------------------------------------------------------------
// Stability neighborhood

FiberContour stable_neighborhood(const DomainSpec& omega, const RemovableSetSpec& a, int slot,
                                 const ComplexPoint& base, double eps,
                                 const ExtensionConfig& cfg) {
    if (omega.n != a.n) throw Error("dimension mismatch between Omega and A");
    check_slot(slot, omega.n);
    if (base.dim() != omega.n - 1)
        throw Error("base point must have dimension n-1 = " + std::to_string(omega.n - 1));

    PlanarCompactSet k = fiber(a, slot, base);
    if (planar_set_empty_on_grid(k, cfg.fiber_grid))
        throw GeometryError("empty fiber: base point " + format_point(base) +
                            " is not in the projection of A");

    auto om = omega.contains;
    PlanarOpenSet u{[om, slot, base](Complex w) { return om(insert_at(base, slot, w)); },
                    slice_box(omega.bounds, slot)};
    PolygonalContour contour = build_lattice_contour(k, u, eps);

    std::string witness;
    auto inclusions_hold = [&](double rho) {
        std::vector<ComplexPoint> bases;
        bases.push_back(base);
        static const double dirs[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                          {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};
        for (int coord = 0; coord < base.dim(); ++coord)
            for (const auto& d : dirs) {
                std::vector<Complex> cs = base.coords();
                cs[static_cast<std::size_t>(coord)] += Complex(rho * d[0], rho * d[1]);
                bases.emplace_back(std::move(cs));
            }
        for (const ComplexPoint& bq : bases) {
            PlanarCompactSet fq = fiber(a, slot, bq);
            int m = cfg.fiber_grid;
            for (int jx = 0; jx < m; ++jx)
                for (int jy = 0; jy < m; ++jy) {
                    Complex w(fq.bounds.re_min + fq.bounds.width() * jx / (m - 1),
                              fq.bounds.im_min + fq.bounds.height() * jy / (m - 1));
                    if (!fq.contains(w)) continue;
                    if (!encloses(contour, w)) {
                        witness = "fiber point " + format_complex(w) + " over base " +
                                  format_point(bq) + " escapes the contour";
                        return false;
                    }
                }
            for (const auto& loop : contour.loops)
                for (const Complex& v : loop.vertices)
                    if (!omega.contains(insert_at(bq, slot, v))) {
                        witness = "contour vertex " + format_complex(v) +
                                  " leaves the Omega fiber over base " + format_point(bq);
                        return false;
                    }
        }
        return true;
    };

    double rho = eps / 2.0;
    for (int halving = 0; halving <= cfg.max_rho_halvings; ++halving) {
        if (inclusions_hold(rho)) return FiberContour{base, rho, std::move(contour), slot};
        rho /= 2.0;
    }
    throw GeometryError("no stability radius found after " +
                        std::to_string(cfg.max_rho_halvings) + " halvings: " + witness);
}

// ---------------------------------------------------------------------------
// Fiber extension and checks

ExtensionReport fiber_extension(const ExprAst& f, const FiberContour& fc,
                                const ComplexPoint& z, const ExtensionConfig& cfg) {
    if (f.non_holomorphic())
        throw HypothesisError("function contains conj and is flagged non-holomorphic");
    if (z.dim() < 2) throw HypothesisError("fiber extension requires dimension n >= 2");
    check_slot(fc.slot, z.dim());
    if (fc.base.dim() != z.dim() - 1) throw Error("fiber contour base has the wrong dimension");

    ComplexPoint zp = project_skip(fc.slot, z);
    Complex w = project_component(fc.slot, z);
    if (sup_distance(zp, fc.base) >= fc.rho)
        throw GeometryError("point " + format_point(z) +
                            " is outside the stability neighborhood of base " +
                            format_point(fc.base));
    if (!encloses(fc.contour, w))
        throw GeometryError("fiber coordinate " + format_complex(w) +
                            " is outside the enclosed region of the fiber contour");

    int slot = fc.slot;
    auto integrand = [&f, &zp, slot](Complex zeta) {
        return evaluate(f, insert_at(zp, slot, zeta));
    };
    IntegralResult r = cauchy_compact(integrand, fc.contour, w, cfg.quadrature);

    ExtensionReport rep;
    rep.point = z;
    rep.value = r.value;
    rep.error_estimate = r.error_estimate;
    rep.provenance = Provenance{ProvenanceKind::FiberIntegral, fc.base, 0};
    return rep;
}

double glue_check(const ExprAst& f, const FiberContour& fc1, const FiberContour& fc2,
                  std::span<const ComplexPoint> samples, const ExtensionConfig& cfg) {
    if (fc1.slot != fc2.slot) throw Error("fiber contours use different slots");
    if (fc1.base.dim() != fc2.base.dim()) throw Error("fiber contour bases differ in dimension");
    if (sup_distance(fc1.base, fc2.base) >= fc1.rho + fc2.rho)
        throw GeometryError("stability neighborhoods of " + format_point(fc1.base) + " and " +
                            format_point(fc2.base) + " do not overlap");
    double worst = 0.0;
    for (const ComplexPoint& z : samples) {
        ExtensionReport a = fiber_extension(f, fc1, z, cfg);
        ExtensionReport b = fiber_extension(f, fc2, z, cfg);
        worst = std::max(worst, std::abs(a.value - b.value));
    }
    return worst;
}

double boundary_coincidence_check(const ExprAst& f, const DomainSpec& omega,
                                  const RemovableSetSpec& a, int slot,
                                  const ComplexPoint& boundary_base, const FiberContour& fc,
                                  std::span<const ComplexPoint> samples,
                                  const ExtensionConfig& cfg) {
    if (boundary_base.dim() != fc.base.dim())
        throw Error("boundary base has the wrong dimension");
    ProjectedSets proj(omega, a, slot, cfg.fiber_grid);
    double worst = 0.0;
    for (const ComplexPoint& z : samples) {
        ComplexPoint zp = project_skip(slot, z);
        if (sup_distance(zp, fc.base) >= fc.rho)
            throw GeometryError("sample base " + format_point(zp) +
                                " is outside the stability neighborhood U(z_b')");
        if (proj.in_a(zp))
            throw GeometryError("sample base point " + format_point(zp) +
                                " lies inside the projection of A");
        Complex direct = evaluate(f, z);
        ExtensionReport ext = fiber_extension(f, fc, z, cfg);
        worst = std::max(worst, std::abs(direct - ext.value));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Chains

std::vector<ComplexPoint> path_chain(
    const ComplexPoint& start, const ProjectedSets& proj, double step,
    const std::function<bool(const ComplexPoint&, const ComplexPoint&)>& overlap_ok) {
    if (!(step > 0.0) || !std::isfinite(step)) throw Error("chain step must be positive");
    if (start.dim() != proj.base_dim())
        throw Error("chain start must live in C^(n-1), dimension " +
                    std::to_string(proj.base_dim()));
    if (!proj.in_a(start))
        throw GeometryError("chain start " + format_point(start) +
                            " is not in the projection of A");

    ComplexPoint target = proj.nearest_exterior(start);
    double len = sup_distance(start, target);
    auto at = [&](double t) { return lerp(start, target, t); };

    // March toward the exterior, then bisect the membership flip. The last
    // probe is the exterior sample itself, so a flip always exists.
    double t_in = 0.0, t_out = 1.0;
    {
        bool found = false;
        double dt = std::min(1.0, (step / 2.0) / len);
        int m = std::max(1, static_cast<int>(std::ceil(1.0 / dt)));
        for (int jstep = 1; jstep <= m; ++jstep) {
            double tc = std::min(1.0, jstep * dt);
            if (!proj.in_a(at(tc))) {
                t_out = tc;
                found = true;
                break;
            }
            t_in = tc;
        }
        if (!found)
            throw GeometryError("no boundary crossing found along the marched segment");
    }
    while (len * (t_out - t_in) > step / 100.0) {
        double tm = 0.5 * (t_in + t_out);
        if (proj.in_a(at(tm)))
            t_in = tm;
        else
            t_out = tm;
    }

    const double chain_len = len * t_in;
    // Within the bisection tolerance the start itself is the boundary point.
    if (chain_len <= step / 100.0) return {start};

    double spacing = step;
    for (int attempt = 0; attempt <= 10; ++attempt, spacing /= 2.0) {
        int k = std::max(1, static_cast<int>(std::ceil(chain_len / spacing)));
        std::vector<ComplexPoint> chain;
        chain.reserve(static_cast<std::size_t>(k) + 1);
        for (int j = 0; j <= k; ++j)
            chain.push_back(at(k == 0 ? 0.0 : t_in * static_cast<double>(j) / k));
        for (std::size_t j = 0; j + 1 < chain.size(); ++j)
            if (!proj.in_a(chain[j]))
                throw GeometryError(
                    "projection of A is not segment-connected toward its boundary: point " +
                    format_point(chain[j]) + " left the projection");
        if (!overlap_ok) return chain;
        bool ok = true;
        for (std::size_t j = 0; j + 1 < chain.size(); ++j)
            if (!overlap_ok(chain[j], chain[j + 1])) {
                ok = false;
                break;
            }
        if (ok) return chain;
    }
    throw GeometryError(
        "chain refinement exhausted: consecutive stability neighborhoods fail to overlap "
        "after 10 halvings");
}

// ---------------------------------------------------------------------------
// Run cache

ExtensionRun::ExtensionRun(DomainSpec omega, RemovableSetSpec a, int slot, double eps,
                           double step, ExtensionConfig cfg)
    : omega_(std::move(omega)),
      a_(std::move(a)),
      slot_(slot),
      eps_(eps),
      step_(step),
      cfg_(std::move(cfg)),
      proj_(omega_, a_, slot_, cfg_.fiber_grid) {
    if (!(eps_ > 0.0)) throw Error("eps must be positive");
    if (!(step_ > 0.0)) throw Error("step must be positive");
}

ExtensionRun::Key ExtensionRun::key_of(const ComplexPoint& base) const {
    Key key;
    key.reserve(static_cast<std::size_t>(2 * base.dim()));
    for (int k = 0; k < base.dim(); ++k) {
        key.push_back(std::llround(base[k].real() * 1e9));
        key.push_back(std::llround(base[k].imag() * 1e9));
    }
    return key;
}

std::shared_ptr<const FiberContour> ExtensionRun::contour_at(const ComplexPoint& base) {
    Key key = key_of(base);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = contours_.find(key);
        if (it != contours_.end()) return it->second;
    }
    auto fc = std::make_shared<const FiberContour>(
        stable_neighborhood(omega_, a_, slot_, base, eps_, cfg_));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = contours_.emplace(std::move(key), std::move(fc));
    return it->second;
}

std::vector<ComplexPoint> overlap_samples(const RemovableSetSpec& a, const FiberContour& fc1,
                                          const FiberContour& fc2, const DomainSpec& omega,
                                          int count, int fiber_grid) {
    if (fc1.slot != fc2.slot) throw Error("fiber contours use different slots");
    double gap = sup_distance(fc1.base, fc2.base);
    if (gap >= fc1.rho + fc2.rho)
        throw GeometryError("stability neighborhoods do not overlap");
    double t = gap == 0.0 ? 0.0 : fc1.rho / (fc1.rho + fc2.rho);
    ComplexPoint mid = lerp(fc1.base, fc2.base, t);

    PlanarCompactSet k = fiber(a, fc1.slot, mid);
    std::vector<ComplexPoint> out;
    int m = std::max(2, fiber_grid);
    for (int jx = 0; jx < m && static_cast<int>(out.size()) < count; ++jx)
        for (int jy = 0; jy < m && static_cast<int>(out.size()) < count; ++jy) {
            Complex w(k.bounds.re_min + k.bounds.width() * jx / (m - 1),
                      k.bounds.im_min + k.bounds.height() * jy / (m - 1));
            if (!k.contains(w)) continue;
            if (!encloses(fc1.contour, w) ||
                distance_to_contour(fc1.contour, w) <= fc1.contour.h / 8.0)
                continue;
            if (!encloses(fc2.contour, w) ||
                distance_to_contour(fc2.contour, w) <= fc2.contour.h / 8.0)
                continue;
            ComplexPoint z = insert_at(mid, fc1.slot, w);
            if (!omega.contains(z)) continue;
            out.push_back(std::move(z));
        }
    if (out.empty())
        throw GeometryError("no overlap samples found in the shared stability neighborhood");
    return out;
}

namespace {

// Fiber coordinates of the boundary base usable for boundary samples: inside
// the contour and away from its edges.
std::vector<Complex> interior_fiber_points(const RemovableSetSpec& a, const FiberContour& fc,
                                           int fiber_grid) {
    PlanarCompactSet k = fiber(a, fc.slot, fc.base);
    std::vector<Complex> ws;
    int m = std::max(2, fiber_grid);
    for (int jx = 0; jx < m; ++jx)
        for (int jy = 0; jy < m; ++jy) {
            Complex w(k.bounds.re_min + k.bounds.width() * jx / (m - 1),
                      k.bounds.im_min + k.bounds.height() * jy / (m - 1));
            if (!k.contains(w)) continue;
            if (!encloses(fc.contour, w)) continue;
            if (distance_to_contour(fc.contour, w) <= fc.contour.h / 8.0) continue;
            ws.push_back(w);
        }
    return ws;
}

}  // namespace

std::vector<ComplexPoint> boundary_samples(const RemovableSetSpec& a, const DomainSpec& omega,
                                           const ProjectedSets& proj, const FiberContour& fc,
                                           int count, int fiber_grid) {
    std::vector<Complex> ws = interior_fiber_points(a, fc, fiber_grid);
    if (ws.empty())
        throw GeometryError("no usable fiber coordinates for the boundary check at " +
                            format_point(fc.base));
    // The nearest exterior sample fixes the outward direction; bases are
    // pushed along it by absolute amounts up to 0.9*rho, past the sample if
    // need be.
    ComplexPoint target = proj.nearest_exterior(fc.base);
    double len = sup_distance(fc.base, target);
    std::vector<ComplexPoint> out;
    for (int m = 1; m <= 8 * count && static_cast<int>(out.size()) < count; ++m) {
        double delta = 0.9 * fc.rho * m / (8.0 * count);
        ComplexPoint b = lerp(fc.base, target, delta / len);
        if (proj.in_a(b)) continue;
        Complex w = ws[out.size() % ws.size()];
        ComplexPoint z = insert_at(b, fc.slot, w);
        if (!omega.contains(z)) continue;
        out.push_back(std::move(z));
    }
    if (out.empty())
        throw GeometryError(
            "no boundary samples outside the projection of A within the stability "
            "neighborhood of " +
            format_point(fc.base));
    return out;
}

int ExtensionRun::verify_chain(const ExprAst& f, const ComplexPoint& base) {
    Key key = key_of(base);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = verified_.find(key);
        if (it != verified_.end()) return it->second;
    }

    auto overlap = [this](const ComplexPoint& x, const ComplexPoint& y) {
        auto cx = contour_at(x);
        auto cy = contour_at(y);
        return sup_distance(x, y) < 0.9 * (cx->rho + cy->rho);
    };
    std::vector<ComplexPoint> chain = path_chain(base, proj_, step_, overlap);

    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
        auto f1 = contour_at(chain[j]);
        auto f2 = contour_at(chain[j + 1]);
        std::vector<ComplexPoint> samples =
            overlap_samples(a_, *f1, *f2, omega_, cfg_.check_samples, cfg_.fiber_grid);
        double d = glue_check(f, *f1, *f2, samples, cfg_);
        if (d > cfg_.cross_check_tol)
            throw ToleranceError("gluing check failed between bases " +
                                 format_point(chain[j]) + " and " + format_point(chain[j + 1]) +
                                 ": max difference " + format_double(d));
    }

    const ComplexPoint& zb = chain.back();
    auto fb = contour_at(zb);
    std::vector<ComplexPoint> bsamples =
        boundary_samples(a_, omega_, proj_, *fb, cfg_.check_samples, cfg_.fiber_grid);
    double d = boundary_coincidence_check(f, omega_, a_, slot_, zb, *fb, bsamples, cfg_);
    if (d > cfg_.cross_check_tol)
        throw ToleranceError("boundary coincidence check failed at base " + format_point(zb) +
                             ": max difference " + format_double(d));

    int k = static_cast<int>(chain.size());
    std::lock_guard<std::mutex> lock(mutex_);
    verified_.emplace(std::move(key), k);
    return k;
}

// ---------------------------------------------------------------------------
// Public extension

namespace {

ExtensionReport passthrough_report(const ExprAst& f, const ComplexPoint& z) {
    ExtensionReport rep;
    rep.point = z;
    rep.value = evaluate(f, z);
    rep.error_estimate = 0.0;
    rep.provenance = Provenance{ProvenanceKind::Passthrough, std::nullopt, 0};
    return rep;
}

}  // namespace

ExtensionReport extend_at(const ExprAst& f, const DomainSpec& omega, const RemovableSetSpec& a,
                          int slot, const ComplexPoint& z, double eps, double step,
                          const ExtensionConfig& cfg, ExtensionRun* run) {
    if (omega.n < 2)
        throw HypothesisError("the extension theorem requires n >= 2 (got n = " +
                              std::to_string(omega.n) + ")");
    if (f.non_holomorphic())
        throw HypothesisError(
            "function contains conj and is flagged non-holomorphic; extension rejected");
    if (a.n != omega.n) throw Error("dimension mismatch between Omega and A");
    check_slot(slot, omega.n);
    if (z.dim() != omega.n) throw Error("evaluation point has the wrong dimension");
    if (!omega.contains(z))
        throw GeometryError("evaluation point " + format_point(z) + " is outside Omega");

    std::optional<ExtensionRun> local;
    if (!run) {
        local.emplace(omega, a, slot, eps, step, cfg);
        run = &*local;
    }
    const ExtensionConfig& rcfg = run->config();

    ComplexPoint zp = project_skip(slot, z);
    Complex w = project_component(slot, z);
    bool in_a = a.contains(z);
    bool base_in = in_a || run->projected().in_a(zp);

    if (!base_in) return passthrough_report(f, z);

    auto fc = run->contour_at(zp);
    double dist = distance_to_contour(fc->contour, w);
    if (dist <= fc->contour.h / 10.0)
        throw ProximityError("point " + format_point(z) +
                             " is within the contour exclusion zone (distance " +
                             format_double(dist) + ", h " + format_double(fc->contour.h) + ")");
    if (!encloses(fc->contour, w)) {
        if (in_a)
            throw GeometryError(
                "point of A fell outside its fiber contour; sampling resolution is too "
                "coarse for this set");
        // Above the projection of A but outside hat-U: f itself is defined.
        return passthrough_report(f, z);
    }

    Provenance prov{ProvenanceKind::FiberIntegral, fc->base, 0};
    if (rcfg.verify) {
        int k = run->verify_chain(f, zp);
        prov = Provenance{ProvenanceKind::GluedChain, fc->base, k};
    }

    ExtensionReport rep = fiber_extension(f, *fc, z, rcfg);
    rep.provenance = prov;

    if (!in_a) {
        Complex direct = evaluate(f, z);
        double dev = std::abs(rep.value - direct);
        if (dev > rcfg.coincidence_tol)
            throw ToleranceError("extension disagrees with f at " + format_point(z) +
                                 " where both are defined: difference " + format_double(dev));
    }
    return rep;
}

}  // namespace hartogs
