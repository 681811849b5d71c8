#include "hartogs/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hartogs/format.hpp"

namespace hartogs {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void scene_fail(const std::string& msg) { throw SceneError("scene: " + msg); }

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) scene_fail("unknown key '" + it.key() + "' in " + where);
    }
}

double require_number(const json& j, const char* what) {
    if (!j.is_number()) scene_fail(std::string(what) + " must be a number");
    return j.get<double>();
}

ComplexPoint parse_point(const json& arr, int n, const char* what) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
        scene_fail(std::string(what) + " must be an array of " + std::to_string(n) +
                   " [re, im] pairs");
    std::vector<Complex> cs;
    cs.reserve(static_cast<std::size_t>(n));
    for (const auto& pair : arr) {
        if (!pair.is_array() || pair.size() != 2)
            scene_fail(std::string(what) + " entries must be [re, im] pairs");
        cs.emplace_back(require_number(pair[0], what), require_number(pair[1], what));
    }
    return ComplexPoint(std::move(cs));
}

// --------------------------------------------------------------------------
// Hole predicates: boolean combinations of modulus inequalities over
// coordinates, e.g. "|z1| <= 0.5 and |z2| >= 0.3".

class PredicateParser {
  public:
    PredicateParser(std::string_view text, int n) : text_(text), n_(n) {}

    std::function<bool(const ComplexPoint&)> run() {
        auto p = parse_or();
        skip_ws();
        if (pos_ < text_.size())
            scene_fail("hole predicate: unexpected trailing input at byte " +
                       std::to_string(pos_));
        return p;
    }

  private:
    using Pred = std::function<bool(const ComplexPoint&)>;
    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept_word(std::string_view w) {
        skip_ws();
        if (text_.substr(pos_).starts_with(w)) {
            std::size_t after = pos_ + w.size();
            if (after >= text_.size() ||
                !std::isalnum(static_cast<unsigned char>(text_[after]))) {
                pos_ = after;
                return true;
            }
        }
        return false;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Pred parse_or() {
        Pred lhs = parse_and();
        while (accept_word("or")) {
            Pred rhs = parse_and();
            lhs = [lhs, rhs](const ComplexPoint& z) { return lhs(z) || rhs(z); };
        }
        return lhs;
    }

    Pred parse_and() {
        Pred lhs = parse_not();
        while (accept_word("and")) {
            Pred rhs = parse_not();
            lhs = [lhs, rhs](const ComplexPoint& z) { return lhs(z) && rhs(z); };
        }
        return lhs;
    }

    Pred parse_not() {
        if (accept_word("not")) {
            Pred inner = parse_not();
            return [inner](const ComplexPoint& z) { return !inner(z); };
        }
        if (accept('(')) {
            Pred inner = parse_or();
            if (!accept(')')) scene_fail("hole predicate: expected ')'");
            return inner;
        }
        return parse_comparison();
    }

    int parse_modulus() {
        if (!accept('|')) scene_fail("hole predicate: expected '|z<k>|'");
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != 'z')
            scene_fail("hole predicate: expected variable after '|'");
        ++pos_;
        int idx = 0;
        bool digits = false;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            idx = idx * 10 + (text_[pos_] - '0');
            digits = true;
            ++pos_;
        }
        if (!digits || idx < 1 || idx > n_)
            scene_fail("hole predicate: variable index out of range 1.." + std::to_string(n_));
        if (!accept('|')) scene_fail("hole predicate: expected closing '|'");
        return idx;
    }

    double parse_number() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                text_[pos_] == 'e' || text_[pos_] == 'E' ||
                ((text_[pos_] == '+' || text_[pos_] == '-') &&
                 (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
            ++pos_;
        if (pos_ == start) scene_fail("hole predicate: expected a number");
        try {
            return std::stod(std::string(text_.substr(start, pos_ - start)));
        } catch (const std::exception&) {
            scene_fail("hole predicate: malformed number");
        }
    }

    int parse_op() {  // 0: <=, 1: <, 2: >=, 3: >
        skip_ws();
        if (accept('<')) return accept('=') ? 0 : 1;
        if (accept('>')) return accept('=') ? 2 : 3;
        scene_fail("hole predicate: expected one of <=, <, >=, >");
    }

    static bool apply_op(int op, double lhs, double rhs) {
        switch (op) {
            case 0: return lhs <= rhs;
            case 1: return lhs < rhs;
            case 2: return lhs >= rhs;
            default: return lhs > rhs;
        }
    }

    Pred parse_comparison() {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '|') {
            int idx = parse_modulus();
            int op = parse_op();
            double c = parse_number();
            return [idx, op, c](const ComplexPoint& z) {
                return apply_op(op, std::abs(z[idx - 1]), c);
            };
        }
        double c = parse_number();
        int op = parse_op();
        int idx = parse_modulus();
        return [idx, op, c](const ComplexPoint& z) {
            return apply_op(op, c, std::abs(z[idx - 1]));
        };
    }
};

// --------------------------------------------------------------------------
// Load-time sampled validations

void odometer_boxes(int axes, int per_axis, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(static_cast<std::size_t>(axes), 0);
    for (;;) {
        fn(idx);
        int d = 0;
        while (d < axes) {
            if (++idx[static_cast<std::size_t>(d)] < per_axis) break;
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == axes) break;
    }
}

void validate_hole(const DomainSpec& omega, const RemovableSetSpec& hole) {
    int n = omega.n;
    int axes = 2 * n;
    int per_axis = std::max(3, static_cast<int>(std::floor(std::pow(4096.0, 1.0 / axes))));
    const Polydisc& hb = hole.bounds;

    odometer_boxes(axes, per_axis, [&](const std::vector<int>& idx) {
        std::vector<Complex> cs(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            Complex c = hb.center[k];
            double re = c.real() - hb.radius +
                        2.0 * hb.radius * idx[static_cast<std::size_t>(2 * k)] / (per_axis - 1);
            double im = c.imag() - hb.radius +
                        2.0 * hb.radius * idx[static_cast<std::size_t>(2 * k + 1)] / (per_axis - 1);
            cs[static_cast<std::size_t>(k)] = Complex(re, im);
        }
        ComplexPoint z(std::move(cs));
        if (hole.contains(z) && !omega.contains(z))
            scene_fail("hole is not contained in omega (witness " + format_point(z) + ")");
    });

    // Excursions past the bounding polydisc in one coordinate must leave the hole.
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < 8; ++a)
            for (double scale : {1.05, 1.25}) {
                double th = 2.0 * std::numbers::pi * a / 8.0;
                std::vector<Complex> cs = hb.center.coords();
                cs[static_cast<std::size_t>(k)] +=
                    hb.radius * scale * Complex(std::cos(th), std::sin(th));
                ComplexPoint z(std::move(cs));
                if (hole.contains(z))
                    scene_fail("hole predicate holds outside its bounding polydisc (witness " +
                               format_point(z) + ")");
            }
}

}  // namespace

Scene scene_from_json_text(const std::string& text, const std::string& source_name) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SceneError("scene " + source_name + ": " + e.what());
    }
    if (!j.is_object()) scene_fail("root must be an object");
    check_keys(j,
               {"n", "omega", "hole", "i", "function", "reference", "grid", "eps", "step",
                "tolerances", "base", "verify"},
               "scene");

    if (!j.contains("n") || !j["n"].is_number_integer()) scene_fail("requires integer 'n'");
    int n = j["n"].get<int>();
    if (n < 2)
        throw HypothesisError("scene dimension n = " + std::to_string(n) +
                              " rejected: the extension theorem requires n >= 2");

    // omega
    if (!j.contains("omega") || !j["omega"].is_object()) scene_fail("requires object 'omega'");
    const json& jo = j["omega"];
    std::string omega_kind = jo.value("kind", "");
    std::vector<double> hartogs_q;
    std::optional<DomainSpec> omega;
    if (omega_kind == "polydisc") {
        check_keys(jo, {"kind", "center", "radius"}, "omega");
        if (!jo.contains("center") || !jo.contains("radius"))
            scene_fail("omega polydisc requires 'center' and 'radius'");
        ComplexPoint center = parse_point(jo["center"], n, "omega.center");
        double radius = require_number(jo["radius"], "omega.radius");
        if (!(radius > 0.0)) scene_fail("omega.radius must be positive");
        omega = polydisc_domain(Polydisc(center, radius));
    } else if (omega_kind == "hartogs_figure") {
        check_keys(jo, {"kind", "q"}, "omega");
        if (!jo.contains("q") || !jo["q"].is_array() ||
            static_cast<int>(jo["q"].size()) != n)
            scene_fail("omega hartogs_figure requires 'q' with n entries");
        for (const auto& qj : jo["q"]) hartogs_q.push_back(require_number(qj, "omega.q"));
        // The extension lives on the full unit polydisc; the figure itself is
        // where the function is a priori defined.
        omega = polydisc_domain(Polydisc(ComplexPoint::zero(n), 1.0));
    } else {
        scene_fail("omega.kind must be 'polydisc' or 'hartogs_figure'");
    }

    // hole
    if (!j.contains("hole") || !j["hole"].is_object()) scene_fail("requires object 'hole'");
    const json& jh = j["hole"];
    std::string hole_kind = jh.value("kind", "");
    std::optional<RemovableSetSpec> hole;
    if (hole_kind == "closed_polydisc") {
        check_keys(jh, {"kind", "center", "radius"}, "hole");
        if (!jh.contains("center") || !jh.contains("radius"))
            scene_fail("hole closed_polydisc requires 'center' and 'radius'");
        ComplexPoint center = parse_point(jh["center"], n, "hole.center");
        double radius = require_number(jh["radius"], "hole.radius");
        if (!(radius > 0.0)) scene_fail("hole.radius must be positive");
        hole = closed_polydisc_set(Polydisc(center, radius));
    } else if (hole_kind == "hartogs_complement") {
        check_keys(jh, {"kind"}, "hole");
        if (omega_kind != "hartogs_figure")
            scene_fail("hole 'hartogs_complement' requires omega of kind 'hartogs_figure'");
        hole = hartogs_figure(hartogs_q).complement;
    } else if (hole_kind == "predicate_expr") {
        check_keys(jh, {"kind", "expr"}, "hole");
        if (!jh.contains("expr") || !jh["expr"].is_string())
            scene_fail("hole predicate_expr requires string 'expr'");
        std::string expr_text = jh["expr"].get<std::string>();
        PredicateParser pp(expr_text, n);
        auto pred = pp.run();
        auto om = omega->contains;
        // Relatively closed in omega: the raw predicate intersected with omega.
        auto member = [pred, om](const ComplexPoint& z) { return pred(z) && om(z); };
        hole = RemovableSetSpec{n, member, omega->bounds, true};
    } else {
        scene_fail(
            "hole.kind must be 'closed_polydisc', 'hartogs_complement' or 'predicate_expr'");
    }

    // slot
    int slot = hole_kind == "hartogs_complement" ? 1 : n;
    if (j.contains("i")) {
        if (!j["i"].is_number_integer()) scene_fail("'i' must be an integer");
        slot = j["i"].get<int>();
        if (slot < 1 || slot > n) scene_fail("'i' must lie in 1..n");
    }

    // function / reference
    if (!j.contains("function") || !j["function"].is_string())
        scene_fail("requires string 'function'");
    std::optional<ExprAst> f;
    try {
        f = parse(j["function"].get<std::string>(), n);
    } catch (const ParseError& e) {
        throw SceneError(std::string("scene: function: ") + e.what());
    }
    std::optional<ExprAst> reference;
    if (j.contains("reference")) {
        if (!j["reference"].is_string()) scene_fail("'reference' must be a string");
        try {
            reference = parse(j["reference"].get<std::string>(), n);
        } catch (const ParseError& e) {
            throw SceneError(std::string("scene: reference: ") + e.what());
        }
        if (reference->non_holomorphic())
            scene_fail("reference expression must not contain conj");
    }

    // grid
    if (!j.contains("grid") || !j["grid"].is_object()) scene_fail("requires object 'grid'");
    const json& jg = j["grid"];
    check_keys(jg, {"counts", "ranges"}, "grid");
    GridSpec grid;
    if (!jg.contains("counts") || !jg["counts"].is_array() ||
        static_cast<int>(jg["counts"].size()) != 2 * n)
        scene_fail("grid.counts must list 2n axis sample counts");
    for (const auto& c : jg["counts"]) {
        if (!c.is_number_integer() || c.get<int>() < 1)
            scene_fail("grid counts must be integers >= 1");
        grid.counts.push_back(c.get<int>());
    }
    if (!jg.contains("ranges") || !jg["ranges"].is_array() ||
        static_cast<int>(jg["ranges"].size()) != 2 * n)
        scene_fail("grid.ranges must list 2n [lo, hi] pairs");
    for (const auto& rr : jg["ranges"]) {
        if (!rr.is_array() || rr.size() != 2) scene_fail("grid ranges must be [lo, hi] pairs");
        double lo = require_number(rr[0], "grid.range");
        double hi = require_number(rr[1], "grid.range");
        if (!(lo <= hi)) scene_fail("grid range must satisfy lo <= hi");
        grid.ranges.emplace_back(lo, hi);
    }

    double eps = 0.25;
    if (j.contains("eps")) {
        eps = require_number(j["eps"], "eps");
        if (!(eps > 0.0)) scene_fail("eps must be positive");
    }
    double step = 0.1;
    if (j.contains("step")) {
        step = require_number(j["step"], "step");
        if (!(step > 0.0)) scene_fail("step must be positive");
    }

    SceneTolerances tol;
    if (j.contains("tolerances")) {
        const json& jt = j["tolerances"];
        if (!jt.is_object()) scene_fail("'tolerances' must be an object");
        check_keys(jt, {"grid", "cross_check", "coincidence", "quad_rel", "wirtinger", "winding"},
                   "tolerances");
        auto take = [&](const char* key, double& out) {
            if (jt.contains(key)) {
                out = require_number(jt[key], key);
                if (!(out > 0.0)) scene_fail(std::string("tolerance ") + key + " must be positive");
            }
        };
        take("grid", tol.grid);
        take("cross_check", tol.cross_check);
        take("coincidence", tol.coincidence);
        take("quad_rel", tol.quad_rel);
        take("wirtinger", tol.wirtinger);
        take("winding", tol.winding);
    }

    bool verify = true;
    if (j.contains("verify")) {
        if (!j["verify"].is_boolean()) scene_fail("'verify' must be a boolean");
        verify = j["verify"].get<bool>();
    }

    std::optional<ComplexPoint> base;
    if (j.contains("base")) base = parse_point(j["base"], n - 1, "base");

    validate_hole(*omega, *hole);

    return Scene{n,
                 std::move(*omega),
                 std::move(*hole),
                 slot,
                 std::move(*f),
                 std::move(reference),
                 std::move(grid),
                 eps,
                 step,
                 tol,
                 verify,
                 std::move(base),
                 std::move(omega_kind),
                 std::move(hole_kind),
                 std::move(hartogs_q)};
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json_text(ss.str(), path.string());
}

ExtensionConfig scene_extension_config(const Scene& scene, bool no_verify,
                                       std::optional<double> tol_override) {
    ExtensionConfig cfg;
    cfg.quadrature.rel_tol = scene.tol.quad_rel;
    cfg.verify = scene.verify && !no_verify;
    cfg.cross_check_tol = tol_override.value_or(scene.tol.cross_check);
    cfg.coincidence_tol = scene.tol.coincidence;
    return cfg;
}

ComplexPoint scene_default_base(const Scene& scene) {
    if (scene.base) return *scene.base;
    if (scene.hole_kind == "closed_polydisc")
        return project_skip(scene.slot, scene.hole.bounds.center);
    if (scene.hole_kind == "hartogs_complement" && scene.slot == 1) {
        std::vector<Complex> cs(static_cast<std::size_t>(scene.n - 1));
        cs[0] = Complex((scene.hartogs_q[1] + 1.0) / 2.0, 0.0);
        return ComplexPoint(std::move(cs));
    }
    // Deterministic grid scan for the first base with a nonempty fiber.
    ProjectedSets proj(scene.omega, scene.hole, scene.slot);
    ComplexPoint pc = project_skip(scene.slot, scene.omega.bounds.center);
    double r = scene.omega.bounds.radius;
    int axes = 2 * (scene.n - 1);
    int m = std::max(4, static_cast<int>(std::floor(std::pow(4096.0, 1.0 / axes))));
    std::optional<ComplexPoint> found;
    odometer_boxes(axes, m, [&](const std::vector<int>& idx) {
        if (found) return;
        std::vector<Complex> cs(static_cast<std::size_t>(scene.n - 1));
        for (int k = 0; k < scene.n - 1; ++k) {
            double re = pc[k].real() - r + 2.0 * r * idx[static_cast<std::size_t>(2 * k)] / (m - 1);
            double im =
                pc[k].imag() - r + 2.0 * r * idx[static_cast<std::size_t>(2 * k + 1)] / (m - 1);
            cs[static_cast<std::size_t>(k)] = Complex(re, im);
        }
        ComplexPoint p(std::move(cs));
        if (proj.in_a(p)) found = std::move(p);
    });
    if (!found) throw GeometryError("no base point with a nonempty fiber was found");
    return *found;
}

// ---------------------------------------------------------------------------
// contour subcommand

namespace {

struct WindingReport {
    int fiber_samples = 0;
    int exterior_samples = 0;
    double max_dev_fiber = 0.0;
    double max_dev_exterior = 0.0;
};

WindingReport winding_checks(const PolygonalContour& contour, const PlanarCompactSet& k,
                             const PlanarOpenSet& u, const QuadratureConfig& qc, int want) {
    WindingReport rep;
    auto one = [](Complex) { return Complex(1.0, 0.0); };
    const int m = 24;
    for (int jx = 0; jx < m && rep.fiber_samples < want; ++jx)
        for (int jy = 0; jy < m && rep.fiber_samples < want; ++jy) {
            Complex w(k.bounds.re_min + k.bounds.width() * jx / (m - 1),
                      k.bounds.im_min + k.bounds.height() * jy / (m - 1));
            if (!k.contains(w)) continue;
            if (distance_to_contour(contour, w) <= contour.h / 8.0) continue;
            IntegralResult r = cauchy_compact(one, contour, w, qc);
            rep.max_dev_fiber = std::max(rep.max_dev_fiber, std::abs(r.value - 1.0));
            ++rep.fiber_samples;
        }
    for (int jx = 0; jx < m && rep.exterior_samples < want; ++jx)
        for (int jy = 0; jy < m && rep.exterior_samples < want; ++jy) {
            Complex w(u.bounds.re_min + u.bounds.width() * jx / (m - 1),
                      u.bounds.im_min + u.bounds.height() * jy / (m - 1));
            if (!u.contains(w)) continue;
            if (encloses(contour, w)) continue;
            if (distance_to_contour(contour, w) <= contour.h / 8.0) continue;
            IntegralResult r = cauchy_compact(one, contour, w, qc);
            rep.max_dev_exterior = std::max(rep.max_dev_exterior, std::abs(r.value));
            ++rep.exterior_samples;
        }
    return rep;
}

PlanarOpenSet omega_fiber_set(const DomainSpec& omega, int slot, const ComplexPoint& base) {
    Complex c = omega.bounds.center[slot - 1];
    double r = omega.bounds.radius;
    auto om = omega.contains;
    return PlanarOpenSet{[om, slot, base](Complex w) { return om(insert_at(base, slot, w)); },
                         Box{c.real() - r, c.real() + r, c.imag() - r, c.imag() + r}};
}

}  // namespace

int cmd_contour(const Scene& scene, const std::optional<ComplexPoint>& base_arg,
                const std::filesystem::path& out_path, std::ostream& report,
                std::optional<double> tol_override) {
    double winding_tol = tol_override.value_or(scene.tol.winding);
    ComplexPoint base = base_arg ? *base_arg : scene_default_base(scene);
    if (base.dim() != scene.n - 1)
        throw SceneError("base point must have dimension n-1 = " + std::to_string(scene.n - 1));

    PlanarCompactSet k = fiber(scene.hole, scene.slot, base);
    if (planar_set_empty_on_grid(k))
        throw GeometryError("empty fiber at base " + format_point(base));
    PlanarOpenSet u = omega_fiber_set(scene.omega, scene.slot, base);
    PolygonalContour contour = build_lattice_contour(k, u, scene.eps);

    std::ofstream out(out_path);
    if (!out) throw Error("cannot write contour file " + out_path.string());
    out << contour_to_json(contour) << "\n";
    out.close();

    QuadratureConfig qc;
    qc.rel_tol = scene.tol.quad_rel;
    WindingReport rep = winding_checks(contour, k, u, qc, 20);
    bool pass = rep.fiber_samples > 0 && rep.max_dev_fiber <= winding_tol &&
                rep.max_dev_exterior <= winding_tol;

    ordered_json out_json;
    ordered_json base_json = ordered_json::array();
    for (int kk = 0; kk < base.dim(); ++kk)
        base_json.push_back({base[kk].real(), base[kk].imag()});
    out_json["base"] = base_json;
    out_json["h"] = contour.h;
    out_json["loops"] = contour.loops.size();
    out_json["edges"] = contour.edge_count();
    out_json["fiber_samples"] = rep.fiber_samples;
    out_json["max_winding_dev_fiber"] = rep.max_dev_fiber;
    out_json["exterior_samples"] = rep.exterior_samples;
    out_json["max_winding_dev_exterior"] = rep.max_dev_exterior;
    out_json["pass"] = pass;
    report << out_json.dump(2) << "\n";

    if (!pass)
        throw ToleranceError("winding check failed: fiber dev " +
                             format_double(rep.max_dev_fiber) + ", exterior dev " +
                             format_double(rep.max_dev_exterior));
    return 0;
}

// ---------------------------------------------------------------------------
// extend subcommand

namespace {

struct GridRow {
    enum class Status { Value, OutsideOmega, Proximity } status = Status::Value;
    ComplexPoint z;
    Complex value{};
    double err = 0.0;
    std::string prov;
    std::optional<double> ref_dev;
};

ComplexPoint grid_point(const GridSpec& grid, int n, std::size_t index) {
    // Last axis fastest.
    int axes = 2 * n;
    std::vector<double> vals(static_cast<std::size_t>(axes), 0.0);
    std::size_t rem = index;
    for (int a = axes - 1; a >= 0; --a) {
        int c = grid.counts[static_cast<std::size_t>(a)];
        int ja = static_cast<int>(rem % static_cast<std::size_t>(c));
        rem /= static_cast<std::size_t>(c);
        auto [lo, hi] = grid.ranges[static_cast<std::size_t>(a)];
        vals[static_cast<std::size_t>(a)] = c == 1 ? lo : lo + (hi - lo) * ja / (c - 1);
    }
    std::vector<Complex> cs(static_cast<std::size_t>(n));
    for (int kk = 0; kk < n; ++kk)
        cs[static_cast<std::size_t>(kk)] = Complex(vals[static_cast<std::size_t>(2 * kk)],
                                                   vals[static_cast<std::size_t>(2 * kk + 1)]);
    return ComplexPoint(std::move(cs));
}

}  // namespace

int cmd_extend(const Scene& scene, const std::filesystem::path& out_path,
               std::ostream& summary, bool no_verify, std::optional<double> tol_override,
               int threads) {
    if (scene.f.non_holomorphic())
        throw HypothesisError(
            "scene function contains conj and is flagged non-holomorphic; extension rejected");
    ExtensionConfig cfg = scene_extension_config(scene, no_verify, std::nullopt);
    double grid_tol = tol_override.value_or(scene.tol.grid);
    ExtensionRun run(scene.omega, scene.hole, scene.slot, scene.eps, scene.step, cfg);

    std::size_t total = 1;
    for (int c : scene.grid.counts) total *= static_cast<std::size_t>(c);
    if (total == 0) scene_fail("empty grid");

    std::vector<GridRow> rows(total);
    int nthreads = std::clamp(threads, 1, 64);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));

    auto work = [&](int tid) {
        try {
            std::size_t begin = total * static_cast<std::size_t>(tid) /
                                static_cast<std::size_t>(nthreads);
            std::size_t end = total * (static_cast<std::size_t>(tid) + 1) /
                              static_cast<std::size_t>(nthreads);
            for (std::size_t idx = begin; idx < end; ++idx) {
                GridRow& row = rows[idx];
                row.z = grid_point(scene.grid, scene.n, idx);
                if (!scene.omega.contains(row.z)) {
                    row.status = GridRow::Status::OutsideOmega;
                    continue;
                }
                try {
                    ExtensionReport rep = extend_at(scene.f, scene.omega, scene.hole,
                                                    scene.slot, row.z, scene.eps, scene.step,
                                                    cfg, &run);
                    row.value = rep.value;
                    row.err = rep.error_estimate;
                    row.prov = rep.provenance.code();
                    if (scene.reference)
                        row.ref_dev = std::abs(rep.value - evaluate(*scene.reference, row.z));
                } catch (const ProximityError&) {
                    row.status = GridRow::Status::Proximity;
                }
            }
        } catch (...) {
            errors[static_cast<std::size_t>(tid)] = std::current_exception();
        }
    };

    if (nthreads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // CSV, rows in grid order.
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write grid file " + out_path.string());
    for (int kk = 1; kk <= scene.n; ++kk)
        out << "re_z" << kk << ",im_z" << kk << ",";
    out << "re_val,im_val,err_est,provenance,ref_dev\n";

    std::map<std::string, std::size_t> prov_counts;
    std::size_t excluded_omega = 0, excluded_prox = 0, evaluated = 0;
    double max_err = 0.0, max_ref_dev = 0.0;
    bool have_ref_dev = false;

    for (const GridRow& row : rows) {
        for (int kk = 0; kk < scene.n; ++kk)
            out << format_double(row.z[kk].real()) << "," << format_double(row.z[kk].imag())
                << ",";
        switch (row.status) {
            case GridRow::Status::OutsideOmega:
                ++excluded_omega;
                out << ",,,excluded_outside_omega,\n";
                break;
            case GridRow::Status::Proximity:
                ++excluded_prox;
                out << ",,,excluded_proximity,\n";
                break;
            case GridRow::Status::Value:
                ++evaluated;
                ++prov_counts[row.prov];
                max_err = std::max(max_err, row.err);
                out << format_double(row.value.real()) << "," << format_double(row.value.imag())
                    << "," << format_double(row.err) << "," << row.prov << ",";
                if (row.ref_dev) {
                    have_ref_dev = true;
                    max_ref_dev = std::max(max_ref_dev, *row.ref_dev);
                    out << format_double(*row.ref_dev);
                }
                out << "\n";
                break;
        }
    }
    out.close();

    bool pass = !have_ref_dev || max_ref_dev <= grid_tol;
    ordered_json s;
    s["rows"] = total;
    s["evaluated"] = evaluated;
    s["excluded_outside_omega"] = excluded_omega;
    s["excluded_proximity"] = excluded_prox;
    ordered_json pc = ordered_json::object();
    for (const auto& [kk, v] : prov_counts) pc[kk] = v;
    s["provenance_counts"] = pc;
    s["max_error_estimate"] = max_err;
    if (have_ref_dev)
        s["max_ref_dev"] = max_ref_dev;
    else
        s["max_ref_dev"] = nullptr;
    s["tolerance"] = grid_tol;
    s["pass"] = pass;
    summary << s.dump(2) << "\n";

    if (!pass)
        throw ToleranceError("max reference deviation " + format_double(max_ref_dev) +
                             " exceeds tolerance " + format_double(grid_tol));
    return 0;
}

// ---------------------------------------------------------------------------
// verify subcommand

int cmd_verify(const Scene& scene, std::ostream& report, std::optional<double> tol_override) {
    double cross_tol = tol_override.value_or(scene.tol.cross_check);
    ExtensionConfig cfg = scene_extension_config(scene, false, tol_override);

    ordered_json props = ordered_json::array();
    bool all_pass = true;
    auto add = [&](const std::string& name, bool pass, const ordered_json& detail) {
        ordered_json entry;
        entry["name"] = name;
        entry["pass"] = pass;
        for (auto it = detail.begin(); it != detail.end(); ++it) entry[it.key()] = it.value();
        props.push_back(entry);
        all_pass = all_pass && pass;
    };
    auto emit = [&]() {
        ordered_json r;
        r["properties"] = props;
        r["pass"] = all_pass;
        report << r.dump(2) << "\n";
    };

    // 1. Holomorphy of the input function on samples of Omega \ A. A conj
    //    witness fails here and aborts before any integration.
    {
        double worst = 0.0;
        ComplexPoint worst_at = scene.omega.bounds.center;
        int used = 0;
        int per_axis = 6;
        std::vector<ComplexPoint> pts;
        odometer_boxes(2 * scene.n, per_axis, [&](const std::vector<int>& idx) {
            if (static_cast<int>(pts.size()) >= 20) return;
            std::vector<Complex> cs(static_cast<std::size_t>(scene.n));
            const Polydisc& ob = scene.omega.bounds;
            for (int kk = 0; kk < scene.n; ++kk) {
                double re = ob.center[kk].real() - ob.radius +
                            2.0 * ob.radius * idx[static_cast<std::size_t>(2 * kk)] /
                                (per_axis - 1);
                double im = ob.center[kk].imag() - ob.radius +
                            2.0 * ob.radius * idx[static_cast<std::size_t>(2 * kk + 1)] /
                                (per_axis - 1);
                cs[static_cast<std::size_t>(kk)] = Complex(re, im);
            }
            ComplexPoint z(std::move(cs));
            if (scene.omega.contains(z) && !scene.hole.contains(z)) pts.push_back(std::move(z));
        });
        for (const ComplexPoint& z : pts) {
            for (int s = 1; s <= scene.n; ++s) {
                try {
                    double rres = wirtinger_residual(scene.f, z, s);
                    ++used;
                    if (rres > worst) {
                        worst = rres;
                        worst_at = z;
                    }
                } catch (const EvaluationError&) {
                    // stencil touched a singularity; skip the sample
                }
            }
        }
        bool pass = used >= 5 && worst <= scene.tol.wirtinger;
        ordered_json d;
        d["stencils"] = used;
        d["max_residual"] = worst;
        d["worst_at"] = format_point(worst_at);
        d["tolerance"] = scene.tol.wirtinger;
        add("function_wirtinger", pass, d);
        if (!pass) {
            emit();
            throw ToleranceError("holomorphy check failed: residual " + format_double(worst) +
                                 " at " + format_point(worst_at));
        }
    }

    ComplexPoint base = scene_default_base(scene);

    // Geometric preconditions surface here; on failure the remaining
    // properties are skipped and the error propagates as exit code 3.
    PlanarCompactSet k = fiber(scene.hole, scene.slot, base);
    PlanarOpenSet u = omega_fiber_set(scene.omega, scene.slot, base);
    PolygonalContour contour;
    try {
        contour = build_lattice_contour(k, u, scene.eps);
        ordered_json d;
        d["base"] = format_point(base);
        d["h"] = contour.h;
        d["loops"] = contour.loops.size();
        d["edges"] = contour.edge_count();
        add("contour_construction", true, d);
    } catch (const GeometryError& e) {
        ordered_json d;
        d["error"] = e.what();
        add("contour_construction", false, d);
        emit();
        throw;
    }

    // Properties 2-7. A stage that throws (geometry, evaluation) still gets
    // the partial report emitted before the error propagates; property blocks
    // stay at one indent level inside this try.
    try {
    // 2. Winding dichotomy.
    {
        WindingReport wrep = winding_checks(contour, k, u, cfg.quadrature, 20);
        bool pass = wrep.fiber_samples > 0 && wrep.max_dev_fiber <= scene.tol.winding &&
                    wrep.max_dev_exterior <= scene.tol.winding;
        ordered_json d;
        d["fiber_samples"] = wrep.fiber_samples;
        d["max_dev_fiber"] = wrep.max_dev_fiber;
        d["exterior_samples"] = wrep.exterior_samples;
        d["max_dev_exterior"] = wrep.max_dev_exterior;
        d["tolerance"] = scene.tol.winding;
        add("winding_dichotomy", pass, d);
    }

    // 3. Contour independence at two lattice resolutions.
    {
        PolygonalContour fine = build_lattice_contour(k, u, scene.eps / 2.0);
        auto fexpr = scene.f;
        int slot = scene.slot;
        auto g = [&fexpr, slot, &base](Complex zeta) {
            return evaluate(fexpr, insert_at(base, slot, zeta));
        };
        std::vector<Complex> samples;
        const int m = 24;
        for (int jx = 0; jx < m && samples.size() < 20; ++jx)
            for (int jy = 0; jy < m && samples.size() < 20; ++jy) {
                Complex w(k.bounds.re_min + k.bounds.width() * jx / (m - 1),
                          k.bounds.im_min + k.bounds.height() * jy / (m - 1));
                if (k.contains(w)) continue;  // off K
                if (!encloses(contour, w) || !encloses(fine, w)) continue;
                if (distance_to_contour(contour, w) <= contour.h / 8.0) continue;
                if (distance_to_contour(fine, w) <= fine.h / 8.0) continue;
                samples.push_back(w);
            }
        double d = contour_agreement(g, contour, fine, samples, cfg.quadrature);
        bool pass = !samples.empty() && d <= cross_tol;
        ordered_json dj;
        dj["samples"] = samples.size();
        dj["max_difference"] = d;
        dj["tolerance"] = cross_tol;
        add("contour_agreement", pass, dj);
    }

    // 4/5. Gluing along a chain and terminal boundary coincidence.
    {
        ExtensionRun run(scene.omega, scene.hole, scene.slot, scene.eps, scene.step, cfg);
        auto overlap = [&run](const ComplexPoint& x, const ComplexPoint& y) {
            auto cx = run.contour_at(x);
            auto cy = run.contour_at(y);
            return sup_distance(x, y) < 0.9 * (cx->rho + cy->rho);
        };
        std::vector<ComplexPoint> chain =
            path_chain(base, run.projected(), scene.step, overlap);
        double worst_glue = 0.0;
        std::string worst_pair = "none";
        for (std::size_t jj = 0; jj + 1 < chain.size(); ++jj) {
            auto f1 = run.contour_at(chain[jj]);
            auto f2 = run.contour_at(chain[jj + 1]);
            auto samples = overlap_samples(scene.hole, *f1, *f2, scene.omega,
                                           cfg.check_samples, cfg.fiber_grid);
            double d = glue_check(scene.f, *f1, *f2, samples, cfg);
            if (d >= worst_glue) {
                worst_glue = d;
                worst_pair = format_point(chain[jj]) + " / " + format_point(chain[jj + 1]);
            }
        }
        ordered_json dg;
        dg["chain_length"] = chain.size();
        dg["max_difference"] = worst_glue;
        dg["worst_pair"] = worst_pair;
        dg["tolerance"] = cross_tol;
        add("gluing_chain", worst_glue <= cross_tol, dg);

        auto fb = run.contour_at(chain.back());
        auto bs = boundary_samples(scene.hole, scene.omega, run.projected(), *fb,
                                   cfg.check_samples, cfg.fiber_grid);
        double db = boundary_coincidence_check(scene.f, scene.omega, scene.hole, scene.slot,
                                               chain.back(), *fb, bs, cfg);
        ordered_json dbj;
        dbj["boundary_base"] = format_point(chain.back());
        dbj["samples"] = bs.size();
        dbj["max_difference"] = db;
        dbj["tolerance"] = cross_tol;
        add("boundary_coincidence", db <= cross_tol, dbj);

        // 6. Holomorphy of the computed extension near the base.
        {
            auto fc = run.contour_at(base);
            auto fexpr = scene.f;
            auto ext_fn = [&fexpr, &fc, &cfg](const ComplexPoint& z) {
                return fiber_extension(fexpr, *fc, z, cfg).value;
            };
            double worst = 0.0;
            int used = 0;
            std::vector<Complex> ws = [&] {
                std::vector<Complex> v;
                const int m = 16;
                PlanarCompactSet kb = fiber(scene.hole, scene.slot, base);
                for (int jx = 0; jx < m && v.size() < 10; ++jx)
                    for (int jy = 0; jy < m && v.size() < 10; ++jy) {
                        Complex w(kb.bounds.re_min + kb.bounds.width() * jx / (m - 1),
                                  kb.bounds.im_min + kb.bounds.height() * jy / (m - 1));
                        if (!encloses(fc->contour, w)) continue;
                        if (distance_to_contour(fc->contour, w) <= fc->contour.h / 5.0)
                            continue;
                        v.push_back(w);
                    }
                return v;
            }();
            for (const Complex& w : ws) {
                ComplexPoint z = insert_at(base, scene.slot, w);
                for (int s = 1; s <= scene.n; ++s) {
                    worst = std::max(worst, wirtinger_residual(ext_fn, z, s, 1e-5));
                    ++used;
                }
            }
            ordered_json dw;
            dw["stencils"] = used;
            dw["max_residual"] = worst;
            dw["tolerance"] = scene.tol.wirtinger;
            add("extension_wirtinger", used > 0 && worst <= scene.tol.wirtinger, dw);
        }
    }

    // 7. Agreement with the reference on a capped sub-grid, fast path.
    if (scene.reference) {
        GridSpec sub = scene.grid;
        for (int& c : sub.counts) c = std::min(c, 7);
        std::size_t total = 1;
        for (int c : sub.counts) total *= static_cast<std::size_t>(c);
        ExtensionConfig fast = cfg;
        fast.verify = false;
        ExtensionRun run(scene.omega, scene.hole, scene.slot, scene.eps, scene.step, fast);
        double worst = 0.0;
        std::size_t evaluated = 0;
        for (std::size_t idx = 0; idx < total; ++idx) {
            ComplexPoint z = grid_point(sub, scene.n, idx);
            if (!scene.omega.contains(z)) continue;
            try {
                ExtensionReport rep = extend_at(scene.f, scene.omega, scene.hole, scene.slot,
                                                z, scene.eps, scene.step, fast, &run);
                worst = std::max(worst, std::abs(rep.value - evaluate(*scene.reference, z)));
                ++evaluated;
            } catch (const ProximityError&) {
            }
        }
        ordered_json dr;
        dr["evaluated"] = evaluated;
        dr["max_deviation"] = worst;
        dr["tolerance"] = scene.tol.grid;
        add("reference_agreement", evaluated > 0 && worst <= scene.tol.grid, dr);
    }
    } catch (const std::exception& e) {
        // report what ran before the failing stage, then propagate it
        ordered_json d;
        d["error"] = e.what();
        add("aborted", false, d);
        emit();
        throw;
    }

    emit();
    if (!all_pass) throw ToleranceError("verification failed; see report");
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const SceneError*>(&e)) return 2;
    if (dynamic_cast<const ParseError*>(&e)) return 2;
    if (dynamic_cast<const HypothesisError*>(&e)) return 2;
    if (dynamic_cast<const GeometryError*>(&e)) return 3;
    if (dynamic_cast<const ToleranceError*>(&e)) return 4;
    return 5;
}

}  // namespace hartogs
