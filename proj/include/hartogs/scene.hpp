#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hartogs/extension.hpp"

namespace hartogs {

// Grid axes in the order re_z1, im_z1, ..., re_zn, im_zn.
struct GridSpec {
    std::vector<int> counts;
    std::vector<std::pair<double, double>> ranges;
};

struct SceneTolerances {
    double grid = 1e-6;         // |value - reference| over grids
    double cross_check = 1e-8;  // gluing, boundary, contour agreement
    double coincidence = 1e-7;  // |extension - f| where both are defined
    double quad_rel = 1e-10;
    double wirtinger = 1e-6;
    double winding = 1e-9;
};

struct Scene {
    int n;
    DomainSpec omega;
    RemovableSetSpec hole;
    int slot;
    ExprAst f;
    std::optional<ExprAst> reference;
    GridSpec grid;
    double eps;
    double step;
    SceneTolerances tol;
    bool verify;
    std::optional<ComplexPoint> base;
    std::string omega_kind;
    std::string hole_kind;
    std::vector<double> hartogs_q;
};

// Strict parse: unknown keys are rejected, hole ⊂ omega and hole-inside-its-
// bounding-polydisc are spot-checked by sampling at load time.
Scene load_scene(const std::filesystem::path& path);
Scene scene_from_json_text(const std::string& text, const std::string& source_name);

ExtensionConfig scene_extension_config(const Scene& scene, bool no_verify,
                                       std::optional<double> tol_override);

// A base point in pi^i(A): the scene's explicit base if present, otherwise a
// scenario default (hole center projection, or a deterministic grid scan).
ComplexPoint scene_default_base(const Scene& scene);

// Subcommands. Each returns the process exit code; errors escape as
// exceptions and are mapped by exit_code_for.
int cmd_contour(const Scene& scene, const std::optional<ComplexPoint>& base,
                const std::filesystem::path& out_path, std::ostream& report,
                std::optional<double> tol_override = std::nullopt);
int cmd_extend(const Scene& scene, const std::filesystem::path& out_path,
               std::ostream& summary, bool no_verify, std::optional<double> tol_override,
               int threads);
int cmd_verify(const Scene& scene, std::ostream& report, std::optional<double> tol_override);

// 0 pass, 2 scene invalid, 3 geometric precondition failure,
// 4 tolerance violation, 5 internal error.
int exit_code_for(const std::exception& e);

}  // namespace hartogs
