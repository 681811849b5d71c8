// Command line front door: contour / extend / verify over JSON scene files.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hartogs/scene.hpp"

namespace {

hartogs::ComplexPoint parse_base_flag(const std::vector<double>& vals) {
    if (vals.empty() || vals.size() % 2 != 0)
        throw hartogs::SceneError("--base expects an even list: re,im per coordinate");
    std::vector<hartogs::Complex> cs;
    for (std::size_t k = 0; k + 1 < vals.size(); k += 2)
        cs.emplace_back(vals[k], vals[k + 1]);
    return hartogs::ComplexPoint(std::move(cs));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical holomorphic extension through compact fibers"};
    app.require_subcommand(1);

    std::string scene_path;
    std::string out_path;
    std::vector<double> base_vals;
    bool no_verify = false;
    std::optional<double> tolerance;
    int threads = 1;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--scene", scene_path, "scene JSON file")->required();
        if (needs_out) cmd->add_option("--out", out_path, "output file path")->required();
        cmd->add_option("--tolerance", tolerance, "override the governing tolerance");
    };

    CLI::App* contour = app.add_subcommand("contour", "build a fiber contour, check windings");
    add_common(contour, true);
    contour
        ->add_option("--base", base_vals,
                     "base point in C^(n-1) as re,im pairs (defaults per scenario)")
        ->delimiter(',');

    CLI::App* extend = app.add_subcommand("extend", "evaluate the extension over the scene grid");
    add_common(extend, true);
    extend->add_flag("--no-verify", no_verify, "skip chain/gluing verification (fast path)");
    extend->add_option("--threads", threads, "worker threads for grid evaluation")
        ->check(CLI::Range(1, 64));

    CLI::App* verify = app.add_subcommand("verify", "run the property suite at scene scale");
    add_common(verify, false);
    verify->add_option("--out", out_path, "write the JSON report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        hartogs::Scene scene = hartogs::load_scene(scene_path);
        if (contour->parsed()) {
            std::optional<hartogs::ComplexPoint> base;
            if (!base_vals.empty()) base = parse_base_flag(base_vals);
            return hartogs::cmd_contour(scene, base, out_path, std::cout, tolerance);
        }
        if (extend->parsed())
            return hartogs::cmd_extend(scene, out_path, std::cout, no_verify, tolerance,
                                       threads);
        if (!out_path.empty()) {
            std::ofstream report(out_path);
            if (!report) throw hartogs::Error("cannot write report file " + out_path);
            return hartogs::cmd_verify(scene, report, tolerance);
        }
        return hartogs::cmd_verify(scene, std::cout, tolerance);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hartogs::exit_code_for(e);
    }
}
