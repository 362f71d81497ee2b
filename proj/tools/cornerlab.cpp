#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cornerlab/scenario.hpp"

namespace fs = std::filesystem;
using namespace cornerlab;

namespace {

fs::path preset_dir() {
    if (const char* d = std::getenv("CORNERLAB_PRESET_DIR")) return d;
    return CORNERLAB_PRESET_DIR;
}

Scenario resolve_scenario(const std::string& arg) {
    if (fs::is_regular_file(arg)) return load_scenario(arg);
    const fs::path preset = preset_dir() / (arg + ".json");
    if (fs::exists(preset)) return load_scenario(preset);
    throw SchemaError("no scenario file or preset named '" + arg + "'");
}

// Validated but otherwise advisory: every analysis runs serially, which
// satisfies any cap and keeps the artifacts bit-identical.
void check_thread_cap() {
    const char* v = std::getenv("CORNERLAB_THREADS");
    if (!v) return;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) throw SchemaError("CORNERLAB_THREADS must be a positive integer");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streamline topology and corner singularities of potential flow around obstacles"};
    app.require_subcommand(1);

    std::string scenario_arg, out_dir = "out", gamma_arg;
    double resolution = 0.0, mach_inf = -1.0, gas_gamma = 1.4;
    int refine_levels = -1;
    std::uint64_t seed = 1;
    bool deterministic = true;

    auto add_common = [&](CLI::App* c, bool scenario_required) {
        auto* opt = c->add_option("--scenario", scenario_arg, "Scenario JSON path or preset name");
        if (scenario_required) opt->required();
        c->add_option("--out", out_dir, "Output directory")->capture_default_str();
        c->add_option("--resolution", resolution, "Grid resolution N, giving h = 1/N")->check(CLI::PositiveNumber);
        c->add_option("--refine-levels", refine_levels, "Corner refinement levels")->check(CLI::Range(0, 16));
        c->add_option("--gamma-circ", gamma_arg, "Circulation: a number or 'kutta'");
        c->add_option("--mach-inf", mach_inf, "Free-stream Mach number")->check(CLI::Range(0.0, 0.999999));
        c->add_option("--seed", seed, "Seed for sampling-based checks")->capture_default_str();
        c->add_flag("--deterministic,!--no-deterministic", deterministic, "Bit-identical artifacts (default on)");
    };
    CLI::App* solve = app.add_subcommand("solve", "Solve the flow and run the scenario's requested analyses");
    CLI::App* trace = app.add_subcommand("trace", "Trace the body streamline and classify its topology");
    CLI::App* sweep = app.add_subcommand("sweep", "Corner exponents over a circulation sweep");
    CLI::App* theorem = app.add_subcommand("verify-theorem", "Sweep plus the three-corner verdict");
    CLI::App* render = app.add_subcommand("render", "Write the streamline figure as SVG");
    CLI::App* gas = app.add_subcommand("gas-table", "Tabulate the gas closure against the speed");
    for (CLI::App* c : {solve, trace, sweep, theorem, render}) add_common(c, true);
    add_common(gas, false);
    gas->add_option("--gamma", gas_gamma, "Adiabatic exponent when no scenario is given")->check(CLI::Range(1.000001, 10.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        check_thread_cap();
        RunOptions opt{seed, deterministic};
        RunOutput out;
        Scenario s;
        if (!scenario_arg.empty()) {
            s = resolve_scenario(scenario_arg);
            if (resolution > 0) s.grid.h = 1.0 / resolution;
            if (refine_levels >= 0) s.grid.refine_levels = refine_levels;
            if (mach_inf >= 0) {
                if (mach_inf > 0 && !s.gas) throw SchemaError("--mach-inf needs a scenario with a gas");
                s.far_field.mach_inf = mach_inf;
            }
            if (!gamma_arg.empty()) {
                if (gamma_arg == "kutta") {
                    if (s.body.type != "karman_trefftz" || s.gas)
                        throw SchemaError("--gamma-circ kutta needs an incompressible karman_trefftz scenario");
                    s.far_field.kutta = true;
                } else {
                    try {
                        std::size_t used = 0;
                        s.far_field.gamma_circ = std::stod(gamma_arg, &used);
                        if (used != gamma_arg.size()) throw std::invalid_argument(gamma_arg);
                    } catch (const std::logic_error&) {
                        throw SchemaError("--gamma-circ: expected a number or 'kutta'");
                    }
                    s.far_field.kutta = false;
                }
            }
        }
        if (command == "solve") out = run_solve(s, opt);
        else if (command == "trace") out = run_trace(s, false);
        else if (command == "render") out = run_trace(s, true);
        else if (command == "sweep") out = run_sweep(s, false, opt);
        else if (command == "verify-theorem") out = run_sweep(s, true, opt);
        else out = run_gas_table(s.gas ? *s.gas : GasModel::normalized(gas_gamma));

        if (!scenario_arg.empty()) out.files.insert(out.files.begin(), Artifact{"scenario.json", s.source});
        write_artifacts(out_dir, out.files);
        write_artifacts(out_dir, {{"manifest.json", manifest_json(command, s.name, out.files, out.status).dump(2) + "\n"}});
        std::cout << command << ": " << out.status << ", " << out.files.size() << " artifacts in " << out_dir << "\n";
        return 0;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
