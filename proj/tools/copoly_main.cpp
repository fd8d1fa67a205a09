// copoly: command-line driver for runs, refinement studies and snapshot metrics.
//
//   copoly experiments
//   copoly run --config spots.cfg [--scheme svm2] [--out DIR] [--T 1] [--dt 1e-4] [--seed 7]
//   copoly run --experiment spots [...]
//   copoly refine --axis time --scheme eq [--experiment mesh-refinement] [--levels 5] [--report r.json]
//   copoly metrics out/snapshot_0000.bin ...
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "copoly/harness.hpp"
#include "copoly/io.hpp"

namespace fs = std::filesystem;
using namespace copoly;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int cmd_experiments() {
    std::cout << std::left << std::setw(22) << "name" << std::setw(6) << "n" << std::setw(10) << "dt" << std::setw(8)
              << "T" << "description\n";
    for (const auto& e : builtin_experiments())
        std::cout << std::left << std::setw(22) << e.name << std::setw(6) << e.n << std::setw(10) << e.dt
                  << std::setw(8) << e.T << e.description << "\n";
    return 0;
}

struct RunArgs {
    std::string config, experiment, scheme, out;
    std::optional<double> T, dt;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
};

std::string snapshot_name(int k, double t) {
    std::ostringstream o;
    o << "snapshot_" << std::setw(4) << std::setfill('0') << k << "_t" << std::fixed << std::setprecision(6) << t
      << ".bin";
    return o.str();
}

int cmd_run(const RunArgs& a) {
    if (a.config.empty() == a.experiment.empty()) throw UsageError("run: give exactly one of --config or --experiment");
    RunConfig cfg = a.config.empty() ? parse_config("experiment = " + a.experiment + "\n") : load_config(a.config);
    if (!a.scheme.empty()) {
        try {
            cfg.scheme = parse_scheme(a.scheme);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (a.T) cfg.T = *a.T;
    if (a.dt) cfg.dt = *a.dt;
    if (a.n) cfg.nx = cfg.ny = *a.n;
    if (a.seed) cfg.seed = *a.seed;
    cfg = parse_config(serialize_config(cfg));  // re-validate command-line overrides

    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    {
        std::ofstream f(out / "config.cfg");
        f << serialize_config(cfg);
    }

    const Grid2D grid = cfg.grid();
    const FieldTriple phi0 = initial_fields(cfg.spec, grid, cfg.seed);
    const ModelParams params = model_for(cfg.spec, phi0);
    const StepContext ctx(params, make_coupling(cfg.spec.coupling), grid, cfg.dt, cfg.stepper_options());

    EnergyLogWriter log(out / "energy.csv");
    int snap = 0;
    RunOptions ro;
    ro.T = cfg.T;
    ro.snapshot_times = cfg.snapshot_times;
    ro.on_step = [&](const StepRecord& r) { log.write(r); };
    ro.on_snapshot = [&](const PhaseState& s, double t) { write_snapshot(s, t, out / snapshot_name(snap++, t)); };

    std::cerr << "run: experiment=" << cfg.experiment << " scheme=" << to_string(cfg.scheme) << " grid=" << cfg.nx
              << "x" << cfg.ny << " dt=" << cfg.dt << " T=" << cfg.T << " steps=" << step_count(cfg.T, cfg.dt)
              << "\n";
    const RunResult rr = run(cfg.scheme, phi0, ctx, ro);
    if (rr.failed) {
        std::cerr << "run failed at t=" << rr.t_final << ": " << rr.error << "\n";
        return kRuntimeError;
    }
    const double e_end = rr.records.empty() ? rr.initial_energy : rr.records.back().energy;
    std::cerr << "done: " << rr.records.size() << " steps, energy " << std::setprecision(12) << rr.initial_energy
              << " -> " << e_end << ", " << snap << " snapshots in " << out.string() << "\n";
    return 0;
}

struct RefineArgs {
    std::string axis = "time", scheme = "svm2", experiment = "mesh-refinement", report;
    int levels = 5;
    std::optional<int> n;
    std::optional<double> dt, T;
    std::uint64_t seed = 1;
};

int cmd_refine(const RefineArgs& a) {
    RefinementSettings st;
    ExperimentSpec spec;
    try {
        st.axis = parse_axis(a.axis);
        st.scheme = parse_scheme(a.scheme);
        spec = find_experiment(a.experiment);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    st.levels = a.levels;
    st.seed = a.seed;
    if (st.axis == RefinementAxis::Time) {
        st.n = a.n.value_or(64);
        st.dt = a.dt.value_or(0.05);
    } else {
        st.n = a.n.value_or(8);
        st.dt = a.dt.value_or(1e-3);
    }
    st.T = a.T.value_or(1.0);
    const RefinementReport rep = refinement_study(spec, st);
    std::cout << format_refinement_table(rep);
    if (!a.report.empty()) write_refinement_report(rep, a.report);
    return rep.complete ? 0 : kRuntimeError;
}

int cmd_metrics(const std::vector<std::string>& files) {
    std::size_t width = std::string("snapshot").size();
    for (const auto& f : files) width = std::max(width, f.size());
    const int name_w = static_cast<int>(width) + 2;
    std::cout << std::left << std::setw(name_w) << "snapshot" << std::setw(12) << "t" << std::setw(12) << "angle_deg"
              << std::setw(12) << "anisotropy" << "\n";
    for (const auto& f : files) {
        const Snapshot s = read_snapshot(f);
        const StructureMetrics m = structure_metrics(s.state.phi);
        std::cout << std::left << std::setw(name_w) << f << std::setw(12) << s.t << std::setw(12)
                  << (m.angle_defined ? std::to_string(m.angle_deg) : std::string("undefined")) << std::setw(12)
                  << m.anisotropy << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ternary copolymer phase-field simulator"};
    app.require_subcommand(1);

    auto* experiments = app.add_subcommand("experiments", "List built-in experiments");

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Run one simulation (energy log + snapshots)");
    run_cmd->add_option("--config", ra.config, "Configuration file")->check(CLI::ExistingFile);
    run_cmd->add_option("--experiment", ra.experiment, "Built-in experiment with its defaults");
    run_cmd->add_option("--scheme", ra.scheme, "eq | svm1 | svm2 | svm3 | svm4");
    run_cmd->add_option("--out", ra.out, "Output directory");
    run_cmd->add_option("--T", ra.T, "Final time");
    run_cmd->add_option("--dt", ra.dt, "Time step");
    run_cmd->add_option("--n", ra.n, "Cells per side");
    run_cmd->add_option("--seed", ra.seed, "Random seed");

    RefineArgs fa;
    auto* refine = app.add_subcommand("refine", "Refinement study (temporal or spatial order)");
    refine->add_option("--axis", fa.axis, "time | space")->capture_default_str();
    refine->add_option("--scheme", fa.scheme, "eq | svm1 | svm2 | svm3 | svm4")->capture_default_str();
    refine->add_option("--experiment", fa.experiment, "Built-in experiment")->capture_default_str();
    refine->add_option("--levels", fa.levels, "Number of levels")->capture_default_str()->check(CLI::Range(2, 12));
    refine->add_option("--n", fa.n, "Grid (time axis) or coarsest grid (space axis)");
    refine->add_option("--dt", fa.dt, "Coarsest dt (time axis) or fixed dt (space axis)");
    refine->add_option("--T", fa.T, "Final time");
    refine->add_option("--seed", fa.seed, "Random seed")->capture_default_str();
    refine->add_option("--report", fa.report, "Write the report as JSON");

    std::vector<std::string> snaps;
    auto* metrics = app.add_subcommand("metrics", "Structure metrics of snapshot files");
    metrics->add_option("snapshots", snaps, "Snapshot files")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*experiments) return cmd_experiments();
        if (*run_cmd) return cmd_run(ra);
        if (*refine) return cmd_refine(fa);
        if (*metrics) return cmd_metrics(snaps);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kUsageError;
}
