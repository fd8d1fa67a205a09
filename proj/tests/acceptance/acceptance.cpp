// Acceptance runner: each criterion prints exactly one "[PASS] name: ..." or
// "[FAIL] name: ..." line on stdout; progress and per-case numbers go to stderr.
//
//   copoly_acceptance                       run every criterion
//   copoly_acceptance --criterion NAME ...  run the named criteria
//   copoly_acceptance --list                list criterion names
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copoly/couplings.hpp"
#include "copoly/harness.hpp"
#include "copoly/integrators.hpp"
#include "copoly/model.hpp"
#include "copoly/spectral.hpp"
#include "oracles.hpp"

using namespace copoly;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::string summary;
    std::function<Verdict()> check;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void progress(const std::string& msg) { std::cerr << "  .. " << msg << std::endl; }

// ---------------------------------------------------------------------------
// Refinement ladders

constexpr double kTemporalDt = 5e-2;   // coarsest step, halved four times
constexpr double kSpatialDt = 1e-3;    // fixed step of the grid ladder
constexpr int kTemporalGrid = 64;
constexpr int kSpatialCoarsest = 8;

RefinementReport temporal_ladder(SchemeKind scheme) {
    RefinementSettings s;
    s.axis = RefinementAxis::Time;
    s.scheme = scheme;
    s.levels = 5;
    s.n = kTemporalGrid;
    s.dt = kTemporalDt;
    s.T = 1.0;
    return refinement_study(find_experiment("mesh-refinement"), s);
}

Verdict ladder_slopes(RefinementAxis axis, const std::vector<SchemeKind>& schemes, bool use_alpha, double lo,
                      double hi) {
    Verdict v{true, ""};
    std::ostringstream out;
    for (SchemeKind scheme : schemes) {
        RefinementReport r;
        if (axis == RefinementAxis::Time) {
            r = temporal_ladder(scheme);
        } else {
            RefinementSettings s;
            s.axis = RefinementAxis::Space;
            s.scheme = scheme;
            s.levels = 5;
            s.n = kSpatialCoarsest;
            s.dt = kSpatialDt;
            s.T = 1.0;
            r = refinement_study(find_experiment("mesh-refinement"), s);
        }
        const double slope = use_alpha ? r.alpha_order : r.fitted_order;
        std::ostringstream lvl;
        for (const auto& l : r.levels)
            lvl << " [" << l.step << ": err " << l.error_total << ", max|alpha| " << l.max_abs_alpha << "]";
        progress(to_string(scheme) + " slope " + fmt("%.3f", slope) + lvl.str());
        const bool ok = r.complete && std::isfinite(slope) && slope >= lo && slope <= hi;
        v.pass = v.pass && ok;
        out << to_string(scheme) << ' ' << (r.complete ? fmt("%.3f", slope) : "incomplete (" + r.error + ")")
            << (ok ? "" : "*") << "; ";
    }
    v.detail = out.str() + "required [" + fmt("%.1f", lo) + ", " + fmt("%.1f", hi) + "]";
    return v;
}

Verdict temporal_order() {
    return ladder_slopes(RefinementAxis::Time, {kAllSchemes.begin(), kAllSchemes.end()}, false, 1.8, 2.2);
}

Verdict spatial_order() {
    return ladder_slopes(RefinementAxis::Space, {kAllSchemes.begin(), kAllSchemes.end()}, false, 1.8, 2.2);
}

Verdict alpha_scaling() {
    return ladder_slopes(RefinementAxis::Time, {SchemeKind::SVM1, SchemeKind::SVM2, SchemeKind::SVM3, SchemeKind::SVM4},
                         true, 1.7, 2.3);
}

// ---------------------------------------------------------------------------
// Full runs of built-in experiments

struct ExperimentRun {
    FieldTriple phi0;
    RunResult result;
};

ExperimentRun run_experiment(const ExperimentSpec& spec, SchemeKind scheme, double T, RunOptions opts = {},
                             std::uint64_t seed = 1) {
    const Grid2D grid(spec.n, spec.n);
    ExperimentRun out{initial_fields(spec, grid, seed), {}};
    const StepContext ctx(model_for(spec, out.phi0), make_coupling(spec.coupling), grid, spec.dt);
    opts.T = T;
    out.result = run(scheme, out.phi0, ctx, opts);
    return out;
}

Verdict energy_dissipation() {
    const ExperimentSpec spec = find_experiment("spots");
    constexpr double tol = 1e-11;
    Verdict v{true, ""};
    std::ostringstream out;
    for (SchemeKind scheme : kAllSchemes) {
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentRun r = run_experiment(spec, scheme, spec.T);
        const auto& rec = r.result.records;
        double prev = r.result.initial_energy, worst_inc = -INFINITY, worst_rate = 0.0;
        for (const StepRecord& s : rec) {
            const double scale = std::max(1.0, std::abs(prev));
            worst_inc = std::max(worst_inc, (s.energy - prev) / std::abs(prev));
            worst_rate = std::max(worst_rate, std::abs(s.energy - prev - s.dissipation) / scale);
            prev = s.energy;
        }
        const bool svm = scheme != SchemeKind::EQ;
        const bool ok = !r.result.failed && worst_inc <= tol && (!svm || worst_rate <= tol);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        progress(to_string(scheme) + ": " + std::to_string(rec.size()) + " steps in " + fmt("%.0f s", secs) +
                 ", F(0) = " + fmt("%.8f", r.result.initial_energy) + ", F(T) = " + fmt("%.8f", prev) +
                 ", max rel increment " + fmt("%.3e", worst_inc) + ", max rate mismatch " + fmt("%.3e", worst_rate) +
                 (r.result.failed ? ", failed: " + r.result.error : ""));
        v.pass = v.pass && ok;
        out << to_string(scheme) << " inc " << fmt("%.2e", worst_inc);
        if (svm) out << " rate " << fmt("%.2e", worst_rate);
        out << (ok ? "" : "*") << "; ";
    }
    v.detail = out.str() + "required <= 1e-11";
    return v;
}

Verdict conservation() {
    constexpr int steps = 40;  // per experiment; the property is step-local
    constexpr double mean_tol = 1e-12, simplex_tol = 1e-11;
    Verdict v{true, ""};
    double worst_mean = 0.0, worst_simplex = 0.0;
    const auto specs = builtin_experiments();
    for (std::size_t e = 0; e < specs.size(); ++e) {
        const ExperimentSpec& spec = specs[e];
        const SchemeKind scheme = kAllSchemes[e % kAllSchemes.size()];
        const double T = steps * spec.dt;
        RunOptions opts;
        for (int k = 1; k <= steps; ++k) opts.snapshot_times.push_back(k * spec.dt);
        std::array<double, 3> m0{};
        bool have_m0 = false;
        double dm = 0.0, ds = 0.0;
        int seen = 0;
        opts.on_snapshot = [&](const PhaseState& s, double) {
            if (!have_m0) {
                for (int i = 0; i < 3; ++i) m0[static_cast<std::size_t>(i)] = mean_h(s.phi[i]);
                have_m0 = true;
            }
            for (int i = 0; i < 3; ++i) dm = std::max(dm, std::abs(mean_h(s.phi[i]) - m0[static_cast<std::size_t>(i)]));
            ds = std::max(ds, simplex_defect(s.phi));
            ++seen;
        };
        const ExperimentRun r = run_experiment(spec, scheme, T, opts);
        const bool ok = !r.result.failed && seen >= steps && dm <= mean_tol && ds <= simplex_tol;
        progress(spec.name + " (" + to_string(scheme) + ", " + std::to_string(seen) + " states): mean drift " +
                 fmt("%.2e", dm) + ", simplex " + fmt("%.2e", ds) + (ok ? "" : "  <-- FAIL"));
        v.pass = v.pass && ok;
        worst_mean = std::max(worst_mean, dm);
        worst_simplex = std::max(worst_simplex, ds);
    }
    v.detail = std::to_string(specs.size()) + " experiments x " + std::to_string(steps) + " steps; mean drift " +
               fmt("%.2e", worst_mean) + " (<= 1e-12), simplex defect " + fmt("%.2e", worst_simplex) +
               " (<= 1e-11)";
    return v;
}

// ---------------------------------------------------------------------------
// Dense and stencil oracles on 8x8 grids

double rel_max(const Eigen::VectorXd& got, const Eigen::VectorXd& ref) {
    return (got - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
}

Verdict oracle_equivalence() {
    constexpr double tol = 1e-9;
    const Grid2D g(8, 8);
    const FieldTriple phi = oracle::random_state(g, 2024);
    const ModelParams p = model_for(find_experiment("mesh-refinement"), phi);

    // Crank-Nicolson block Helmholtz solve.
    const double dt = 0.05;
    const BlockHelmholtzPlan H(CosineBasisPlan::shared(g), p.symbol(), p.m_eff, dt);
    const FieldTriple rhs = oracle::random_state(g, 2025);
    const Eigen::VectorXd h_ref = oracle::helmholtz_matrix(g, p, dt).partialPivLu().solve(oracle::to_vec(rhs));
    const double e_helm = rel_max(oracle::to_vec(solve_block_helmholtz(H, rhs)), h_ref);

    // Nonlocal potential: least-squares solve of [Lap; 1^T] psi = [phi - phibar; 0].
    const double phibar = mean_h(phi[0]);
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd aug(n + 1, n);
    aug.topRows(n) = oracle::laplacian_matrix(g);
    aug.row(n).setOnes();
    Eigen::VectorXd b(n + 1);
    b.head(n) = oracle::to_vec(phi[0]).array() - phibar;
    b[n] = 0.0;
    const Eigen::VectorXd psi_ref = aug.colPivHouseholderQr().solve(b);
    const double e_psi = rel_max(oracle::to_vec(solve_psi(phi[0], phibar)), psi_ref);

    // One EQ step against the dense linear system.
    FieldTriple prev = phi;
    const ScalarField kick = oracle::random_field(g, 2026, -0.01, 0.01);
    prev[0] += kick;
    prev[2] -= kick;
    const StepContext ctx(p, std::monostate{}, g, 0.01);
    const EqResult eq = eq_step({prev, std::nullopt, std::nullopt}, {phi, std::nullopt, std::nullopt}, 0.0, ctx);
    const oracle::EqDenseStep eq_ref = oracle::eq_step_dense(prev, phi, p, 0.01);
    const double e_eq = std::max(rel_max(oracle::to_vec(eq.next.phi), eq_ref.phi), rel_max(oracle::to_vec(*eq.next.q), eq_ref.q));

    // Gauss law: library residual vs the stencil oracle at a random potential, and the
    // oracle residual of the solved potential relative to the forcing (residual at Phi = Phi0).
    ElectricParams ep;
    ep.eps0 = 1.0;
    ep.eps1 = 0.6;
    ep.E0 = ElectricParams::constant({10.0, 20.0});
    ep.Phi0 = 0.0;
    ep.phibar_diff = mean_h(phi[0]) - mean_h(phi[1]);
    const auto gauss = [&](const ScalarField& Phi) {
        return oracle::to_vec(oracle::gauss_residual(phi[0], phi[1], Phi, ep.eps0, ep.eps1, ep.field(0.0), ep.Phi0,
                                                     ep.phibar_diff));
    };
    const ScalarField Phi_rand = oracle::random_field(g, 2027);
    const double e_res = rel_max(oracle::to_vec(electric_residual(phi[0], phi[1], Phi_rand, ep, 0.0)), gauss(Phi_rand));
    const PotentialSolve sol = solve_electric_potential(phi[0], phi[1], ep, 0.0);
    const double e_sol = gauss(sol.Phi).norm() / gauss(ScalarField(g, ep.Phi0)).norm();

    const double worst = std::max({e_helm, e_psi, e_eq, e_res, e_sol});
    Verdict v{worst <= tol, ""};
    v.detail = "helmholtz " + fmt("%.1e", e_helm) + ", psi " + fmt("%.1e", e_psi) + ", eq step " + fmt("%.1e", e_eq) +
               ", gauss residual " + fmt("%.1e", e_res) + ", solved potential " + fmt("%.1e", e_sol) +
               "; required <= 1e-9 relative";
    return v;
}

// ---------------------------------------------------------------------------
// Gradient checks: F, F + E_m and F - W (potential frozen) against the claimed
// variational derivatives, by the Richardson order of central differences.

Verdict gradient_suite() {
    constexpr double d = 1e-2;
    const Grid2D g(8, 8);
    const FieldTriple phi0 = oracle::random_state(g, 77);
    const ModelParams p = model_for(find_experiment("spots"), phi0);
    const FieldTriple mu = chemical_potentials(phi0, p);
    const double area = g.cell_area();

    const MagneticParams mp{1.0, {std::cos(0.3), std::sin(0.3)}};
    const ScalarField mum = magnetic_mu(phi0[0], phi0[1], mp);

    ElectricParams ep;
    ep.eps0 = 1.0;
    ep.eps1 = 0.6;
    ep.E0 = ElectricParams::constant({10.0, 20.0});
    ep.phibar_diff = p.phibar[0] - p.phibar[1];
    const ScalarField Phi = solve_electric_potential(phi0[0], phi0[1], ep, 0.0).Phi;
    const ScalarField mue = electric_mu(Phi, ep, 0.0);

    struct Functional {
        const char* name;
        std::function<double(const FieldTriple&)> energy;
        const ScalarField* coupling;  // potential entering A with +, B with -
    };
    const std::vector<Functional> functionals{
        {"chemical_potentials", [&](const FieldTriple& x) { return free_energy_h(x, p); }, nullptr},
        {"magnetic_mu", [&](const FieldTriple& x) { return free_energy_h(x, p) + magnetic_energy(x[0], x[1], mp); },
         &mum},
        {"electric_mu", [&](const FieldTriple& x) { return free_energy_h(x, p) - electric_energy(x[0], x[1], Phi, ep, 0.0); },
         &mue},
    };

    Verdict v{true, ""};
    std::ostringstream out;
    for (const Functional& f : functionals) {
        double lo = INFINITY, hi = -INFINITY;
        for (int s = 0; s < 3; ++s)
            for (std::size_t cell : {std::size_t{0}, std::size_t{19}, std::size_t{42}, std::size_t{63}}) {
                const double sign = s == 0 ? 1.0 : s == 1 ? -1.0 : 0.0;
                const double claimed = (mu[s][cell] + (f.coupling ? sign * (*f.coupling)[cell] : 0.0)) * area;
                const auto E = [&](double h) {
                    FieldTriple x = phi0;
                    x[s][cell] += h;
                    return f.energy(x);
                };
                const double order = oracle::richardson_order(E, claimed, d);
                lo = std::min(lo, order);
                hi = std::max(hi, order);
            }
        const bool ok = lo >= 1.9 && hi <= 2.1;
        progress(std::string(f.name) + ": Richardson orders in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "]");
        v.pass = v.pass && ok;
        out << f.name << " [" << fmt("%.3f", lo) << ", " << fmt("%.3f", hi) << "]" << (ok ? "" : "*") << "; ";
    }
    v.detail = out.str() + "required 2.0 +- 0.1";
    return v;
}

// ---------------------------------------------------------------------------
// Qualitative pattern properties

Verdict field_alignment() {
    Verdict v{true, ""};
    std::ostringstream out;
    for (const char* name : {"electric-mobility1", "magnetic-mobility1"}) {
        const ExperimentSpec spec = find_experiment(name);
        Vec2 field{};
        if (const auto* e = std::get_if<ElectricSpec>(&spec.coupling)) field = e->E0;
        if (const auto* m = std::get_if<MagneticParams>(&spec.coupling)) field = m->B0;
        const double field_deg = std::atan2(field[1], field[0]) * 180.0 / std::numbers::pi;
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentRun r = run_experiment(spec, SchemeKind::SVM2, spec.T);
        const StructureMetrics m = structure_metrics(r.result.final_state.phi);
        const double off = m.angle_defined ? angle_between_deg(m.angle_deg, field_deg + 90.0) : 90.0;
        const bool ok = !r.result.failed && m.anisotropy >= 0.5 && off <= 15.0;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        progress(std::string(name) + " at T = " + fmt("%g", spec.T) + " (" + fmt("%.0f s", secs) +
                 "): gradient angle " + fmt("%.2f", m.angle_deg) + " deg, field " + fmt("%.2f", field_deg) +
                 " deg, anisotropy " + fmt("%.3f", m.anisotropy));
        v.pass = v.pass && ok;
        out << name << " anisotropy " << fmt("%.3f", m.anisotropy) << ", off-perpendicular " << fmt("%.1f", off)
            << " deg" << (ok ? "" : "*") << "; ";
    }
    v.detail = out.str() + "required anisotropy >= 0.5, <= 15 deg";
    return v;
}

/// Relative L2 difference of a(t_k) and a(t_{N-k}) over the first half of a trace sampled at N+1 points.
double mirror_difference(const std::vector<double>& a, std::size_t full) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = 0; k <= full / 2; ++k) {
        diff += (a[k] - a[full - k]) * (a[k] - a[full - k]);
        norm += a[k] * a[k];
    }
    return std::sqrt(diff / norm);
}

Verdict hysteresis_asymmetry() {
    const ExperimentSpec spec = find_experiment("hysteresis");
    // Material free energy F_h sampled every 0.1 as a diagnostic alongside the logged energy.
    constexpr double sample = 0.1;
    RunOptions opts;
    for (int k = 1; k <= 200; ++k) opts.snapshot_times.push_back(k * sample);
    std::vector<FieldTriple> states;
    opts.on_snapshot = [&](const PhaseState& s, double t) {
        if (t <= 20.0 + 1e-9) states.push_back(s.phi);
    };
    const ExperimentRun r = run_experiment(spec, SchemeKind::SVM2, spec.T, opts);
    if (r.result.failed) return {false, "run failed: " + r.result.error};

    // Logged energy E(t_k), k = 0..N with t_k = k dt; compare E(t) with E(20 - t) on [0, 10].
    std::vector<double> e{r.result.initial_energy};
    for (const StepRecord& s : r.result.records) e.push_back(s.energy);
    const auto full = static_cast<std::size_t>(step_count(20.0, spec.dt));
    if (e.size() <= full) return {false, "trace shorter than t = 20"};
    const double rel = mirror_difference(e, full);

    const ModelParams p = model_for(spec, r.phi0);
    std::vector<double> f;
    for (const FieldTriple& phi : states) f.push_back(free_energy_h(phi, p));
    const double rel_f = f.size() == 201 ? mirror_difference(f, 200) : NAN;

    for (double t : {0.0, 2.5, 5.0, 7.5, 10.0}) {
        const auto k = static_cast<std::size_t>(step_count(t, spec.dt));
        const auto j = static_cast<std::size_t>(std::lround(t / sample));
        progress("t = " + fmt("%g", t) + ": E(t) = " + fmt("%.6f", e[k]) + ", E(20 - t) = " + fmt("%.6f", e[full - k]) +
                 (f.size() == 201 ? ", F_h(t) = " + fmt("%.6f", f[j]) + ", F_h(20 - t) = " + fmt("%.6f", f[200 - j])
                                  : std::string()));
    }
    return {rel >= 0.05, "relative L2 difference of logged E(t) and E(20 - t) on [0, 10]: " + fmt("%.4f", rel) +
                             "; required >= 0.05 (material free energy F_h alone: " + fmt("%.4f", rel_f) + ")"};
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {"temporal-order", "dt ladder 5e-2 / 2^k on 64^2, T = 1: fitted slope in [1.8, 2.2], all schemes",
         temporal_order},
        {"spatial-order", "h ladder 1/8 / 2^k at dt = 1e-3, T = 1: fitted slope in [1.8, 2.2], all schemes",
         spatial_order},
        {"alpha-scaling", "dt ladder: slope of max|alpha| in [1.7, 2.3], SVM1-4", alpha_scaling},
        {"energy-dissipation", "spots 64^2, dt = 1e-4, T = 2: nonincreasing energy, exact SVM rate",
         energy_dissipation},
        {"conservation", "every built-in experiment: means and simplex preserved", conservation},
        {"oracle-equivalence", "8x8 dense / stencil oracles to 1e-9", oracle_equivalence},
        {"gradient-suite", "Richardson order 2 +- 0.1 of central-difference gradients", gradient_suite},
        {"field-alignment", "electric and magnetic desk runs end lamellar, gradient perpendicular to the field",
         field_alignment},
        {"hysteresis-asymmetry", "energy trace under the ramp schedule is not time-symmetric",
         hysteresis_asymmetry},
    };
    return all;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"copoly acceptance checks"};
    std::vector<std::string> selected;
    bool list = false;
    app.add_option("--criterion,-c", selected, "Criterion to run (repeatable); default: all");
    app.add_flag("--list", list, "List the criteria and exit");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const Criterion& c : criteria()) std::cout << c.name << "  " << c.summary << '\n';
        return 0;
    }
    std::vector<const Criterion*> run_list;
    if (selected.empty()) {
        for (const Criterion& c : criteria()) run_list.push_back(&c);
    } else {
        for (const std::string& name : selected) {
            const auto it = std::find_if(criteria().begin(), criteria().end(),
                                         [&](const Criterion& c) { return c.name == name; });
            if (it == criteria().end()) {
                std::cerr << "unknown criterion: " << name << " (see --list)\n";
                return 2;
            }
            run_list.push_back(&*it);
        }
    }

    int failures = 0;
    for (const Criterion* c : run_list) {
        std::cerr << "== " << c->name << ": " << c->summary << std::endl;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c->check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << c->name << ": " << v.detail << " (" << fmt("%.1f s", secs)
                  << ")" << std::endl;
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
