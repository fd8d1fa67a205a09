#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "copoly/harness.hpp"

namespace copoly {

namespace {

Mat3 chi_of(double ab, double as, double bs) {
    Mat3 c;
    c << 0.0, ab, as, ab, 0.0, bs, as, bs, 0.0;
    return c;
}

Mat3 sym(double d0, double d1, double d2, double o01, double o02, double o12) {
    Mat3 m;
    m << d0, o01, o02, o01, d1, o12, o02, o12, d2;
    return m;
}

ExperimentSpec base_spec(std::string name, std::string description) {
    ExperimentSpec s;
    s.name = std::move(name);
    s.description = std::move(description);
    return s;
}

InitialCondition bump(double baseA, double ampA, double baseB, double ampB) {
    InitialCondition ic;
    ic.kind = InitialCondition::Kind::Bump;
    ic.base = {baseA, baseB};
    ic.amp = {ampA, ampB};
    return ic;
}

InitialCondition noise(double baseA, double baseB, double amp) {
    InitialCondition ic;
    ic.kind = InitialCondition::Kind::Noise;
    ic.base = {baseA, baseB};
    ic.amp = {amp, amp};
    return ic;
}

} // namespace

std::string to_string(InitialCondition::Kind k) {
    switch (k) {
        case InitialCondition::Kind::CosineProduct: return "cosine_product";
        case InitialCondition::Kind::Bump: return "bump";
        case InitialCondition::Kind::Noise: return "noise";
        case InitialCondition::Kind::Relaxed: return "relaxed";
    }
    return "?";
}

InitialCondition::Kind parse_initial_kind(const std::string& s) {
    for (auto k : {InitialCondition::Kind::CosineProduct, InitialCondition::Kind::Bump, InitialCondition::Kind::Noise,
                   InitialCondition::Kind::Relaxed})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown initial condition kind '" + s + "'");
}

Vec2 hysteresis_field(double t) {
    double e = 0.0;
    if (t <= 5.0)
        e = 2.0 * t;
    else if (t <= 15.0)
        e = 10.0;
    else if (t <= 20.0)
        e = 40.0 - 2.0 * t;
    return {std::max(e, 0.0), 0.0};
}

Coupling make_coupling(const CouplingSpec& spec) {
    if (const auto* e = std::get_if<ElectricSpec>(&spec)) {
        ElectricParams ep;
        ep.eps0 = e->eps0;
        ep.eps1 = e->eps1;
        if (e->hysteresis) {
            ep.E0 = hysteresis_field;
            ep.field_label = "hysteresis";
        } else {
            ep.E0 = ElectricParams::constant(e->E0);
        }
        return ep;
    }
    if (const auto* m = std::get_if<MagneticParams>(&spec)) return *m;
    return std::monostate{};
}

std::vector<ExperimentSpec> builtin_experiments() {
    std::vector<ExperimentSpec> out;

    {
        auto s = base_spec("mesh-refinement", "Convergence study: smooth cosine-product data, full mobility matrix");
        s.model.N = {3.0, 2.0, 1.0};
        s.model.chi = chi_of(2.0, 3.0, 4.0);
        s.model.eps = 0.1;
        s.model.gamma = 1.0;
        s.model.M = 1e-5 * sym(4, 5, 6, 1, 2, 3);
        s.initial.kind = InitialCondition::Kind::CosineProduct;
        s.initial.base = {0.3, 0.2};
        s.initial.amp = {0.3, 0.2};
        s.n = 64;
        s.dt = 1e-2;
        s.T = 1.0;
        s.paper_n = 256;
        s.paper_dt = 1e-4;
        s.paper_T = 1.0;
        out.push_back(s);
    }

    const Mat3 M_diag = 4e-3 * Mat3::Identity();
    {
        auto s = base_spec("spots", "Spot microphase separation (B spots surrounded by A)");
        s.model.N = {2.0, 1.0, 1.0};
        s.model.chi = chi_of(6.0, 4.0, 8.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e3;
        s.model.M = M_diag;
        s.initial = bump(1.0 / 15.0, 2.0 / 15.0, 1.0 / 30.0, 1.0 / 15.0);
        s.n = 64;
        s.dt = 1e-4;
        s.T = 2.0;
        s.snapshot_times = {0.5, 1.0, 2.0};
        s.paper_T = 20.0;
        out.push_back(s);
    }
    {
        auto s = base_spec("lamellae", "Lamellar microphase separation");
        s.model.N = {1.0, 1.0, 1.0};
        s.model.chi = chi_of(6.0, 6.0, 8.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e4;
        s.model.M = M_diag;
        s.initial = bump(3.0 / 16.0, 1.0 / 16.0, 3.0 / 16.0, 1.0 / 16.0);
        s.n = 64;
        s.dt = 1e-4;
        s.T = 2.0;
        s.snapshot_times = {1.0, 2.0};
        s.paper_T = 80.0;
        out.push_back(s);
    }
    {
        auto s = base_spec("lamellae-spots", "Coexisting lamellae and spots");
        s.model.N = {1.0, 1.0, 1.0};
        s.model.chi = chi_of(6.0, 6.0, 8.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e3;
        s.model.M = M_diag;
        s.initial = bump(0.05, 0.1, 0.05, 0.1);
        s.n = 64;
        s.dt = 1e-4;
        s.T = 2.0;
        s.snapshot_times = {1.0, 2.0};
        s.paper_T = 20.0;
        out.push_back(s);
    }

    const Mat3 mobility_sets[6] = {
        1e-3 * sym(4, 4, 4, 0, 0, 0),       1e-3 * sym(3, 4, 5, 0, 0, 0),
        1e-3 * sym(3, 4, 5, -0.5, 0, 0),    1e-3 * sym(3, 4, 5, -0.5, -0.5, -0.5),
        1e-3 * sym(3, 4, 5, 0.5, 0, 0),     1e-3 * sym(3, 4, 5, 0.5, 0.5, 0.5),
    };
    for (int k = 0; k < 6; ++k) {
        auto s = base_spec("mobility-M" + std::to_string(k + 1), "Cross-coupling effect in mobility, matrix M" +
                                                                     std::to_string(k + 1));
        s.model.N = {3.0, 2.0, 1.0};
        s.model.chi = chi_of(4.0, 6.0, 8.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e4;
        s.model.M = mobility_sets[k];
        s.initial = bump(3.0 / 14.0, 3.0 / 35.0, 1.0 / 7.0, 2.0 / 35.0);
        s.n = 64;
        s.dt = 1e-4;
        s.T = 1.0;
        s.snapshot_times = {0.5, 1.0};
        s.paper_T = 20.0;
        out.push_back(s);
    }

    const Mat3 field_mobility[3] = {
        1e-4 * sym(4, 6, 20, 0, 0, 0),
        1e-4 * sym(4, 6, 20, -1, 0, 0),
        1e-4 * sym(4, 6, 20, -1, -1, -1),
    };
    for (int k = 0; k < 3; ++k) {
        auto s = base_spec("electric-mobility" + std::to_string(k + 1),
                           "Pattern formation under a slanted electric field, mobility " + std::to_string(k + 1));
        s.model.N = {15.0, 10.0, 1.0};
        s.model.chi = chi_of(1.0, 2.0, 4.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e5;
        s.model.M = field_mobility[k];
        s.coupling = ElectricSpec{1.0, 1.0, {10.0, 20.0}, false};
        s.initial = noise(0.3, 0.2, 1e-3);
        s.n = 64;
        s.dt = 5e-5;
        s.T = 2.0;
        s.snapshot_times = {1.0, 2.0};
        s.paper_T = 200.0;
        out.push_back(s);
    }
    for (int k = 0; k < 3; ++k) {
        auto s = base_spec("magnetic-mobility" + std::to_string(k + 1),
                           "Pattern formation under a magnetic field along x, mobility " + std::to_string(k + 1));
        s.model.N = {15.0, 10.0, 1.0};
        s.model.chi = chi_of(1.0, 2.0, 4.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e5;
        s.model.M = field_mobility[k];
        s.coupling = MagneticParams{1e-3, {1.0, 0.0}};
        s.initial = noise(0.3, 0.2, 1e-3);
        s.n = 64;
        s.dt = 5e-5;
        s.T = 2.0;
        s.snapshot_times = {1.0, 2.0};
        s.paper_T = 200.0;
        out.push_back(s);
    }
    {
        auto s = base_spec("hysteresis", "Spot state driven by a ramped electric field, then released");
        s.model.N = {2.0, 1.0, 1.0};
        s.model.chi = chi_of(6.0, 4.0, 8.0);
        s.model.eps = 0.01;
        s.model.gamma = 1e3;
        s.model.M = M_diag;
        s.coupling = ElectricSpec{1.0, 0.6, {0.0, 0.0}, true};
        s.initial.kind = InitialCondition::Kind::Relaxed;
        s.initial.relax_from = "spots";
        s.initial.relax_T = 2.0;
        s.n = 32;
        s.dt = 4e-4;
        s.T = 25.0;
        s.snapshot_times = {5.0, 10.0, 15.0, 20.0, 25.0};
        s.paper_T = 40.0;
        out.push_back(s);
    }
    return out;
}

ExperimentSpec find_experiment(const std::string& name) {
    for (auto& s : builtin_experiments())
        if (s.name == name) return s;
    throw std::invalid_argument("unknown experiment '" + name + "'");
}

FieldTriple initial_fields(const ExperimentSpec& spec, const Grid2D& grid, std::uint64_t seed, double dt_override) {
    const InitialCondition& ic = spec.initial;
    FieldTriple phi = make_triple(grid);
    const double pi = std::numbers::pi;
    switch (ic.kind) {
        case InitialCondition::Kind::CosineProduct:
        case InitialCondition::Kind::Bump: {
            const bool cp = ic.kind == InitialCondition::Kind::CosineProduct;
            for (int j = 0; j < grid.ny(); ++j)
                for (int i = 0; i < grid.nx(); ++i) {
                    const auto c = grid.center(i, j);
                    const double x = c[0] / grid.lx(), y = c[1] / grid.ly();
                    const double shape = cp ? std::cos(pi * x) * std::cos(pi * y)
                                            : (1.0 - std::cos(2.0 * pi * x)) * (1.0 - std::cos(2.0 * pi * y));
                    phi[0](i, j) = ic.base[0] + ic.amp[0] * shape;
                    phi[1](i, j) = ic.base[1] + ic.amp[1] * shape;
                }
            break;
        }
        case InitialCondition::Kind::Noise: {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (int s = 0; s < 2; ++s) {
                ScalarField r(grid);
                for (std::size_t k = 0; k < r.size(); ++k) r[k] = u(rng);
                r += -mean_h(r);
                for (std::size_t k = 0; k < r.size(); ++k) phi[s][k] = ic.base[s] + ic.amp[s] * r[k];
            }
            break;
        }
        case InitialCondition::Kind::Relaxed: {
            if (ic.relax_from.empty() || ic.relax_from == spec.name)
                throw std::invalid_argument("relaxed initial condition needs a different source experiment");
            ExperimentSpec src = find_experiment(ic.relax_from);
            const FieldTriple phi0 = initial_fields(src, grid, seed, dt_override);
            const ModelParams p = model_for(src, phi0);
            const double dt = dt_override > 0.0 ? dt_override : src.dt;
            const StepContext ctx(p, make_coupling(src.coupling), grid, dt);
            RunOptions ro;
            ro.T = ic.relax_T;
            RunResult rr = run(SchemeKind::SVM2, phi0, ctx, ro);
            if (rr.failed) throw std::runtime_error("relaxation run of '" + src.name + "' failed: " + rr.error);
            return rr.final_state.phi;
        }
    }
    for (std::size_t k = 0; k < phi[2].size(); ++k) phi[2][k] = 1.0 - phi[0][k] - phi[1][k];
    return phi;
}

ModelParams model_for(const ExperimentSpec& spec, const FieldTriple& phi) {
    ModelInputs in = spec.model;
    in.phibar = {mean_h(phi[0]), mean_h(phi[1]), 0.0};
    in.phibar[2] = 1.0 - in.phibar[0] - in.phibar[1];
    return ModelParams::make(in);
}

} // namespace copoly
