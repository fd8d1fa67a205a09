#include "copoly/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace copoly {

std::string to_string(RefinementAxis a) { return a == RefinementAxis::Time ? "time" : "space"; }

RefinementAxis parse_axis(const std::string& s) {
    if (s == "time") return RefinementAxis::Time;
    if (s == "space") return RefinementAxis::Space;
    throw std::invalid_argument("unknown refinement axis '" + s + "' (expected time or space)");
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fitted_slope: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double d = n * sxx - sx * sx;
    return d == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sxy - sx * sy) / d;
}

ScalarField restrict_average(const ScalarField& fine) {
    const Grid2D& g = fine.grid();
    if (g.nx() % 2 || g.ny() % 2) throw std::invalid_argument("restrict_average: cell counts must be even");
    const Grid2D coarse(g.nx() / 2, g.ny() / 2, g.lx(), g.ly());
    ScalarField out(coarse);
    for (int j = 0; j < coarse.ny(); ++j)
        for (int i = 0; i < coarse.nx(); ++i)
            out(i, j) = 0.25 * (fine(2 * i, 2 * j) + fine(2 * i + 1, 2 * j) + fine(2 * i, 2 * j + 1) +
                                fine(2 * i + 1, 2 * j + 1));
    return out;
}

RefinementReport refinement_study(const ExperimentSpec& spec, const RefinementSettings& st) {
    if (st.levels < 1) throw std::invalid_argument("refinement_study: need at least one level");
    RefinementReport rep;
    rep.axis = st.axis;
    rep.scheme = st.scheme;
    rep.experiment = spec.name;

    std::vector<FieldTriple> finals;
    for (int k = 0; k < st.levels; ++k) {
        RefinementLevel lv;
        const double scale = std::ldexp(1.0, -k);
        if (st.axis == RefinementAxis::Time) {
            lv.n = st.n;
            lv.dt = st.dt * scale;
            lv.step = lv.dt;
        } else {
            lv.n = st.n << k;
            lv.dt = st.dt;
            lv.step = 1.0 / lv.n;
        }
        lv.error.fill(std::numeric_limits<double>::quiet_NaN());
        lv.error_total = std::numeric_limits<double>::quiet_NaN();
        try {
            const Grid2D grid(lv.n, lv.n);
            const FieldTriple phi0 = initial_fields(spec, grid, st.seed);
            const ModelParams p = model_for(spec, phi0);
            const StepContext ctx(p, make_coupling(spec.coupling), grid, lv.dt, st.options);
            RunOptions ro;
            ro.T = st.T;
            RunResult rr = run(st.scheme, phi0, ctx, ro);
            if (rr.failed) throw std::runtime_error(rr.error);
            for (const auto& r : rr.records) {
                lv.max_abs_alpha = std::max(lv.max_abs_alpha, std::abs(r.alpha));
                lv.max_abs_beta = std::max(lv.max_abs_beta, std::abs(r.beta));
            }
            finals.push_back(std::move(rr.final_state.phi));
        } catch (const std::exception& e) {
            rep.complete = false;
            rep.error = "level " + std::to_string(k) + ": " + e.what();
            rep.levels.push_back(lv);
            break;
        }
        rep.levels.push_back(lv);
    }

    for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
        double tot = 0.0;
        for (int i = 0; i < 3; ++i) {
            const ScalarField finer = st.axis == RefinementAxis::Time ? finals[k + 1][i] : restrict_average(finals[k + 1][i]);
            const double e = norm_h(finals[k][i] - finer);
            rep.levels[k].error[i] = e;
            tot += e * e;
        }
        rep.levels[k].error_total = std::sqrt(tot);
    }
    std::vector<double> xs, es;
    for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
        xs.push_back(rep.levels[k].step);
        es.push_back(rep.levels[k].error_total);
        if (k + 2 < finals.size())
            rep.observed_orders.push_back(std::log2(rep.levels[k].error_total / rep.levels[k + 1].error_total));
    }
    rep.fitted_order = fitted_slope(xs, es);

    std::vector<double> dts, alphas;
    for (std::size_t k = 0; k < finals.size(); ++k)
        if (rep.levels[k].max_abs_alpha > 0.0) {
            dts.push_back(rep.levels[k].dt);
            alphas.push_back(rep.levels[k].max_abs_alpha);
        }
    rep.alpha_order = fitted_slope(dts, alphas);
    return rep;
}

StructureMetrics structure_metrics(const FieldTriple& phi) {
    const ScalarField v = phi[0] - phi[1];
    const auto [gx, gy] = grad_h(v, BoundaryKind::neumann());
    double jxx = 0.0, jxy = 0.0, jyy = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        jxx += gx[k] * gx[k];
        jxy += gx[k] * gy[k];
        jyy += gy[k] * gy[k];
    }
    StructureMetrics m;
    const double tr = jxx + jyy;
    if (!(tr > 0.0) || !std::isfinite(tr)) return m;
    const double disc = std::sqrt((jxx - jyy) * (jxx - jyy) + 4.0 * jxy * jxy);
    m.anisotropy = std::clamp(disc / tr, 0.0, 1.0);
    if (disc <= 1e-14 * tr) return m;  // isotropic: no dominant direction
    double ang = 0.5 * std::atan2(2.0 * jxy, jxx - jyy) * 180.0 / std::numbers::pi;
    if (ang < 0.0) ang += 180.0;
    if (ang >= 180.0) ang -= 180.0;
    m.angle_deg = ang;
    m.angle_defined = true;
    return m;
}

double angle_between_deg(double a, double b) {
    double d = std::fmod(std::abs(a - b), 180.0);
    return d > 90.0 ? 180.0 - d : d;
}

} // namespace copoly
