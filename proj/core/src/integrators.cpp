#include "copoly/integrators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace copoly {

std::string to_string(SchemeKind s) {
    switch (s) {
        case SchemeKind::EQ: return "EQ";
        case SchemeKind::SVM1: return "SVM1";
        case SchemeKind::SVM2: return "SVM2";
        case SchemeKind::SVM3: return "SVM3";
        case SchemeKind::SVM4: return "SVM4";
    }
    return "?";
}

SchemeKind parse_scheme(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (SchemeKind k : kAllSchemes)
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown scheme '" + std::string(name) + "' (expected eq, svm1, svm2, svm3 or svm4)");
}

namespace {

FieldTriple combine(const FieldTriple& a, double sa, const FieldTriple& b, double sb) {
    FieldTriple out = a;
    for (int i = 0; i < 3; ++i) {
        out[i] *= sa;
        out[i].axpy(sb, b[i]);
    }
    return out;
}

FieldTriple add(const FieldTriple& a, const FieldTriple& b) { return combine(a, 1.0, b, 1.0); }

double inner3(const FieldTriple& a, const FieldTriple& b) {
    return inner_h(a[0], b[0]) + inner_h(a[1], b[1]) + inner_h(a[2], b[2]);
}

std::array<double, 3> means_of(const FieldTriple& phi) { return {mean_h(phi[0]), mean_h(phi[1]), mean_h(phi[2])}; }

double max_abs3(const FieldTriple& a) { return std::max({max_abs(a[0]), max_abs(a[1]), max_abs(a[2])}); }

/// Eigen-decomposition of the mobility with negative roundoff eigenvalues clamped, so that
/// (mu, m Lap mu)_h is evaluated as a sum of nonpositive terms.
struct PsdMobility {
    Mat3 V;
    Vec3 sigma;
    explicit PsdMobility(const Mat3& m) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m + m.transpose()));
        V = es.eigenvectors();
        sigma = es.eigenvalues().cwiseMax(0.0);
    }
};

/// (mu, m Lap mu)_h computed mode by mode (Parseval for the orthonormal basis).
double dissipation_form(const BlockHelmholtzPlan& H, const FieldTriple& mu) {
    const PsdMobility pm(H.mobility());
    const ModeTriple c = H.forward(mu);
    const auto lam = H.basis().eigenvalues();
    double acc = 0.0;
    for (std::size_t k = 1; k < c[0].size(); ++k) {
        const Vec3 z = pm.V.transpose() * Vec3(c[0][k], c[1][k], c[2][k]);
        acc += lam[k] * (pm.sigma[0] * z[0] * z[0] + pm.sigma[1] * z[1] * z[1] + pm.sigma[2] * z[2] * z[2]);
    }
    return acc * H.grid().cell_area();
}

/// H^{-1} m Lap v.
FieldTriple solve_mobility_laplacian(const BlockHelmholtzPlan& H, const FieldTriple& v) {
    ModeTriple c = H.forward(v);
    const auto lam = H.basis().eigenvalues();
    for (std::size_t k = 0; k < c[0].size(); ++k) {
        const Vec3 r = H.inverse_block(k) * (lam[k] * (H.mobility() * Vec3(c[0][k], c[1][k], c[2][k])));
        c[0][k] = r[0];
        c[1][k] = r[1];
        c[2][k] = r[2];
    }
    return H.inverse(c);
}

FieldTriple phibar_state(const Grid2D& g, const ModelParams& p) {
    return {ScalarField(g, p.phibar[0]), ScalarField(g, p.phibar[1]), ScalarField(g, p.phibar[2])};
}

std::vector<double> flatten(const FieldTriple& f) {
    const std::size_t n = f[0].size();
    std::vector<double> out(3 * n);
    for (int i = 0; i < 3; ++i) std::copy(f[i].values().begin(), f[i].values().end(), out.begin() + i * n);
    return out;
}

FieldTriple unflatten(const Grid2D& g, std::span<const double> x) {
    const std::size_t n = g.size();
    FieldTriple out = make_triple(g);
    for (int i = 0; i < 3; ++i) std::copy(x.begin() + i * n, x.begin() + (i + 1) * n, out[i].values().begin());
    return out;
}

} // namespace

// ------------------------------------------------------------------ StepContext

StepContext::StepContext(const ModelParams& params, Coupling coupling, const Grid2D& grid, double dt,
                         StepperOptions options)
    : params_(params), coupling_(std::move(coupling)), grid_(grid), dt_(dt), options_(options) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("StepContext: dt must be finite and >= 0");
    if (auto* ep = std::get_if<ElectricParams>(&coupling_)) ep->phibar_diff = params_.phibar[0] - params_.phibar[1];
    helmholtz_ = std::make_shared<const BlockHelmholtzPlan>(CosineBasisPlan::shared(grid_), params_.symbol(),
                                                            params_.m_eff, dt_);
}

ScalarField StepContext::solve_potential(const FieldTriple& phi, double t, const ScalarField* guess) const {
    const auto& ep = std::get<ElectricParams>(coupling_);
    PotentialSolve s = solve_electric_potential(phi[0], phi[1], ep, t, guess);
    if (!s.converged) {
        std::ostringstream os;
        os << "electric potential solve did not converge at t = " << t << " (relative residual " << s.residual
           << " after " << s.iterations << " iterations)";
        throw std::runtime_error(os.str());
    }
    return std::move(s.Phi);
}

FieldTriple StepContext::coupling_potential(const FieldTriple& phi, const ScalarField* Phi, double t) const {
    FieldTriple out = make_triple(grid_);
    ScalarField c(grid_);
    if (const auto* mp = std::get_if<MagneticParams>(&coupling_)) {
        c = magnetic_mu(phi[0], phi[1], *mp);
    } else if (const auto* ep = std::get_if<ElectricParams>(&coupling_)) {
        if (!Phi) throw std::logic_error("coupling_potential: electric coupling needs the induced potential");
        c = electric_mu(*Phi, *ep, t);
    } else {
        return out;
    }
    out[0] = c;
    out[1] = -1.0 * c;
    return out;
}

double StepContext::coupling_energy(const FieldTriple& phi, const ScalarField* Phi, double t) const {
    if (const auto* mp = std::get_if<MagneticParams>(&coupling_)) return magnetic_energy(phi[0], phi[1], *mp);
    if (const auto* ep = std::get_if<ElectricParams>(&coupling_)) {
        if (!Phi) throw std::logic_error("coupling_energy: electric coupling needs the induced potential");
        return -electric_energy(phi[0], phi[1], *Phi, *ep, t);
    }
    return 0.0;
}

double StepContext::total_energy(const FieldTriple& phi, const ScalarField* Phi, double t) const {
    return free_energy_h(phi, params_) + coupling_energy(phi, Phi, t);
}

// ------------------------------------------------------------------ StepFunctional

StepFunctional::StepFunctional(const StepContext& ctx, double t, std::optional<ScalarField> frozen_Phi)
    : ctx_(ctx), t_(t), Phi_(std::move(frozen_Phi)) {
    if (ctx_.electric() && !Phi_) throw std::invalid_argument("StepFunctional: electric coupling needs a potential");
}

const ScalarField* StepFunctional::potential_for(const FieldTriple& phi) const {
    if (!ctx_.electric()) return nullptr;
    if (!ctx_.options().refresh_potential_in_newton) return &*Phi_;
    const ScalarField* guess = refreshed_ ? &*refreshed_ : &*Phi_;
    ScalarField next = ctx_.solve_potential(phi, t_, guess);
    refreshed_ = std::move(next);
    return &*refreshed_;
}

double StepFunctional::energy_with(const FieldTriple& phi, const FieldTriple& Lphi) const {
    double e = 0.5 * inner3(phi, Lphi);
    if (ctx_.params().potential != PotentialKind::None)
        e += mean_h(bulk_density(phi, ctx_.params())) * phi[0].grid().area();
    return e + ctx_.coupling_energy(phi, potential_for(phi), t_);
}

FieldTriple StepFunctional::potential_with(const FieldTriple& phi, const FieldTriple& Lphi) const {
    FieldTriple mu = add(Lphi, bulk_derivative(phi, ctx_.params()));
    if (!std::holds_alternative<std::monostate>(ctx_.coupling()))
        mu = add(mu, ctx_.coupling_potential(phi, potential_for(phi), t_));
    return mu;
}

FieldTriple StepFunctional::potential_derivative(const FieldTriple& phi, const FieldTriple& dir,
                                                 const FieldTriple& Ldir) const {
    FieldTriple d = Ldir;
    const FieldTriple f2 = bulk_second_derivative(phi, ctx_.params());
    for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < d[i].size(); ++k) d[i][k] += f2[i][k] * dir[i][k];
    if (const auto* mp = std::get_if<MagneticParams>(&ctx_.coupling())) {
        const ScalarField c = magnetic_mu(dir[0], dir[1], *mp);
        d[0] += c;
        d[1] -= c;
    }
    return d;
}

double StepFunctional::energy(const FieldTriple& phi) const {
    return energy_with(phi, apply_linear(phi, ctx_.params()));
}

FieldTriple StepFunctional::potential(const FieldTriple& phi) const {
    return potential_with(phi, apply_linear(phi, ctx_.params()));
}

// ------------------------------------------------------------------ Newton

NewtonResult newton_beta(double target, const FieldTriple& phi_hat, const FieldTriple& dir, const StepFunctional& U) {
    const StepContext& ctx = U.context();
    const double tol = ctx.options().newton_tol * std::max(1.0, std::abs(target));
    const int maxit = ctx.options().newton_maxit;
    const FieldTriple L_hat = apply_linear(phi_hat, ctx.params());
    const FieldTriple L_dir = apply_linear(dir, ctx.params());
    const bool zero_dir = max_abs3(dir) == 0.0;

    double beta = 0.0;
    for (int k = 0; k <= maxit; ++k) {
        const FieldTriple phi = combine(phi_hat, 1.0, dir, beta);
        const FieldTriple Lphi = combine(L_hat, 1.0, L_dir, beta);
        const double u = U.energy_with(phi, Lphi) - target;
        if (!std::isfinite(u)) throw std::runtime_error("Newton for the supplementary variable produced a non-finite energy");
        if (std::abs(u) <= tol) {
            // One polishing update so beta resolves the root itself rather than stopping at the
            // first iterate inside the tolerance band (keeps small |beta| measurable).
            const double du = zero_dir ? 0.0 : inner3(U.potential_with(phi, Lphi), dir);
            if (du != 0.0 && std::isfinite(du) && std::abs(u / du) <= 1e-3 * std::max(1.0, std::abs(beta)))
                beta -= u / du;
            return {beta, k + 1, std::abs(u)};
        }
        if (k == maxit) break;
        if (zero_dir) throw NoRootError("supplementary-variable direction is zero but the energy target is not met");
        const double du = inner3(U.potential_with(phi, Lphi), dir);
        if (du == 0.0 || !std::isfinite(du))
            throw NoRootError("supplementary-variable equation is degenerate (zero derivative)");
        beta -= u / du;
        if (!std::isfinite(beta) || std::abs(beta) > 1e6)
            throw std::runtime_error("Newton for the supplementary variable diverged; reduce dt");
    }
    std::ostringstream os;
    os << "Newton for the supplementary variable did not converge in " << maxit << " iterations; reduce dt";
    throw std::runtime_error(os.str());
}

namespace {

/// Newton on U(phi(beta)) - U_n - dt (mu(beta), m Lap mu(beta)) = 0 (final-state dissipation).
struct FinalNewton {
    double beta = 0.0;
    int iterations = 0;
    double dissipation = 0.0;
};

FinalNewton newton_final(double energy_curr, const FieldTriple& phi_hat, const FieldTriple& dir,
                         const StepFunctional& U) {
    const StepContext& ctx = U.context();
    const auto& H = ctx.helmholtz();
    const double dt = ctx.dt();
    const FieldTriple L_hat = apply_linear(phi_hat, ctx.params());
    const FieldTriple L_dir = apply_linear(dir, ctx.params());
    const bool zero_dir = max_abs3(dir) == 0.0;
    const int maxit = ctx.options().newton_maxit;
    double beta = 0.0;
    for (int k = 0; k <= maxit; ++k) {
        const FieldTriple phi = combine(phi_hat, 1.0, dir, beta);
        const FieldTriple Lphi = combine(L_hat, 1.0, L_dir, beta);
        const FieldTriple mu = U.potential_with(phi, Lphi);
        const double D = dt * dissipation_form(H, mu);
        const double target = energy_curr + D;
        const double u = U.energy_with(phi, Lphi) - target;
        const double tol = ctx.options().newton_tol * std::max(1.0, std::abs(target));
        if (!std::isfinite(u)) throw std::runtime_error("Newton for the supplementary variable produced a non-finite energy");
        if (std::abs(u) <= tol) return {beta, k + 1, D};
        if (k == maxit) break;
        if (zero_dir) throw NoRootError("supplementary-variable direction is zero but the energy target is not met");
        const FieldTriple dmu = U.potential_derivative(phi, dir, L_dir);
        const FieldTriple mlap_mu = H.mobility_laplacian(mu);
        const double du = inner3(mu, dir) - 2.0 * dt * inner3(dmu, mlap_mu);
        if (du == 0.0 || !std::isfinite(du))
            throw NoRootError("supplementary-variable equation is degenerate (zero derivative)");
        beta -= u / du;
        if (!std::isfinite(beta) || std::abs(beta) > 1e6)
            throw std::runtime_error("Newton for the supplementary variable diverged; reduce dt");
    }
    throw std::runtime_error("Newton for the supplementary variable did not converge; reduce dt");
}

} // namespace

// ------------------------------------------------------------------ SVM

SvmPrediction svm_predict(const PhaseState& prev, const PhaseState& curr, double t, const StepContext& ctx) {
    const auto& H = ctx.helmholtz();
    const ModelParams& p = ctx.params();
    const double dt = ctx.dt();
    SvmPrediction pr;
    pr.t_half = t + 0.5 * dt;
    pr.phi_bar = combine(curr.phi, 1.5, prev.phi, -0.5);

    if (ctx.electric()) {
        const ScalarField* guess = curr.Phi ? &*curr.Phi : nullptr;
        pr.Phi_bar = ctx.solve_potential(pr.phi_bar, pr.t_half, guess);
    }
    FieldTriple h_bar = bulk_derivative(pr.phi_bar, p);
    if (!std::holds_alternative<std::monostate>(ctx.coupling()))
        h_bar = add(h_bar, ctx.coupling_potential(pr.phi_bar, pr.Phi_bar ? &*pr.Phi_bar : nullptr, pr.t_half));
    for (auto& f : h_bar) f *= 0.5;
    pr.phi_mid = H.solve_combined(curr.phi, nullptr, &h_bar);

    if (ctx.electric()) pr.Phi_mid = ctx.solve_potential(pr.phi_mid, pr.t_half, &*pr.Phi_bar);
    pr.h_mid = bulk_derivative(pr.phi_mid, p);
    if (!std::holds_alternative<std::monostate>(ctx.coupling()))
        pr.h_mid = add(pr.h_mid, ctx.coupling_potential(pr.phi_mid, pr.Phi_mid ? &*pr.Phi_mid : nullptr, pr.t_half));
    pr.mu_mid = add(apply_linear(pr.phi_mid, p), pr.h_mid);
    pr.mlap_mu_mid = H.mobility_laplacian(pr.mu_mid);
    pr.dissipation = dt * dissipation_form(H, pr.mu_mid);

    const StepFunctional U(ctx, pr.t_half, pr.Phi_mid);
    pr.energy_curr = U.energy(curr.phi);
    pr.energy_pred = pr.energy_curr + pr.dissipation;
    return pr;
}

SvmCorrection svm_correct(const PhaseState& curr, const SvmPrediction& pred, const StepContext& ctx,
                          SchemeKind variant) {
    if (variant == SchemeKind::EQ) throw std::invalid_argument("svm_correct: EQ is not an SVM variant");
    const auto& H = ctx.helmholtz();
    const Grid2D& g = ctx.grid();
    SvmCorrection out;
    const FieldTriple phi_hat = H.solve_combined(curr.phi, &curr.phi, &pred.h_mid);

    FieldTriple dir = make_triple(g);
    switch (variant) {
        case SchemeKind::SVM1: dir = solve_mobility_laplacian(H, pred.h_mid); break;
        case SchemeKind::SVM2: dir = solve_mobility_laplacian(H, pred.mu_mid); break;
        case SchemeKind::SVM3: dir = combine(pred.phi_mid, 1.0, phibar_state(g, ctx.params()), -1.0); break;
        case SchemeKind::SVM4: dir = combine(phi_hat, 1.0, phibar_state(g, ctx.params()), -1.0); break;
        case SchemeKind::EQ: break;
    }

    const StepFunctional U(ctx, pred.t_half, pred.Phi_mid);
    out.target = pred.energy_pred;
    out.dissipation = pred.dissipation;
    try {
        if (ctx.options().dissipation_point == DissipationPoint::Predicted) {
            const NewtonResult nr = newton_beta(pred.energy_pred, phi_hat, dir, U);
            out.beta = nr.beta;
            out.newton_iters = nr.iterations;
        } else {
            const FinalNewton fn = newton_final(pred.energy_curr, phi_hat, dir, U);
            out.beta = fn.beta;
            out.newton_iters = fn.iterations;
            out.dissipation = fn.dissipation;
            out.target = pred.energy_curr + fn.dissipation;
        }
    } catch (const NoRootError&) {
        // Near equilibrium the direction carries no energy change; the predicted energy is then met to
        // truncation order. Accept beta = 0 only when the mismatch is correspondingly small.
        const double mismatch = std::abs(U.energy(phi_hat) - out.target);
        if (mismatch > std::sqrt(ctx.options().newton_tol) * std::max(1.0, std::abs(out.target))) throw;
        out.beta = 0.0;
        out.degenerate_direction = true;
    }
    out.next.phi = combine(phi_hat, 1.0, dir, out.beta);
    if (ctx.electric()) out.next.Phi = ctx.solve_potential(out.next.phi, pred.t_half + 0.5 * ctx.dt(), &*pred.Phi_mid);
    return out;
}

// ------------------------------------------------------------------ EQ

ScalarField eq_auxiliary(const FieldTriple& phi, const ModelParams& p) {
    ScalarField q = bulk_density(phi, p);
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double s = q[k] + p.eq_C;
        if (!(s > 0.0)) throw std::runtime_error("EQ auxiliary variable: f(phi) + C is not positive; increase eq_C");
        q[k] = std::sqrt(s);
    }
    return q;
}

double eq_modified_energy(const FieldTriple& phi, const ScalarField& q, const ModelParams& p) {
    const FieldTriple Lphi = apply_linear(phi, p);
    return 0.5 * inner3(phi, Lphi) + inner_h(q, q) - p.eq_C * phi[0].grid().area();
}

EqResult eq_step(const PhaseState& prev, const PhaseState& curr, double t, const StepContext& ctx) {
    const auto& H = ctx.helmholtz();
    const ModelParams& p = ctx.params();
    const Grid2D& g = ctx.grid();
    const double dt = ctx.dt();
    const double t_half = t + 0.5 * dt;
    const std::size_t n = g.size();

    const ScalarField qn = curr.q ? *curr.q : eq_auxiliary(curr.phi, p);
    const FieldTriple phi_bar = combine(curr.phi, 1.5, prev.phi, -0.5);

    std::optional<ScalarField> Phi_bar;
    if (ctx.electric()) Phi_bar = ctx.solve_potential(phi_bar, t_half, curr.Phi ? &*curr.Phi : nullptr);
    const FieldTriple c_bar = ctx.coupling_potential(phi_bar, Phi_bar ? &*Phi_bar : nullptr, t_half);

    // w = q'(phi_bar) = f'(phi_bar) / (2 sqrt(f(phi_bar) + C))
    const ScalarField s = eq_auxiliary(phi_bar, p);
    FieldTriple w = bulk_derivative(phi_bar, p);
    Mat3 W = Mat3::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        for (int i = 0; i < 3; ++i) w[i][k] /= 2.0 * s[k];
        const Vec3 wk(w[0][k], w[1][k], w[2][k]);
        W += wk * wk.transpose();
    }
    W /= static_cast<double>(n);

    auto w_dot = [&](const FieldTriple& x) {
        ScalarField d(g);
        for (std::size_t k = 0; k < n; ++k) d[k] = w[0][k] * x[0][k] + w[1][k] * x[1][k] + w[2][k] * x[2][k];
        return d;
    };

    // rhs = phi^n + m Lap[(dt/2) L phi^n + dt (2 w q^n - w (w . phi^n) + c_bar)]
    FieldTriple y = apply_linear(curr.phi, p);
    {
        const ScalarField wphi = w_dot(curr.phi);
        for (int i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < n; ++k)
                y[i][k] = 0.5 * dt * y[i][k] + dt * (2.0 * w[i][k] * qn[k] - w[i][k] * wphi[k] + c_bar[i][k]);
    }
    const FieldTriple rhs = add(curr.phi, H.mobility_laplacian(y));

    // A x = x - m Lap[(dt/2) L x + dt w (w . x)]
    const LinearOperator A = [&](std::span<const double> xs, std::span<double> out) {
        const FieldTriple x = unflatten(g, xs);
        FieldTriple z = apply_linear(x, p);
        const ScalarField wx = w_dot(x);
        for (int i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < n; ++k) z[i][k] = 0.5 * dt * z[i][k] + dt * w[i][k] * wx[k];
        const FieldTriple mz = H.mobility_laplacian(z);
        for (int i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < n; ++k) out[i * n + k] = x[i][k] - mz[i][k];
    };

    std::shared_ptr<const BlockHelmholtzPlan> pre;
    {
        LinearSymbol sym = p.symbol();
        sym.extra = 2.0 * W;
        try {
            pre = std::make_shared<const BlockHelmholtzPlan>(H.basis_ptr(), sym, p.m_eff, dt);
        } catch (const std::runtime_error&) {
            pre.reset();
        }
    }
    const BlockHelmholtzPlan& P = pre ? *pre : H;
    const LinearOperator M = [&](std::span<const double> xs, std::span<double> out) {
        const FieldTriple z = P.solve(unflatten(g, xs));
        for (int i = 0; i < 3; ++i) std::copy(z[i].values().begin(), z[i].values().end(), out.begin() + i * n);
    };

    const std::vector<double> b = flatten(rhs);
    const std::vector<double> x0 = flatten(phi_bar);
    const KrylovResult kr = krylov_solve(A, b, M, ctx.options().krylov, x0);
    if (!kr.converged) {
        std::ostringstream os;
        os << "EQ linear solve did not converge (relative residual " << kr.residual << " after " << kr.iterations
           << " iterations)";
        throw std::runtime_error(os.str());
    }

    EqResult out;
    out.krylov_iters = kr.iterations;
    out.next.phi = unflatten(g, kr.x);
    const FieldTriple dphi = combine(out.next.phi, 1.0, curr.phi, -1.0);
    const ScalarField wd = w_dot(dphi);
    ScalarField q_next = qn;
    q_next += wd;

    // mu_eq = L phi^{n+1/2} + 2 q^{n+1/2} w + c_bar
    const FieldTriple phi_half = combine(out.next.phi, 0.5, curr.phi, 0.5);
    FieldTriple mu = apply_linear(phi_half, p);
    for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < n; ++k) mu[i][k] += (qn[k] + q_next[k]) * w[i][k] + c_bar[i][k];
    out.dissipation = dt * dissipation_form(H, mu);
    out.modified_energy = eq_modified_energy(out.next.phi, q_next, p);
    out.next.q = std::move(q_next);
    if (ctx.electric()) out.next.Phi = ctx.solve_potential(out.next.phi, t + dt, &*Phi_bar);
    return out;
}

// ------------------------------------------------------------------ drivers

namespace {

/// The updates sum to zero across species in exact arithmetic (the effective mobility has
/// zero row sums), but rounding in the per-species spectral solves drifts phi_A + phi_B + phi_S
/// away from 1 by ~1e-15 per step. Spread the pointwise defect evenly over the species; the
/// defect has zero mean, so the species means are unaffected.
void remove_simplex_rounding(FieldTriple& phi) {
    for (std::size_t k = 0; k < phi[0].size(); ++k) {
        const double d = (phi[0][k] + phi[1][k] + phi[2][k] - 1.0) / 3.0;
        phi[0][k] -= d;
        phi[1][k] -= d;
        phi[2][k] -= d;
    }
}

} // namespace

StepOutcome step(SchemeKind scheme, const PhaseState& prev, const PhaseState& curr, double t, const StepContext& ctx) {
    StepOutcome o;
    StepRecord& r = o.record;
    r.t = t + ctx.dt();
    if (scheme == SchemeKind::EQ) {
        EqResult e = eq_step(prev, curr, t, ctx);
        r.predicted_energy = e.modified_energy;
        r.dissipation = e.dissipation;
        r.krylov_iters = e.krylov_iters;
        o.next = std::move(e.next);
    } else {
        const SvmPrediction pred = svm_predict(prev, curr, t, ctx);
        SvmCorrection c = svm_correct(curr, pred, ctx, scheme);
        r.predicted_energy = c.target;
        r.dissipation = c.dissipation;
        r.beta = c.beta;
        r.alpha = ctx.dt() > 0.0 ? c.beta / ctx.dt() : 0.0;
        r.newton_iters = c.newton_iters;
        r.degenerate_direction = c.degenerate_direction;
        o.next = std::move(c.next);
    }
    remove_simplex_rounding(o.next.phi);
    r.energy = ctx.total_energy(o.next.phi, o.next.Phi ? &*o.next.Phi : nullptr, r.t);
    r.means = means_of(o.next.phi);
    return o;
}

StepOutcome bootstrap_step(SchemeKind scheme, const PhaseState& state0, double t, const StepContext& ctx) {
    return step(scheme, state0, state0, t, ctx);
}

PhaseState prepare_state(const FieldTriple& phi, SchemeKind scheme, double t, const StepContext& ctx) {
    PhaseState s{phi, std::nullopt, std::nullopt};
    if (scheme == SchemeKind::EQ) s.q = eq_auxiliary(phi, ctx.params());
    if (ctx.electric()) s.Phi = ctx.solve_potential(phi, t, nullptr);
    return s;
}

long long step_count(double T, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("T must be finite and >= 0");
    const double r = T / dt;
    const long long n = std::llround(r);
    if (std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r)) {
        std::ostringstream os;
        os << "T = " << T << " is not an integer multiple of dt = " << dt;
        throw std::invalid_argument(os.str());
    }
    return n;
}

RunResult run(SchemeKind scheme, const FieldTriple& phi0, const StepContext& ctx, const RunOptions& opts) {
    const double dt = ctx.dt();
    const long long n = step_count(opts.T, dt);
    std::set<long long> snap_steps;
    for (double ts : opts.snapshot_times) {
        if (!(ts >= 0.0)) continue;
        snap_steps.insert(std::clamp<long long>(std::llround(ts / dt), 0, n));
    }
    snap_steps.insert(0);
    snap_steps.insert(n);

    RunResult res;
    PhaseState curr = prepare_state(phi0, scheme, 0.0, ctx);
    res.initial_energy = ctx.total_energy(curr.phi, curr.Phi ? &*curr.Phi : nullptr, 0.0);
    if (opts.on_snapshot) opts.on_snapshot(curr, 0.0);
    PhaseState prev = curr;
    long long done = 0;
    for (long long k = 1; k <= n; ++k) {
        const double t = static_cast<double>(k - 1) * dt;
        try {
            StepOutcome o = k == 1 ? bootstrap_step(scheme, curr, t, ctx) : step(scheme, prev, curr, t, ctx);
            o.record.t = static_cast<double>(k) * dt;
            res.records.push_back(o.record);
            if (opts.on_step) opts.on_step(o.record);
            prev = std::move(curr);
            curr = std::move(o.next);
            done = k;
        } catch (const std::exception& e) {
            res.failed = true;
            std::ostringstream os;
            os << "step " << k << " (t = " << t << ") failed: " << e.what();
            res.error = os.str();
            break;
        }
        if (snap_steps.count(k) && opts.on_snapshot) opts.on_snapshot(curr, static_cast<double>(k) * dt);
    }
    res.t_final = static_cast<double>(done) * dt;
    if (res.failed && opts.on_snapshot && !snap_steps.count(done)) opts.on_snapshot(curr, res.t_final);
    res.final_state = std::move(curr);
    return res;
}

} // namespace copoly
