#include "copoly/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "copoly/krylov.hpp"
#include "copoly/spectral.hpp"

namespace copoly {

ScalarField contrast(const ScalarField& phiA, const ScalarField& phiB, double shift) {
    require_same_grid(phiA, phiB, "contrast");
    ScalarField v = phiA - phiB;
    v += -shift;
    return v;
}

namespace {

double l2(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

void check_permittivity(const ScalarField& v, const ElectricParams& ep) {
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double e = ep.eps0 + ep.eps1 * v[k];
        if (!(e > 0.0)) {
            std::ostringstream os;
            os << "electric coupling: permittivity eps0 + eps1*v = " << e << " is not positive at cell " << k;
            throw std::runtime_error(os.str());
        }
    }
}

/// Quantities of the discrete Gauss law that depend only on the phase state.
struct GaussLaw {
    ScalarField v, vx, vy, forcing;  // forcing = eps1 E0 . grad v
    Vec2 E;

    GaussLaw(const ScalarField& phiA, const ScalarField& phiB, const ElectricParams& ep, double t)
        : v(contrast(phiA, phiB, ep.phibar_diff)), vx(v.grid()), vy(v.grid()), forcing(v.grid()), E(ep.field(t)) {
        auto g = grad_h(v, BoundaryKind::neumann());
        vx = std::move(g.first);
        vy = std::move(g.second);
        for (std::size_t k = 0; k < v.size(); ++k) forcing[k] = ep.eps1 * (E[0] * vx[k] + E[1] * vy[k]);
    }

    /// out = (eps0 + eps1 v) lap + eps1 (grad u) . grad v ; the operator acting on u = Phi - Phi0.
    void apply(const ElectricParams& ep, std::span<const double> u, std::span<double> out) const {
        ScalarField uf(v.grid(), std::vector<double>(u.begin(), u.end()));
        const ScalarField lap = laplacian_h(uf, BoundaryKind::dirichlet(0.0));
        const auto [gx, gy] = grad_h(uf, BoundaryKind::dirichlet(0.0));
        for (std::size_t k = 0; k < u.size(); ++k)
            out[k] = (ep.eps0 + ep.eps1 * v[k]) * lap[k] + ep.eps1 * (gx[k] * vx[k] + gy[k] * vy[k]);
    }
};

} // namespace

ScalarField electric_residual(const ScalarField& phiA, const ScalarField& phiB, const ScalarField& Phi,
                              const ElectricParams& ep, double t) {
    const GaussLaw gl(phiA, phiB, ep, t);
    const BoundaryKind bc = BoundaryKind::dirichlet(ep.Phi0);
    const ScalarField lap = laplacian_h(Phi, bc);
    const auto [gx, gy] = grad_h(Phi, bc);
    ScalarField r(Phi.grid());
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = (ep.eps0 + ep.eps1 * gl.v[k]) * lap[k] -
               ep.eps1 * ((gl.E[0] - gx[k]) * gl.vx[k] + (gl.E[1] - gy[k]) * gl.vy[k]);
    return r;
}

PotentialSolve solve_electric_potential(const ScalarField& phiA, const ScalarField& phiB, const ElectricParams& ep,
                                        double t, const ScalarField* guess) {
    if (!(ep.eps0 > 0.0)) throw std::invalid_argument("electric coupling: eps0 must be > 0");
    const Grid2D& grid = phiA.grid();
    PotentialSolve out{ScalarField(grid, ep.Phi0)};
    if (ep.eps1 == 0.0) {
        out.converged = true;
        return out;
    }
    const GaussLaw gl(phiA, phiB, ep, t);
    check_permittivity(gl.v, ep);
    const double fnorm = l2(gl.forcing.values());
    if (fnorm == 0.0) {
        out.converged = true;
        return out;
    }
    const auto sine = SineBasisPlan::shared(grid);
    const BoundaryKind bc = BoundaryKind::dirichlet(ep.Phi0);

    ScalarField Phi = guess ? *guess : ScalarField(grid, ep.Phi0);
    require_same_grid(Phi, phiA, "solve_electric_potential");

    auto residual_of = [&](const ScalarField& P, ScalarField& lap, ScalarField& gx, ScalarField& gy) {
        lap = laplacian_h(P, bc);
        auto g = grad_h(P, bc);
        gx = std::move(g.first);
        gy = std::move(g.second);
        double s = 0.0;
        for (std::size_t k = 0; k < P.size(); ++k) {
            const double r = (ep.eps0 + ep.eps1 * gl.v[k]) * lap[k] -
                             ep.eps1 * ((gl.E[0] - gx[k]) * gl.vx[k] + (gl.E[1] - gy[k]) * gl.vy[k]);
            s += r * r;
        }
        return std::sqrt(s) / fnorm;
    };

    ScalarField lap(grid), gx(grid), gy(grid), rhs(grid);
    double res = residual_of(Phi, lap, gx, gy);
    double best = res;
    ScalarField best_Phi = Phi;
    int stall = 0;
    int sweeps = 0;
    while (res > ep.picard_tol && sweeps < ep.picard_maxit) {
        for (std::size_t k = 0; k < Phi.size(); ++k)
            rhs[k] = (ep.eps1 * ((gl.E[0] - gx[k]) * gl.vx[k] + (gl.E[1] - gy[k]) * gl.vy[k]) -
                      ep.eps1 * gl.v[k] * lap[k]) /
                     ep.eps0;
        Phi = sine->solve_poisson(rhs, ep.Phi0);
        ++sweeps;
        const double next = residual_of(Phi, lap, gx, gy);
        if (!std::isfinite(next)) break;
        stall = next > 0.5 * res ? stall + 1 : 0;
        res = next;
        if (res < best) {
            best = res;
            best_Phi = Phi;
        }
        if (stall >= 3) break;
    }
    out.iterations = sweeps;
    if (best <= ep.picard_tol) {
        out.Phi = std::move(best_Phi);
        out.residual = best;
        out.converged = true;
        return out;
    }

    // Fallback: BiCGStab on u = Phi - Phi0 with the constant-coefficient Dirichlet solve as preconditioner.
    out.used_fallback = true;
    std::vector<double> u0(best_Phi.size());
    for (std::size_t k = 0; k < u0.size(); ++k) u0[k] = best_Phi[k] - ep.Phi0;
    const LinearOperator A = [&](std::span<const double> x, std::span<double> y) { gl.apply(ep, x, y); };
    const LinearOperator P = [&](std::span<const double> x, std::span<double> y) {
        ScalarField r(grid, std::vector<double>(x.begin(), x.end()));
        r *= 1.0 / ep.eps0;
        const ScalarField z = sine->solve_poisson(r, 0.0);
        std::copy(z.values().begin(), z.values().end(), y.begin());
    };
    const KrylovResult kr = krylov_solve(A, gl.forcing.values(), P, {ep.picard_tol, 500}, u0);
    ScalarField cand(grid, kr.x);
    cand += ep.Phi0;
    ScalarField l2_(grid), a(grid), b(grid);
    const double kres = residual_of(cand, l2_, a, b);
    out.iterations += kr.iterations;
    if (kres < best) {
        best = kres;
        best_Phi = std::move(cand);
    }
    out.Phi = std::move(best_Phi);
    out.residual = best;
    out.converged = best <= ep.picard_tol;
    return out;
}

ScalarField electric_mu(const ScalarField& Phi, const ElectricParams& ep, double t) {
    const Vec2 E = ep.field(t);
    const auto [gx, gy] = grad_h(Phi, BoundaryKind::dirichlet(ep.Phi0));
    ScalarField mu(Phi.grid());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double ex = E[0] - gx[k], ey = E[1] - gy[k];
        mu[k] = -0.5 * ep.eps1 * (ex * ex + ey * ey);
    }
    return mu;
}

double electric_energy(const ScalarField& phiA, const ScalarField& phiB, const ScalarField& Phi,
                       const ElectricParams& ep, double t) {
    const Vec2 E = ep.field(t);
    const ScalarField v = contrast(phiA, phiB, ep.phibar_diff);
    const auto [gx, gy] = grad_h(Phi, BoundaryKind::dirichlet(ep.Phi0));
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double ex = E[0] - gx[k], ey = E[1] - gy[k];
        s += (ep.eps0 + ep.eps1 * v[k]) * (ex * ex + ey * ey);
    }
    return 0.5 * s * v.grid().cell_area();
}

namespace {

/// Visits every interior vertex (i+1/2, j+1/2) with P = D_x A_y v and Q = A_x D_y v.
template <class F>
void for_each_vertex(const ScalarField& v, F&& f) {
    const Grid2D& g = v.grid();
    const double ix = 0.5 / g.hx(), iy = 0.5 / g.hy();
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const double v00 = v(i, j), v10 = v(i + 1, j), v01 = v(i, j + 1), v11 = v(i + 1, j + 1);
            const double P = (v10 + v11 - v00 - v01) * ix;
            const double Q = (v01 + v11 - v00 - v10) * iy;
            f(i, j, P, Q, ix, iy);
        }
}

} // namespace

ScalarField magnetic_mu(const ScalarField& phiA, const ScalarField& phiB, const MagneticParams& mp) {
    const ScalarField v = contrast(phiA, phiB, 0.0);
    const Grid2D& g = v.grid();
    const double b1 = mp.B0[0], b2 = mp.B0[1];
    ScalarField mu(g);
    if (b1 != 0.0 || b2 != 0.0) {
        const double ix2 = 1.0 / (g.hx() * g.hx()), iy2 = 1.0 / (g.hy() * g.hy());
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const double c = v(i, j);
                const double xl = i > 0 ? v(i - 1, j) : c, xr = i + 1 < g.nx() ? v(i + 1, j) : c;
                const double yl = j > 0 ? v(i, j - 1) : c, yr = j + 1 < g.ny() ? v(i, j + 1) : c;
                mu(i, j) = -(b1 * b1 * (xr - 2.0 * c + xl) * ix2 + b2 * b2 * (yr - 2.0 * c + yl) * iy2);
            }
        if (b1 != 0.0 && b2 != 0.0) {
            const double w = b1 * b2;
            for_each_vertex(v, [&](int i, int j, double P, double Q, double ix, double iy) {
                // d/dv of P*Q at the four corner cells.
                mu(i, j) += w * (-ix * Q - iy * P);
                mu(i + 1, j) += w * (ix * Q - iy * P);
                mu(i, j + 1) += w * (-ix * Q + iy * P);
                mu(i + 1, j + 1) += w * (ix * Q + iy * P);
            });
        }
    }
    mu *= mp.gamma_m;
    return mu;
}

double magnetic_energy(const ScalarField& phiA, const ScalarField& phiB, const MagneticParams& mp) {
    const ScalarField v = contrast(phiA, phiB, 0.0);
    const double b1 = mp.B0[0], b2 = mp.B0[1];
    double e = b1 * b1 * face_energy_x(v) + b2 * b2 * face_energy_y(v);
    if (b1 != 0.0 && b2 != 0.0) {
        double cross = 0.0;
        for_each_vertex(v, [&](int, int, double P, double Q, double, double) { cross += P * Q; });
        e += 2.0 * b1 * b2 * cross * v.grid().cell_area();
    }
    return 0.5 * mp.gamma_m * e;
}

} // namespace copoly
