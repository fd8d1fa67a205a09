#pragma once

/// Electric and magnetic field couplings: the induced potential solve,
/// coupling chemical potentials and coupling energies.
///
/// Both couplings act through the A-B contrast
///     v = (phi_A - phi_B) - (phibar_A - phibar_B),
/// and their potentials enter the A equation with + and the B equation with -.

#include <array>
#include <functional>
#include <string>
#include <variant>

#include "copoly/grid.hpp"

namespace copoly {

using Vec2 = std::array<double, 2>;

struct ElectricParams {
    double eps0 = 1.0;                 ///< vacuum permittivity, > 0
    double eps1 = 0.0;                 ///< material constant
    std::function<Vec2(double)> E0;    ///< applied field as a function of time
    double Phi0 = 0.0;                 ///< Dirichlet boundary value of the induced potential
    double phibar_diff = 0.0;          ///< phibar_A - phibar_B (set from the model)
    double picard_tol = 1e-10;
    int picard_maxit = 100;
    std::string field_label = "constant";  ///< description of E0 for reports/serialization

    Vec2 field(double t) const { return E0 ? E0(t) : Vec2{0.0, 0.0}; }
    static std::function<Vec2(double)> constant(Vec2 e) {
        return [e](double) { return e; };
    }
};

struct MagneticParams {
    double gamma_m = 0.0;
    Vec2 B0{0.0, 0.0};
};

using Coupling = std::variant<std::monostate, ElectricParams, MagneticParams>;

/// Contrast v = phi_A - phi_B - shift.
ScalarField contrast(const ScalarField& phiA, const ScalarField& phiB, double shift);

struct PotentialSolve {
    ScalarField Phi;
    int iterations = 0;       ///< Picard sweeps (+ Krylov iterations when the fallback ran)
    double residual = 0.0;    ///< relative residual of the full nonlinear discrete equation
    bool converged = false;
    bool used_fallback = false;
};

/// Residual R(Phi) = (eps0 + eps1 v) Lap_D Phi - eps1 (E0 - grad_D Phi) . grad v
/// of the discrete Gauss law (Dirichlet Phi0 ghosts for Phi, mirror ghosts for v).
ScalarField electric_residual(const ScalarField& phiA, const ScalarField& phiB, const ScalarField& Phi,
                              const ElectricParams& ep, double t);

/// Picard iteration with constant-coefficient sine-basis Dirichlet solves,
/// warm-started from guess; falls back to preconditioned BiCGStab on stagnation.
/// Throws std::runtime_error when eps0 + eps1 v is not positive.
PotentialSolve solve_electric_potential(const ScalarField& phiA, const ScalarField& phiB, const ElectricParams& ep,
                                        double t, const ScalarField* guess = nullptr);

/// mu_e = -(eps1/2) |E0(t) - grad_h Phi|^2.
ScalarField electric_mu(const ScalarField& Phi, const ElectricParams& ep, double t);

/// W = (1/2)(eps0 + eps1 v, |E0(t) - grad_h Phi|^2)_h >= 0 (field energy).
double electric_energy(const ScalarField& phiA, const ScalarField& phiB, const ScalarField& Phi,
                       const ElectricParams& ep, double t);

/// Variational magnetic potential: exact gradient (per cell area) of magnetic_energy.
/// Equals -gamma_m[(B1^2 d_xD_x + B2^2 d_yD_y) v + 2 B1 B2 d_x d_y A_x A_y v] in interior cells.
ScalarField magnetic_mu(const ScalarField& phiA, const ScalarField& phiB, const MagneticParams& mp);

/// (gamma_m/2) h_x h_y [B1^2 sum_xfaces (D_x v)^2 + B2^2 sum_yfaces (D_y v)^2
///                     + 2 B1 B2 sum_vertices (D_x A_y v)(A_x D_y v)].
double magnetic_energy(const ScalarField& phiA, const ScalarField& phiB, const MagneticParams& mp);

} // namespace copoly
