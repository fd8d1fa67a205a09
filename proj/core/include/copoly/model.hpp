#pragma once

/// Model parameters, the regularized Flory-Huggins bulk potential, the
/// discrete free energy with its nonlocal long-range term, chemical
/// potentials, and the incompressibility elimination (effective mobility).

#include <array>
#include <optional>

#include "copoly/grid.hpp"
#include "copoly/spectral.hpp"

namespace copoly {

/// Bulk potential selector. None replaces f by zero (the linear/quadratic
/// synthetic model used for scheme-equivalence and manufactured tests).
enum class PotentialKind { RegularizedLog, None };

/// User-facing model inputs; everything else is derived in ModelParams::make.
struct ModelInputs {
    std::array<double, 3> N{1.0, 1.0, 1.0};  ///< polymerization degrees N_A, N_B, N_S
    Mat3 chi = Mat3::Zero();                  ///< symmetric, zero diagonal
    double eps = 0.01;
    double gamma = 0.0;                       ///< long-range strength
    std::array<double, 3> phibar{1.0 / 3, 1.0 / 3, 1.0 / 3};
    double sigma = 0.01;
    Mat3 M = Mat3::Identity();                ///< mobility, symmetric PSD
    double eq_C = 1.0;
    PotentialKind potential = PotentialKind::RegularizedLog;
};

struct ModelParams {
    std::array<double, 3> N{};
    Mat3 chi = Mat3::Zero();
    double eps = 0.0;
    double gamma = 0.0;
    std::array<double, 3> phibar{};
    std::array<double, 3> gamma_i{};  ///< eps^2 / phibar_i
    Mat3 alpha = Mat3::Zero();        ///< long-range coefficients, third row/column zero
    double sigma = 0.01;
    Mat3 M = Mat3::Zero();
    Mat3 m_eff = Mat3::Zero();
    double eq_C = 1.0;
    PotentialKind potential = PotentialKind::RegularizedLog;

    /// Validates the inputs and derives gamma_i, alpha, m_eff.
    /// Throws std::invalid_argument naming the offending quantity.
    static ModelParams make(const ModelInputs& in);

    /// Constant-coefficient symbol of the linear operator L.
    LinearSymbol symbol() const;
};

/// Volume fractions (A, B, S) plus scheme companions.
struct PhaseState {
    FieldTriple phi;
    std::optional<ScalarField> q;    ///< EQ auxiliary variable sqrt(f + C)
    std::optional<ScalarField> Phi;  ///< induced electric potential

    const Grid2D& grid() const noexcept { return phi[0].grid(); }
};

/// max over cells of |phi_A + phi_B + phi_S - 1|.
double simplex_defect(const FieldTriple& phi);

struct RegLog {
    double value;
    double derivative;
};

/// C^2 regularization of (phi/N) ln(phi): quadratic branch for phi <= sigma.
RegLog reg_log(double phi, double N, double sigma);
/// Second derivative of reg_log.
double reg_log_second(double phi, double N, double sigma);

/// Bulk density f(phi) = sum_i reg_log(phi_i, N_i) per cell (zero for PotentialKind::None).
ScalarField bulk_density(const FieldTriple& phi, const ModelParams& p);
/// Per-species derivative f'(phi).
FieldTriple bulk_derivative(const FieldTriple& phi, const ModelParams& p);
/// Per-species diagonal second derivative f''(phi).
FieldTriple bulk_second_derivative(const FieldTriple& phi, const ModelParams& p);

/// Solves laplacian_h(psi) = phi - phibar (zero-Neumann), mean(psi) = 0.
/// Rejects data whose mean differs from phibar by more than 1e-10.
ScalarField solve_psi(const ScalarField& phi, double phibar);

/// Linear part L phi = -gamma_i Lap phi_i + chi phi - alpha Lap^+ phi, where
/// Lap^+ is the zero-mean pseudo-inverse (equal to psi when means match phibar).
FieldTriple apply_linear(const FieldTriple& phi, const ModelParams& p);

/// mu_i = -gamma_i Lap phi_i + sum_j chi_ij phi_j + f'_i - sum_j alpha_ij psi_j.
FieldTriple chemical_potentials(const FieldTriple& phi, const ModelParams& p, const ScalarField& psiA,
                                const ScalarField& psiB);
/// Same with psi obtained from the pseudo-inverse Laplacian.
FieldTriple chemical_potentials(const FieldTriple& phi, const ModelParams& p);

/// Discrete free energy F_h = (1/2)(phi, L phi)_h + (f(phi), 1)_h.
double free_energy_h(const FieldTriple& phi, const ModelParams& p);

/// m_kl = M_kl - (sum_j M_kj)(sum_j M_lj) / sum_ij M_ij.
Mat3 effective_mobility(const Mat3& M);

/// L = -(sum_ij M_ij mu_i) / sum_ij M_ij, pointwise.
ScalarField lagrange_multiplier(const FieldTriple& mu, const Mat3& M);

/// Smallest eigenvalue of the symmetric part of M.
double min_eigenvalue(const Mat3& M);

} // namespace copoly
