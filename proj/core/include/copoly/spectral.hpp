#pragma once

/// Fast direct solvers in the cosine (zero-Neumann) and sine (homogeneous
/// Dirichlet) eigenbases of the five-point Laplacian, and the per-mode 3x3
/// block solver for the implicit Crank-Nicolson systems.

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "copoly/grid.hpp"

namespace copoly {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Mode coefficients of one field, indexed ky * Nx + kx.
using ModeField = std::vector<double>;
using ModeTriple = std::array<ModeField, 3>;

namespace detail {
struct R2RPlans;
}

/// Orthonormal half-sample cosine transform (type II forward, type III inverse).
/// Its basis vectors are exact eigenvectors of the zero-Neumann laplacian_h.
class CosineBasisPlan {
public:
    explicit CosineBasisPlan(const Grid2D& grid);
    ~CosineBasisPlan();
    CosineBasisPlan(const CosineBasisPlan&) = delete;
    CosineBasisPlan& operator=(const CosineBasisPlan&) = delete;

    /// Process-wide cached plan for a grid; plans are immutable and thread-safe to use.
    static std::shared_ptr<const CosineBasisPlan> shared(const Grid2D& grid);

    const Grid2D& grid() const noexcept { return grid_; }
    /// Laplacian eigenvalue of mode (kx, ky); (0,0) is 0, every other one is negative.
    double eigenvalue(int kx, int ky) const noexcept { return lambda_[grid_.index(kx, ky)]; }
    std::span<const double> eigenvalues() const noexcept { return lambda_; }
    double eigenvalue_x(int kx) const noexcept { return lambda_x_[static_cast<std::size_t>(kx)]; }
    double eigenvalue_y(int ky) const noexcept { return lambda_y_[static_cast<std::size_t>(ky)]; }

    ModeField forward(const ScalarField& f) const;
    ScalarField inverse(const ModeField& coeffs) const;
    void forward(std::span<const double> in, std::span<double> out) const;
    void inverse(std::span<const double> in, std::span<double> out) const;

    /// Zero-mean solution of laplacian_h(u) = rhs - mean(rhs) (pseudo-inverse).
    ScalarField solve_poisson(const ScalarField& rhs) const;

private:
    Grid2D grid_;
    std::vector<double> lambda_, lambda_x_, lambda_y_;
    std::unique_ptr<detail::R2RPlans> plans_;
};

/// Orthonormal half-sample sine transform; diagonalizes laplacian_h with
/// homogeneous Dirichlet ghosts (ghost = -interior).
class SineBasisPlan {
public:
    explicit SineBasisPlan(const Grid2D& grid);
    ~SineBasisPlan();
    SineBasisPlan(const SineBasisPlan&) = delete;
    SineBasisPlan& operator=(const SineBasisPlan&) = delete;

    static std::shared_ptr<const SineBasisPlan> shared(const Grid2D& grid);

    const Grid2D& grid() const noexcept { return grid_; }
    double eigenvalue(int kx, int ky) const noexcept { return lambda_[grid_.index(kx, ky)]; }

    ModeField forward(const ScalarField& f) const;
    ScalarField inverse(const ModeField& coeffs) const;

    /// Solves laplacian_h(u) = rhs with Dirichlet(c) ghosts.
    ScalarField solve_poisson(const ScalarField& rhs, double boundary_value = 0.0) const;

private:
    Grid2D grid_;
    std::vector<double> lambda_;
    std::unique_ptr<detail::R2RPlans> plans_;
};

/// Constant-coefficient linear part of the chemical potential in mode space:
/// L(lambda)_ij = -gamma_i lambda delta_ij + chi_ij - alpha_ij / lambda + extra_ij
/// (the alpha term is dropped at lambda = 0).
struct LinearSymbol {
    std::array<double, 3> gamma_i{0.0, 0.0, 0.0};
    Mat3 chi = Mat3::Zero();
    Mat3 alpha = Mat3::Zero();
    Mat3 extra = Mat3::Zero();

    Mat3 at(double lambda) const;
};

/// Per-mode inverses of H(lambda) = I - (dt/2) lambda m L(lambda), i.e. the
/// operator [1 - (dt/2) m Laplacian L] of the Crank-Nicolson step.
class BlockHelmholtzPlan {
public:
    BlockHelmholtzPlan(std::shared_ptr<const CosineBasisPlan> basis, const LinearSymbol& symbol,
                       const Mat3& mobility, double dt);

    const CosineBasisPlan& basis() const noexcept { return *basis_; }
    std::shared_ptr<const CosineBasisPlan> basis_ptr() const noexcept { return basis_; }
    const Grid2D& grid() const noexcept { return basis_->grid(); }
    double dt() const noexcept { return dt_; }
    const LinearSymbol& symbol() const noexcept { return symbol_; }
    const Mat3& mobility() const noexcept { return m_; }

    /// Per-mode block H for mode index k (ky * Nx + kx).
    Mat3 block(std::size_t k) const;
    const Mat3& inverse_block(std::size_t k) const noexcept { return inv_[k]; }

    ModeTriple forward(const FieldTriple& f) const;
    FieldTriple inverse(const ModeTriple& c) const;

    /// x = H^{-1} rhs.
    FieldTriple solve(const FieldTriple& rhs) const;
    /// y = H x.
    FieldTriple apply(const FieldTriple& x) const;

    /// x = H^{-1} [a + (dt/2) m Lap L b + dt m Lap h] evaluated mode by mode;
    /// b or h may be null to omit that term.
    FieldTriple solve_combined(const FieldTriple& a, const FieldTriple* b, const FieldTriple* h) const;

    /// L b evaluated through the symbol (without the extra term), exact for the cosine basis.
    FieldTriple apply_symbol(const FieldTriple& b, bool include_extra = false) const;
    /// m Lap v for each cell, computed spectrally.
    FieldTriple mobility_laplacian(const FieldTriple& v) const;

private:
    std::shared_ptr<const CosineBasisPlan> basis_;
    LinearSymbol symbol_;
    Mat3 m_;
    double dt_;
    std::vector<Mat3> inv_;
};

/// Solves [1 - (dt/2) m Lap L] x = rhs with a prebuilt plan.
FieldTriple solve_block_helmholtz(const BlockHelmholtzPlan& plan, const FieldTriple& rhs);

} // namespace copoly
