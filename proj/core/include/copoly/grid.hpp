#pragma once

/// Cell-centered uniform 2D grid, scalar fields and the discrete difference,
/// average and inner-product operators every other module is built on.

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace copoly {

/// Geometry of an Nx x Ny cell-centered grid on [0,Lx] x [0,Ly].
/// Cell (i, j) is 0-based with center ((i+1/2)hx, (j+1/2)hy).
class Grid2D {
public:
    /// Empty 0 x 0 grid (placeholder for default-constructed fields).
    Grid2D() = default;
    Grid2D(int nx, int ny, double lx = 1.0, double ly = 1.0);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    double lx() const noexcept { return lx_; }
    double ly() const noexcept { return ly_; }
    double hx() const noexcept { return hx_; }
    double hy() const noexcept { return hy_; }

    std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
    }
    std::array<double, 2> center(int i, int j) const noexcept {
        return {(i + 0.5) * hx_, (j + 0.5) * hy_};
    }
    double cell_area() const noexcept { return hx_ * hy_; }
    double area() const noexcept { return lx_ * ly_; }

    friend bool operator==(const Grid2D& a, const Grid2D& b) noexcept {
        return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.lx_ == b.lx_ && a.ly_ == b.ly_;
    }

private:
    int nx_ = 0, ny_ = 0;
    double lx_ = 0.0, ly_ = 0.0, hx_ = 0.0, hy_ = 0.0;
};

/// One real value per cell, stored row by row (y outer, x inner).
class ScalarField {
public:
    /// Empty field on the empty grid.
    ScalarField() = default;
    explicit ScalarField(const Grid2D& grid, double value = 0.0);
    ScalarField(const Grid2D& grid, std::vector<double> values);

    template <class F>
    static ScalarField from_function(const Grid2D& grid, F&& f) {
        ScalarField out(grid);
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) {
                const auto c = grid.center(i, j);
                out(i, j) = f(c[0], c[1]);
            }
        return out;
    }

    const Grid2D& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
    double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double s) noexcept;
    ScalarField& operator+=(double s) noexcept;
    /// this += a * x
    ScalarField& axpy(double a, const ScalarField& x);

    bool all_finite() const noexcept;

private:
    Grid2D grid_;
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Three species fields (A, B, S) on one grid.
using FieldTriple = std::array<ScalarField, 3>;

FieldTriple make_triple(const Grid2D& grid, double value = 0.0);

/// Boundary rule realized through ghost cells.
struct BoundaryKind {
    enum class Tag { NeumannZero, DirichletConstant };
    Tag tag = Tag::NeumannZero;
    double value = 0.0;

    static BoundaryKind neumann() noexcept { return {Tag::NeumannZero, 0.0}; }
    static BoundaryKind dirichlet(double c) noexcept { return {Tag::DirichletConstant, c}; }
};

/// Five-point Laplacian with ghost values from the boundary rule.
ScalarField laplacian_h(const ScalarField& f, BoundaryKind bc = BoundaryKind::neumann());

/// Cell-centered central gradient (d_x A_x f, d_y A_y f).
std::pair<ScalarField, ScalarField> grad_h(const ScalarField& f, BoundaryKind bc = BoundaryKind::neumann());

/// Cell-centered mixed derivative d_x d_y A_x A_y f with mirror (zero-Neumann) ghosts.
ScalarField mixed_xy_h(const ScalarField& f);

double inner_h(const ScalarField& f, const ScalarField& g);
double norm_h(const ScalarField& f);
double mean_h(const ScalarField& f);
double max_abs(const ScalarField& f) noexcept;

/// Face-based gradient energy sum over interior x-faces of (D_x f)^2 h_x h_y
/// (boundary faces carry zero flux under zero-Neumann).
double face_energy_x(const ScalarField& f);
/// Same over interior y-faces.
double face_energy_y(const ScalarField& f);

/// Throws std::invalid_argument when the grids differ.
void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what);

} // namespace copoly
