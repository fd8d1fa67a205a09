#include "copoly/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace copoly {

Grid2D::Grid2D(int nx, int ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), hx_(0.0), hy_(0.0) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("Grid2D: cell counts must be positive");
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
        throw std::invalid_argument("Grid2D: domain lengths must be positive and finite");
    hx_ = lx / nx;
    hy_ = ly / ny;
}

ScalarField::ScalarField(const Grid2D& grid, double value) : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const Grid2D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw std::invalid_argument("ScalarField: value count " + std::to_string(values_.size()) +
                                    " does not match grid size " + std::to_string(grid_.size()));
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    require_same_grid(*this, o, "operator+=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    require_same_grid(*this, o, "operator-=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

ScalarField& ScalarField::operator+=(double s) noexcept {
    for (double& v : values_) v += s;
    return *this;
}

ScalarField& ScalarField::axpy(double a, const ScalarField& x) {
    require_same_grid(*this, x, "axpy");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += a * x.values_[k];
    return *this;
}

bool ScalarField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

FieldTriple make_triple(const Grid2D& grid, double value) {
    return {ScalarField(grid, value), ScalarField(grid, value), ScalarField(grid, value)};
}

namespace {

/// Ghost-aware sampling: indices one cell outside the domain are resolved by the boundary rule.
struct Sampler {
    const ScalarField& f;
    BoundaryKind bc;
    int nx, ny;

    double operator()(int i, int j) const noexcept {
        int ii = i, jj = j;
        bool ghost = false;
        if (ii < 0) { ii = 0; ghost = true; }
        if (ii >= nx) { ii = nx - 1; ghost = true; }
        if (jj < 0) { jj = 0; ghost = true; }
        if (jj >= ny) { jj = ny - 1; ghost = true; }
        const double v = f(ii, jj);
        if (!ghost || bc.tag == BoundaryKind::Tag::NeumannZero) return v;
        return 2.0 * bc.value - v;
    }
};

} // namespace

ScalarField laplacian_h(const ScalarField& f, BoundaryKind bc) {
    const Grid2D& g = f.grid();
    const int nx = g.nx(), ny = g.ny();
    const double ix2 = 1.0 / (g.hx() * g.hx()), iy2 = 1.0 / (g.hy() * g.hy());
    const Sampler s{f, bc, nx, ny};
    ScalarField out(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = f(i, j);
            out(i, j) = (s(i + 1, j) - 2.0 * c + s(i - 1, j)) * ix2 + (s(i, j + 1) - 2.0 * c + s(i, j - 1)) * iy2;
        }
    return out;
}

std::pair<ScalarField, ScalarField> grad_h(const ScalarField& f, BoundaryKind bc) {
    const Grid2D& g = f.grid();
    const int nx = g.nx(), ny = g.ny();
    const double ix = 0.5 / g.hx(), iy = 0.5 / g.hy();
    const Sampler s{f, bc, nx, ny};
    ScalarField gx(g), gy(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            gx(i, j) = (s(i + 1, j) - s(i - 1, j)) * ix;
            gy(i, j) = (s(i, j + 1) - s(i, j - 1)) * iy;
        }
    return {std::move(gx), std::move(gy)};
}

ScalarField mixed_xy_h(const ScalarField& f) {
    const Grid2D& g = f.grid();
    const int nx = g.nx(), ny = g.ny();
    const double w = 1.0 / (4.0 * g.hx() * g.hy());
    const Sampler s{f, BoundaryKind::neumann(), nx, ny};
    ScalarField out(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out(i, j) = (s(i + 1, j + 1) - s(i - 1, j + 1) - s(i + 1, j - 1) + s(i - 1, j - 1)) * w;
    return out;
}

double inner_h(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f, g, "inner_h");
    double acc = 0.0;
    const auto a = f.values();
    const auto b = g.values();
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc * f.grid().cell_area();
}

double norm_h(const ScalarField& f) { return std::sqrt(inner_h(f, f)); }

double mean_h(const ScalarField& f) {
    double acc = 0.0;
    for (double v : f.values()) acc += v;
    return acc * f.grid().cell_area() / f.grid().area();
}

double max_abs(const ScalarField& f) noexcept {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

double face_energy_x(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double acc = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const double d = (f(i + 1, j) - f(i, j)) / g.hx();
            acc += d * d;
        }
    return acc * g.cell_area();
}

double face_energy_y(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double acc = 0.0;
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const double d = (f(i, j + 1) - f(i, j)) / g.hy();
            acc += d * d;
        }
    return acc * g.cell_area();
}

} // namespace copoly
