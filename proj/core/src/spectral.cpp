#include "copoly/spectral.hpp"

#include <algorithm>
#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

namespace copoly {

namespace detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

/// In-place 2D real-to-real FFTW plans plus the per-axis scalings that make
/// the transform pair orthonormal.
struct R2RPlans {
    int nx = 0, ny = 0;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    std::vector<double> fwd_x, fwd_y, inv_x, inv_y;

    R2RPlans(int nx_, int ny_, bool sine) : nx(nx_), ny(ny_) {
        std::vector<double> buf(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0.0);
        const fftw_r2r_kind kf = sine ? FFTW_RODFT10 : FFTW_REDFT10;
        const fftw_r2r_kind ki = sine ? FFTW_RODFT01 : FFTW_REDFT01;
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fwd = fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), kf, kf, FFTW_ESTIMATE | FFTW_UNALIGNED);
            inv = fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), ki, ki, FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        if (!fwd || !inv) throw std::runtime_error("FFTW failed to create a real-to-real plan");
        auto scales = [sine](int n, std::vector<double>& f, std::vector<double>& iv) {
            f.resize(static_cast<std::size_t>(n));
            iv.resize(static_cast<std::size_t>(n));
            const int special = sine ? n - 1 : 0;
            for (int k = 0; k < n; ++k) {
                const double s = std::sqrt((k == special ? 1.0 : 2.0) / n);
                f[static_cast<std::size_t>(k)] = 0.5 * s;
                iv[static_cast<std::size_t>(k)] = k == special ? s : 0.5 * s;
            }
        };
        scales(nx, fwd_x, inv_x);
        scales(ny, fwd_y, inv_y);
    }

    ~R2RPlans() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
    }

    R2RPlans(const R2RPlans&) = delete;
    R2RPlans& operator=(const R2RPlans&) = delete;

    void forward(std::span<const double> in, std::span<double> out) const {
        check(in.size(), out.size());
        std::copy(in.begin(), in.end(), out.begin());
        fftw_execute_r2r(fwd, out.data(), out.data());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out[static_cast<std::size_t>(j) * nx + i] *= fwd_x[static_cast<std::size_t>(i)] * fwd_y[static_cast<std::size_t>(j)];
    }

    void inverse(std::span<const double> in, std::span<double> out) const {
        check(in.size(), out.size());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nx + i;
                out[k] = in[k] * inv_x[static_cast<std::size_t>(i)] * inv_y[static_cast<std::size_t>(j)];
            }
        fftw_execute_r2r(inv, out.data(), out.data());
    }

    void check(std::size_t a, std::size_t b) const {
        const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
        if (a != n || b != n) throw std::invalid_argument("transform size does not match the plan grid");
    }
};

} // namespace detail

namespace {

double sin2_eigen(int k, int n, double h) {
    const double s = std::sin(k * std::numbers::pi / (2.0 * n));
    return -4.0 / (h * h) * s * s;
}

using GridKey = std::tuple<int, int, double, double>;

template <class Plan>
std::shared_ptr<const Plan> cached(const Grid2D& grid) {
    static std::mutex mtx;
    static std::map<GridKey, std::weak_ptr<const Plan>> cache;
    const GridKey key{grid.nx(), grid.ny(), grid.lx(), grid.ly()};
    std::lock_guard<std::mutex> lock(mtx);
    if (auto it = cache.find(key); it != cache.end())
        if (auto sp = it->second.lock()) return sp;
    auto sp = std::make_shared<const Plan>(grid);
    cache[key] = sp;
    return sp;
}

} // namespace

// ---------------------------------------------------------------- cosine

CosineBasisPlan::CosineBasisPlan(const Grid2D& grid)
    : grid_(grid), plans_(std::make_unique<detail::R2RPlans>(grid.nx(), grid.ny(), false)) {
    lambda_x_.resize(static_cast<std::size_t>(grid.nx()));
    lambda_y_.resize(static_cast<std::size_t>(grid.ny()));
    for (int k = 0; k < grid.nx(); ++k) lambda_x_[static_cast<std::size_t>(k)] = sin2_eigen(k, grid.nx(), grid.hx());
    for (int k = 0; k < grid.ny(); ++k) lambda_y_[static_cast<std::size_t>(k)] = sin2_eigen(k, grid.ny(), grid.hy());
    lambda_.resize(grid.size());
    for (int ky = 0; ky < grid.ny(); ++ky)
        for (int kx = 0; kx < grid.nx(); ++kx)
            lambda_[grid.index(kx, ky)] = lambda_x_[static_cast<std::size_t>(kx)] + lambda_y_[static_cast<std::size_t>(ky)];
}

CosineBasisPlan::~CosineBasisPlan() = default;

std::shared_ptr<const CosineBasisPlan> CosineBasisPlan::shared(const Grid2D& grid) {
    return cached<CosineBasisPlan>(grid);
}

void CosineBasisPlan::forward(std::span<const double> in, std::span<double> out) const { plans_->forward(in, out); }
void CosineBasisPlan::inverse(std::span<const double> in, std::span<double> out) const { plans_->inverse(in, out); }

ModeField CosineBasisPlan::forward(const ScalarField& f) const {
    if (!(f.grid() == grid_)) throw std::invalid_argument("CosineBasisPlan: field grid does not match plan");
    ModeField out(grid_.size());
    plans_->forward(f.values(), out);
    return out;
}

ScalarField CosineBasisPlan::inverse(const ModeField& coeffs) const {
    ScalarField out(grid_);
    plans_->inverse(coeffs, out.values());
    return out;
}

ScalarField CosineBasisPlan::solve_poisson(const ScalarField& rhs) const {
    ModeField c = forward(rhs);
    c[0] = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k) c[k] /= lambda_[k];
    return inverse(c);
}

// ---------------------------------------------------------------- sine

SineBasisPlan::SineBasisPlan(const Grid2D& grid)
    : grid_(grid), plans_(std::make_unique<detail::R2RPlans>(grid.nx(), grid.ny(), true)) {
    lambda_.resize(grid.size());
    for (int ky = 0; ky < grid.ny(); ++ky)
        for (int kx = 0; kx < grid.nx(); ++kx)
            lambda_[grid.index(kx, ky)] =
                sin2_eigen(kx + 1, grid.nx(), grid.hx()) + sin2_eigen(ky + 1, grid.ny(), grid.hy());
}

SineBasisPlan::~SineBasisPlan() = default;

std::shared_ptr<const SineBasisPlan> SineBasisPlan::shared(const Grid2D& grid) { return cached<SineBasisPlan>(grid); }

ModeField SineBasisPlan::forward(const ScalarField& f) const {
    if (!(f.grid() == grid_)) throw std::invalid_argument("SineBasisPlan: field grid does not match plan");
    ModeField out(grid_.size());
    plans_->forward(f.values(), out);
    return out;
}

ScalarField SineBasisPlan::inverse(const ModeField& coeffs) const {
    ScalarField out(grid_);
    plans_->inverse(coeffs, out.values());
    return out;
}

ScalarField SineBasisPlan::solve_poisson(const ScalarField& rhs, double boundary_value) const {
    ModeField c = forward(rhs);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] /= lambda_[k];
    ScalarField u = inverse(c);
    u += boundary_value;
    return u;
}

// ---------------------------------------------------------------- block Helmholtz

Mat3 LinearSymbol::at(double lambda) const {
    Mat3 L = chi + extra;
    for (int i = 0; i < 3; ++i) L(i, i) -= gamma_i[static_cast<std::size_t>(i)] * lambda;
    if (lambda != 0.0) L -= alpha / lambda;
    return L;
}

BlockHelmholtzPlan::BlockHelmholtzPlan(std::shared_ptr<const CosineBasisPlan> basis, const LinearSymbol& symbol,
                                       const Mat3& mobility, double dt)
    : basis_(std::move(basis)), symbol_(symbol), m_(mobility), dt_(dt) {
    if (!basis_) throw std::invalid_argument("BlockHelmholtzPlan: null basis");
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("BlockHelmholtzPlan: dt must be finite and >= 0");
    const std::size_t n = basis_->grid().size();
    inv_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Mat3 H = block(k);
        const double det = H.determinant();
        const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
        if (!std::isfinite(det) || std::abs(det) <= 1e-13 * scale * scale * scale)
            throw std::runtime_error("BlockHelmholtzPlan: singular block at mode index " + std::to_string(k) +
                                     " (kx=" + std::to_string(k % static_cast<std::size_t>(grid().nx())) +
                                     ", ky=" + std::to_string(k / static_cast<std::size_t>(grid().nx())) + ")");
        inv_[k] = H.inverse();
    }
}

Mat3 BlockHelmholtzPlan::block(std::size_t k) const {
    const double lam = basis_->eigenvalues()[k];
    return Mat3::Identity() - 0.5 * dt_ * lam * m_ * symbol_.at(lam);
}

ModeTriple BlockHelmholtzPlan::forward(const FieldTriple& f) const {
    return {basis_->forward(f[0]), basis_->forward(f[1]), basis_->forward(f[2])};
}

FieldTriple BlockHelmholtzPlan::inverse(const ModeTriple& c) const {
    return {basis_->inverse(c[0]), basis_->inverse(c[1]), basis_->inverse(c[2])};
}

namespace {
inline Vec3 gather(const ModeTriple& c, std::size_t k) { return {c[0][k], c[1][k], c[2][k]}; }
inline void scatter(ModeTriple& c, std::size_t k, const Vec3& v) {
    c[0][k] = v[0];
    c[1][k] = v[1];
    c[2][k] = v[2];
}
} // namespace

FieldTriple BlockHelmholtzPlan::solve(const FieldTriple& rhs) const { return solve_combined(rhs, nullptr, nullptr); }

FieldTriple BlockHelmholtzPlan::apply(const FieldTriple& x) const {
    ModeTriple c = forward(x);
    const std::size_t n = c[0].size();
    for (std::size_t k = 0; k < n; ++k) scatter(c, k, block(k) * gather(c, k));
    return inverse(c);
}

FieldTriple BlockHelmholtzPlan::solve_combined(const FieldTriple& a, const FieldTriple* b, const FieldTriple* h) const {
    ModeTriple ca = forward(a);
    ModeTriple cb, ch;
    if (b) cb = forward(*b);
    if (h) ch = forward(*h);
    const auto lam = basis_->eigenvalues();
    const std::size_t n = ca[0].size();
    for (std::size_t k = 0; k < n; ++k) {
        Vec3 r = gather(ca, k);
        if (lam[k] != 0.0) {
            if (b) r += 0.5 * dt_ * lam[k] * (m_ * (symbol_.at(lam[k]) * gather(cb, k)));
            if (h) r += dt_ * lam[k] * (m_ * gather(ch, k));
        }
        scatter(ca, k, inv_[k] * r);
    }
    return inverse(ca);
}

FieldTriple BlockHelmholtzPlan::apply_symbol(const FieldTriple& b, bool include_extra) const {
    LinearSymbol s = symbol_;
    if (!include_extra) s.extra.setZero();
    ModeTriple c = forward(b);
    const auto lam = basis_->eigenvalues();
    for (std::size_t k = 0; k < c[0].size(); ++k) scatter(c, k, s.at(lam[k]) * gather(c, k));
    return inverse(c);
}

FieldTriple BlockHelmholtzPlan::mobility_laplacian(const FieldTriple& v) const {
    ModeTriple c = forward(v);
    const auto lam = basis_->eigenvalues();
    for (std::size_t k = 0; k < c[0].size(); ++k) scatter(c, k, lam[k] * (m_ * gather(c, k)));
    return inverse(c);
}

FieldTriple solve_block_helmholtz(const BlockHelmholtzPlan& plan, const FieldTriple& rhs) { return plan.solve(rhs); }

} // namespace copoly
