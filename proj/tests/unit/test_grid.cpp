#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "copoly/grid.hpp"
#include "oracles.hpp"

using namespace copoly;
using std::numbers::pi;

TEST(Grid2D, SpacingReproducesLengthsExactly) {
    const Grid2D g(12, 7, 1.5, 0.7);
    EXPECT_EQ(g.hx() * g.nx(), g.lx());
    EXPECT_DOUBLE_EQ(g.hy() * g.ny(), g.ly());
    EXPECT_EQ(g.size(), 84u);
}

TEST(Grid2D, FirstCellCenterIsHalfSpacing) {
    const Grid2D g(8, 4, 2.0, 1.0);
    const auto c = g.center(0, 0);
    EXPECT_DOUBLE_EQ(c[0], g.hx() / 2);
    EXPECT_DOUBLE_EQ(c[1], g.hy() / 2);
    const auto last = g.center(7, 3);
    EXPECT_DOUBLE_EQ(last[0], 2.0 - g.hx() / 2);
}

TEST(Grid2D, RejectsInvalidSizes) {
    EXPECT_THROW(Grid2D(0, 4), std::invalid_argument);
    EXPECT_THROW(Grid2D(4, 4, -1.0, 1.0), std::invalid_argument);
}

TEST(ScalarField, MismatchedGridsAreRejected) {
    ScalarField a(Grid2D(4, 4)), b(Grid2D(4, 5));
    EXPECT_THROW(a += b, std::invalid_argument);
    EXPECT_THROW(inner_h(a, b), std::invalid_argument);
}

TEST(LaplacianH, ConstantFieldGivesZero) {
    const Grid2D g(6, 5);
    const ScalarField f(g, 3.7);
    EXPECT_EQ(max_abs(laplacian_h(f)), 0.0);
}

TEST(LaplacianH, CellCenteredCosineIsEigenvector) {
    const Grid2D g(4, 4);
    const auto f = ScalarField::from_function(g, [](double x, double) { return std::cos(pi * x); });
    const ScalarField lf = laplacian_h(f);
    const double lam = -(2.0 / (g.hx() * g.hx())) * (1.0 - std::cos(pi * g.hx()));
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(lf[k], lam * f[k], 1e-12 * std::abs(lam));
}

TEST(LaplacianH, DegenerateRowMatchesHandStencil) {
    const Grid2D g(3, 1, 3.0, 1.0);  // h = 1
    const ScalarField f(g, std::vector<double>{1.0, 2.0, 1.0});
    const ScalarField lf = laplacian_h(f);
    // Mirror ghosts: (1 - 2*1 + 2) = 1, (1 - 4 + 1) = -2, (2 - 2 + 1) = 1.
    EXPECT_DOUBLE_EQ(lf[0], 1.0);
    EXPECT_DOUBLE_EQ(lf[1], -2.0);
    EXPECT_DOUBLE_EQ(lf[2], 1.0);
}

TEST(LaplacianH, MatchesDenseStencilAssembly) {
    const Grid2D g(7, 5, 1.0, 0.8);
    const ScalarField f = oracle::random_field(g, 3);
    const Eigen::VectorXd ref = oracle::laplacian_matrix(g) * oracle::to_vec(f);
    const ScalarField lf = laplacian_h(f);
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(lf[k], ref[static_cast<Eigen::Index>(k)], 1e-10);
}

TEST(LaplacianH, DirichletGhostExtrapolatesThroughWall) {
    const Grid2D g(5, 4);
    const double c = 2.5;
    const ScalarField f(g, c);
    // ghost = 2c - interior = c: a constant equal to the boundary value is harmonic.
    EXPECT_LT(max_abs(laplacian_h(f, BoundaryKind::dirichlet(c))), 1e-10);
    const ScalarField z = oracle::random_field(g, 11);
    const Eigen::VectorXd ref = oracle::laplacian_matrix(g, true) * oracle::to_vec(z);
    const ScalarField lz = laplacian_h(z, BoundaryKind::dirichlet(0.0));
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(lz[k], ref[static_cast<Eigen::Index>(k)], 1e-10);
}

TEST(LaplacianH, NeumannHasZeroMean) {
    const Grid2D g(9, 6);
    const ScalarField f = oracle::random_field(g, 5);
    EXPECT_LE(std::abs(mean_h(laplacian_h(f))), 1e-13 * norm_h(f));
}

TEST(LaplacianH, NeumannIsSelfAdjoint) {
    const Grid2D g(8, 8);
    const ScalarField f = oracle::random_field(g, 1), h = oracle::random_field(g, 2);
    const double a = inner_h(f, laplacian_h(h)), b = inner_h(laplacian_h(f), h);
    EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
}

TEST(LaplacianH, SummationByParts) {
    const Grid2D g(8, 6, 1.0, 0.75);
    const ScalarField f = oracle::random_field(g, 21);
    // (f, Lap f)_h + sum over interior faces of (Df)^2 h^2 = 0
    const double lhs = inner_h(f, laplacian_h(f));
    const double faces = face_energy_x(f) + face_energy_y(f);
    EXPECT_NEAR(lhs + faces, 0.0, 1e-12 * faces);
}

TEST(LaplacianH, CosineModesHaveClosedFormEigenvalues) {
    const Grid2D g(16, 8, 1.0, 0.5);
    for (int kx : {1, 3, 7})
        for (int ky : {0, 2, 5}) {
            const auto f = ScalarField::from_function(g, [&](double x, double y) {
                return std::cos(kx * pi * x / g.lx()) * std::cos(ky * pi * y / g.ly());
            });
            const double lam = -(4.0 / (g.hx() * g.hx())) * std::pow(std::sin(kx * pi / (2.0 * g.nx())), 2) -
                               (4.0 / (g.hy() * g.hy())) * std::pow(std::sin(ky * pi / (2.0 * g.ny())), 2);
            const ScalarField lf = laplacian_h(f);
            for (std::size_t k = 0; k < f.size(); ++k) ASSERT_NEAR(lf[k], lam * f[k], 1e-9 * std::abs(lam));
        }
}

TEST(GradH, ConstantFieldGivesZero) {
    const Grid2D g(5, 5);
    const auto [gx, gy] = grad_h(ScalarField(g, -2.0));
    EXPECT_EQ(max_abs(gx), 0.0);
    EXPECT_EQ(max_abs(gy), 0.0);
}

TEST(GradH, LinearProfileIsExactInInteriorOnly) {
    const Grid2D g(6, 1, 6.0, 1.0);  // h = 1, x_i = i + 1/2
    const auto f = ScalarField::from_function(g, [](double x, double) { return x; });
    const auto [gx, gy] = grad_h(f);
    for (int i = 1; i < 5; ++i) EXPECT_DOUBLE_EQ(gx(i, 0), 1.0);
    // Mirror ghosts: (x_1 - x_0) / 2 = 0.5 at both ends.
    EXPECT_DOUBLE_EQ(gx(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(gx(5, 0), 0.5);
    EXPECT_EQ(max_abs(gy), 0.0);
}

TEST(GradH, YComponentMirrorsX) {
    const Grid2D g(1, 6, 1.0, 6.0);
    const auto f = ScalarField::from_function(g, [](double, double y) { return y; });
    const auto [gx, gy] = grad_h(f);
    for (int j = 1; j < 5; ++j) EXPECT_DOUBLE_EQ(gy(0, j), 1.0);
    EXPECT_DOUBLE_EQ(gy(0, 0), 0.5);
    EXPECT_EQ(max_abs(gx), 0.0);
}

TEST(MixedXY, ConstantAndXOnlyFieldsGiveZero) {
    const Grid2D g(6, 6);
    EXPECT_EQ(max_abs(mixed_xy_h(ScalarField(g, 1.5))), 0.0);
    const auto fx = ScalarField::from_function(g, [](double x, double) { return std::sin(3 * x); });
    EXPECT_LT(max_abs(mixed_xy_h(fx)), 1e-12);
}

TEST(MixedXY, BilinearFieldIsOneAwayFromBoundary) {
    const Grid2D g(6, 6);
    const auto f = ScalarField::from_function(g, [](double x, double y) { return x * y; });
    const ScalarField m = mixed_xy_h(f);
    for (int j = 1; j < 5; ++j)
        for (int i = 1; i < 5; ++i) EXPECT_NEAR(m(i, j), 1.0, 1e-12);
}

TEST(InnerProducts, UnitFieldOnUnitSquare) {
    const Grid2D g(8, 8);
    const ScalarField one(g, 1.0), zero(g, 0.0);
    EXPECT_DOUBLE_EQ(inner_h(one, one), 1.0);
    EXPECT_DOUBLE_EQ(norm_h(one), 1.0);
    EXPECT_DOUBLE_EQ(mean_h(one), 1.0);
    EXPECT_EQ(inner_h(one, zero), 0.0);
}

TEST(InnerProducts, MatchDoubleLoopOracle) {
    const Grid2D g(8, 8, 1.3, 0.9);
    const ScalarField f = oracle::random_field(g, 31), h = oracle::random_field(g, 32);
    double s = 0.0, m = 0.0;
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) {
            s += f(i, j) * h(i, j) * g.hx() * g.hy();
            m += f(i, j);
        }
    EXPECT_NEAR(inner_h(f, h), s, 1e-14 * std::abs(s) + 1e-16);
    EXPECT_NEAR(mean_h(f), m / 64.0, 1e-14);
    EXPECT_NEAR(norm_h(f), std::sqrt(inner_h(f, f)), 1e-15);
}
