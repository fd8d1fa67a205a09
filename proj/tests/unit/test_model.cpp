#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "copoly/model.hpp"
#include "oracles.hpp"

using namespace copoly;
using std::numbers::pi;

namespace {

Mat3 chi_of(double ab, double as, double bs) {
    Mat3 c;
    c << 0, ab, as, ab, 0, bs, as, bs, 0;
    return c;
}

ModelInputs example_inputs(std::array<double, 3> phibar = {0.3, 0.2, 0.5}) {
    ModelInputs in;
    in.N = {3.0, 2.0, 1.0};
    in.chi = chi_of(2.0, 3.0, 4.0);
    in.eps = 0.1;
    in.gamma = 1.0;
    in.phibar = phibar;
    in.M << 4, 1, 2, 1, 5, 3, 2, 3, 6;
    in.M *= 1e-5;
    return in;
}

FieldTriple uniform(const Grid2D& g, std::array<double, 3> v) {
    return {ScalarField(g, v[0]), ScalarField(g, v[1]), ScalarField(g, v[2])};
}

} // namespace

TEST(ModelParams, DerivedCoefficients) {
    const ModelInputs in = example_inputs();
    const ModelParams p = ModelParams::make(in);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(p.gamma_i[i], in.eps * in.eps / in.phibar[i]);
    EXPECT_DOUBLE_EQ(p.alpha(0, 1), -1.5 * in.eps * in.gamma / (0.3 * 0.2));
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(p.alpha(2, i), 0.0);
        EXPECT_EQ(p.alpha(i, 2), 0.0);
    }
}

TEST(ModelParams, ValidationNamesTheProblem) {
    ModelInputs in = example_inputs();
    in.M(0, 0) = -1e-3;
    try {
        ModelParams::make(in);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("mobility"), std::string::npos);
    }
    in = example_inputs({0.6, 0.6, -0.2});
    EXPECT_THROW(ModelParams::make(in), std::invalid_argument);
    in = example_inputs();
    in.chi(0, 0) = 1.0;
    EXPECT_THROW(ModelParams::make(in), std::invalid_argument);
}

TEST(RegLog, ValueAtOne) {
    for (double N : {1.0, 2.0, 7.5}) {
        const RegLog r = reg_log(1.0, N, 0.01);
        EXPECT_EQ(r.value, 0.0);
        EXPECT_DOUBLE_EQ(r.derivative, 1.0 / N);
    }
}

TEST(RegLog, BranchesMeetAtSigma) {
    const double s = 0.01;
    const RegLog at = reg_log(s, 1.0, s);
    EXPECT_NEAR(at.value, s * std::log(s), 1e-16);
    EXPECT_NEAR(at.derivative, 1.0 + std::log(s), 1e-14);
    const RegLog above = reg_log(s * (1 + 1e-12), 1.0, s);
    EXPECT_NEAR(above.value, at.value, 1e-12);
    EXPECT_NEAR(above.derivative, at.derivative, 1e-9);
    EXPECT_NEAR(reg_log_second(s * (1 + 1e-12), 1.0, s), reg_log_second(s, 1.0, s), 1e-7);
}

TEST(RegLog, QuadraticBranchFormula) {
    const double s = 0.01;
    EXPECT_NEAR(reg_log(0.005, 1.0, s).value, 0.00125 + 0.005 * std::log(0.01) - 0.005, 1e-16);
    for (double phi : {-0.2, 0.0, 0.003, 0.5})
        EXPECT_NEAR(reg_log(phi, 2.0, s).value, oracle::reg_log_value(phi, 2.0, s), 1e-15);
}

TEST(SolvePsi, UniformDataGivesZero) {
    const Grid2D g(8, 8);
    EXPECT_LT(max_abs(solve_psi(ScalarField(g, 0.3), 0.3)), 1e-15);
}

TEST(SolvePsi, CosineEigenvector) {
    const Grid2D g(16, 16);
    const auto c = ScalarField::from_function(g, [](double x, double) { return std::cos(pi * x); });
    const double lam = -(4.0 / (g.hx() * g.hx())) * std::pow(std::sin(pi / (2.0 * g.nx())), 2);
    ScalarField phi = c;
    phi += 0.25;
    const ScalarField psi = solve_psi(phi, 0.25);
    for (std::size_t k = 0; k < c.size(); ++k) EXPECT_NEAR(psi[k], c[k] / lam, 1e-12);
}

TEST(SolvePsi, MatchesDenseSolve) {
    const Grid2D g(8, 8);
    ScalarField rhs = oracle::random_field(g, 41);
    rhs += -mean_h(rhs);
    ScalarField phi = rhs;
    phi += 0.4;
    const ScalarField psi = solve_psi(phi, 0.4);
    // Dense oracle: [A; 1^T] psi = [rhs; 0] in the least-squares sense.
    const Eigen::MatrixXd A = oracle::laplacian_matrix(g);
    Eigen::MatrixXd Aug(65, 64);
    Aug.topRows(64) = A;
    Aug.row(64).setOnes();
    Eigen::VectorXd b(65);
    b.head(64) = oracle::to_vec(rhs);
    b[64] = 0.0;
    const Eigen::VectorXd ref = Aug.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < psi.size(); ++k)
        EXPECT_NEAR(psi[k], ref[static_cast<Eigen::Index>(k)], 1e-10 * ref.cwiseAbs().maxCoeff());
    const ScalarField back = laplacian_h(psi);
    for (std::size_t k = 0; k < psi.size(); ++k) EXPECT_NEAR(back[k], rhs[k], 1e-10);
    EXPECT_NEAR(mean_h(psi), 0.0, 1e-15);
}

TEST(SolvePsi, RejectsMeanMismatch) {
    const Grid2D g(8, 8);
    EXPECT_THROW(solve_psi(ScalarField(g, 0.3), 0.31), std::invalid_argument);
}

TEST(SolvePsi, CrossPairingIsSymmetric) {
    const Grid2D g(8, 8);
    ScalarField a = oracle::random_field(g, 1), b = oracle::random_field(g, 2);
    a += 0.3 - mean_h(a);
    b += 0.2 - mean_h(b);
    const ScalarField pa = solve_psi(a, 0.3), pb = solve_psi(b, 0.2);
    ScalarField da = a, db = b;
    da += -0.3;
    db += -0.2;
    const double x = inner_h(da, pb), y = inner_h(db, pa);
    EXPECT_NEAR(x, y, 1e-12 * std::abs(x));
}

TEST(ChemicalPotentials, UniformStateIsSpatiallyConstant) {
    const Grid2D g(8, 8);
    const ModelParams p = ModelParams::make(example_inputs());
    const FieldTriple phi = uniform(g, p.phibar);
    const ScalarField zero(g);
    const FieldTriple mu = chemical_potentials(phi, p, zero, zero);
    for (int i = 0; i < 3; ++i) {
        double expect = (1.0 + std::log(p.phibar[i])) / p.N[i];
        for (int j = 0; j < 3; ++j) expect += p.chi(i, j) * p.phibar[j];
        for (std::size_t k = 0; k < mu[i].size(); ++k) EXPECT_NEAR(mu[i][k], expect, 1e-13);
    }
}

TEST(ChemicalPotentials, EntropyOnlyAtInverseE) {
    const Grid2D g(4, 4);
    ModelInputs in;
    in.N = {1, 1, 1};
    in.gamma = 0.0;
    const double v = 1.0 / std::numbers::e;
    in.phibar = {v, v, 1.0 - 2.0 * v};
    const ModelParams p = ModelParams::make(in);
    FieldTriple phi = uniform(g, {v, v, 1.0 - 2.0 * v});
    const FieldTriple mu = chemical_potentials(phi, p);
    EXPECT_NEAR(mu[0][0], 0.0, 1e-15);
    EXPECT_NEAR(mu[1][5], 0.0, 1e-15);
}

TEST(ChemicalPotentials, AreTheGradientOfTheFreeEnergy) {
    const Grid2D g(8, 8);
    const FieldTriple phi0 = oracle::random_state(g, 99);
    ModelInputs in = example_inputs({mean_h(phi0[0]), mean_h(phi0[1]), mean_h(phi0[2])});
    in.gamma = 50.0;  // make the nonlocal term significant
    const ModelParams p = ModelParams::make(in);
    const FieldTriple mu = chemical_potentials(phi0, p);
    const double area = g.hx() * g.hy();
    for (int s = 0; s < 3; ++s)
        for (int cell : {0, 19, 63}) {
            // Unconstrained perturbation of one species at one cell: mean moves off phibar,
            // so the energy uses the pseudo-inverse (apply_linear), exactly as the gradient does.
            auto E = [&](double d) {
                FieldTriple x = phi0;
                x[s][static_cast<std::size_t>(cell)] += d;
                return free_energy_h(x, p);
            };
            const double order = oracle::richardson_order(E, mu[s][static_cast<std::size_t>(cell)] * area, 2e-2);
            EXPECT_NEAR(order, 2.0, 0.1) << "species " << s << " cell " << cell;
        }
}

TEST(FreeEnergy, UniformStateClosedForm) {
    const Grid2D g(8, 8, 1.0, 2.0);
    const ModelParams p = ModelParams::make(example_inputs());
    const FieldTriple phi = uniform(g, p.phibar);
    double dens = 0.0;
    for (int i = 0; i < 3; ++i) {
        dens += oracle::reg_log_value(p.phibar[i], p.N[i], p.sigma);
        for (int j = 0; j < 3; ++j) dens += 0.5 * p.chi(i, j) * p.phibar[i] * p.phibar[j];
    }
    EXPECT_NEAR(free_energy_h(phi, p), 2.0 * dens, 1e-13);
}

TEST(FreeEnergy, EqualThirdsEntropy) {
    const Grid2D g(6, 6);
    ModelInputs in;
    in.phibar = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    const ModelParams p = ModelParams::make(in);
    EXPECT_NEAR(free_energy_h(uniform(g, in.phibar), p), std::log(1.0 / 3.0), 1e-14);
}

TEST(FreeEnergy, InteractionTermIsLinearInChi) {
    const Grid2D g(8, 8);
    const FieldTriple phi = oracle::random_state(g, 5);
    ModelInputs in = example_inputs({mean_h(phi[0]), mean_h(phi[1]), mean_h(phi[2])});
    const double base = free_energy_h(phi, ModelParams::make(in));
    in.chi *= 2.0;
    const double doubled = free_energy_h(phi, ModelParams::make(in));
    in.chi.setZero();
    const double none = free_energy_h(phi, ModelParams::make(in));
    EXPECT_NEAR(doubled - none, 2.0 * (base - none), 1e-13);
}

TEST(FreeEnergy, MatchesDirectSummationOracle) {
    const Grid2D g(8, 8);
    const FieldTriple phi = oracle::random_state(g, 12, 0.2, 0.2, 0.195);  // dips into the quadratic branch
    ModelInputs in = example_inputs({mean_h(phi[0]), mean_h(phi[1]), mean_h(phi[2])});
    in.gamma = 20.0;
    const ModelParams p = ModelParams::make(in);
    const double ref = oracle::free_energy(phi, p);
    EXPECT_NEAR(free_energy_h(phi, p), ref, 1e-12 * std::abs(ref));
}

TEST(EffectiveMobility, DiagonalMobility) {
    const Mat3 m = effective_mobility(4e-3 * Mat3::Identity());
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) EXPECT_NEAR(m(k, l), k == l ? 8e-3 / 3 : -4e-3 / 3, 1e-18);
}

TEST(EffectiveMobility, FullMatrixEntry) {
    Mat3 M;
    M << 4, 1, 2, 1, 5, 3, 2, 3, 6;
    const Mat3 m = effective_mobility(1e-5 * M);
    EXPECT_NEAR(m(0, 0), 59.0 / 27.0 * 1e-5, 1e-19);
}

TEST(EffectiveMobility, RowsSumToZeroAndPsdOnConstraint) {
    Mat3 M;
    M << 2, 0.3, -0.1, 0.3, 1, 0.2, -0.1, 0.2, 3;
    const Mat3 m = effective_mobility(M);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(m.row(k).sum(), 0.0, 1e-15);
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14 * m.norm());
}

TEST(LagrangeMultiplier, Examples) {
    const Grid2D g(4, 4);
    FieldTriple mu = uniform(g, {2.5, 2.5, 2.5});
    EXPECT_NEAR(lagrange_multiplier(mu, Mat3::Identity())[3], -2.5, 1e-15);
    mu = uniform(g, {3.0, 0.0, 0.0});
    EXPECT_NEAR(lagrange_multiplier(mu, Mat3::Identity())[0], -1.0, 1e-15);
    Mat3 M;
    M << 4, 1, 2, 1, 5, 3, 2, 3, 6;
    FieldTriple r = {oracle::random_field(g, 1), oracle::random_field(g, 2), oracle::random_field(g, 3)};
    const ScalarField L0 = lagrange_multiplier(r, M);
    for (auto& f : r) f += 0.7;
    const ScalarField L1 = lagrange_multiplier(r, M);
    for (std::size_t k = 0; k < L0.size(); ++k) EXPECT_NEAR(L1[k], L0[k] - 0.7, 1e-14);
}

TEST(ApplyLinear, MatchesDenseOperator) {
    const Grid2D g(6, 5, 1.0, 0.8);
    const FieldTriple phi = oracle::random_state(g, 77);
    ModelInputs in = example_inputs({mean_h(phi[0]), mean_h(phi[1]), mean_h(phi[2])});
    in.gamma = 30.0;
    const ModelParams p = ModelParams::make(in);
    const Eigen::VectorXd ref = oracle::linear_operator(g, p) * oracle::to_vec(phi);
    const Eigen::VectorXd got = oracle::to_vec(apply_linear(phi, p));
    EXPECT_LT((got - ref).norm(), 1e-10 * ref.norm());
}
