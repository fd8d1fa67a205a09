#include "copoly/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace copoly {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("model: " + msg);
}

bool finite3(const Mat3& m) { return m.allFinite(); }

} // namespace

double min_eigenvalue(const Mat3& M) {
    const Mat3 S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

ModelParams ModelParams::make(const ModelInputs& in) {
    for (int i = 0; i < 3; ++i)
        require(std::isfinite(in.N[i]) && in.N[i] > 0.0, "polymerization degree N[" + std::to_string(i) + "] must be > 0");
    require(finite3(in.chi), "chi must be finite");
    const double chi_scale = std::max(1.0, in.chi.cwiseAbs().maxCoeff());
    require((in.chi - in.chi.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * chi_scale, "chi must be symmetric");
    require(in.chi.diagonal().cwiseAbs().maxCoeff() == 0.0, "chi must have a zero diagonal");
    require(std::isfinite(in.eps) && in.eps > 0.0, "eps must be > 0");
    require(std::isfinite(in.gamma) && in.gamma >= 0.0, "gamma must be >= 0");
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        require(std::isfinite(in.phibar[i]) && in.phibar[i] > 0.0 && in.phibar[i] < 1.0,
                "phibar[" + std::to_string(i) + "] must lie in (0,1)");
        sum += in.phibar[i];
    }
    require(std::abs(sum - 1.0) <= 1e-12, "phibar must sum to 1");
    require(std::isfinite(in.sigma) && in.sigma > 0.0 && in.sigma < 1.0, "sigma must lie in (0,1)");
    require(finite3(in.M), "mobility M must be finite");
    const double m_scale = std::max(in.M.cwiseAbs().maxCoeff(), 1e-300);
    require((in.M - in.M.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * m_scale, "mobility M must be symmetric");
    {
        const double lmin = min_eigenvalue(in.M);
        std::ostringstream os;
        os << "mobility M is not positive semidefinite (min eigenvalue " << lmin << ")";
        require(lmin >= -1e-14 * m_scale, os.str());
    }
    require(in.M.sum() > 0.0, "mobility M must have positive total sum");
    require(std::isfinite(in.eq_C) && in.eq_C > 0.0, "eq_C must be > 0");

    ModelParams p;
    p.N = in.N;
    p.chi = in.chi;
    p.eps = in.eps;
    p.gamma = in.gamma;
    p.phibar = in.phibar;
    p.sigma = in.sigma;
    p.M = in.M;
    p.eq_C = in.eq_C;
    p.potential = in.potential;
    for (int i = 0; i < 3; ++i) p.gamma_i[i] = in.eps * in.eps / in.phibar[i];
    const double a = 1.5 * in.eps * in.gamma;
    const double pa = in.phibar[0], pb = in.phibar[1];
    p.alpha.setZero();
    p.alpha(0, 0) = a / (pa * pa);
    p.alpha(1, 1) = a / (pb * pb);
    p.alpha(0, 1) = p.alpha(1, 0) = -a / (pa * pb);
    p.m_eff = effective_mobility(in.M);
    return p;
}

LinearSymbol ModelParams::symbol() const {
    LinearSymbol s;
    s.gamma_i = gamma_i;
    s.chi = chi;
    s.alpha = alpha;
    return s;
}

double simplex_defect(const FieldTriple& phi) {
    double m = 0.0;
    for (std::size_t k = 0; k < phi[0].size(); ++k)
        m = std::max(m, std::abs(phi[0][k] + phi[1][k] + phi[2][k] - 1.0));
    return m;
}

RegLog reg_log(double phi, double N, double sigma) {
    if (phi <= sigma) {
        const double ls = std::log(sigma);
        return {(phi * phi / (2.0 * sigma) + phi * ls - 0.5 * sigma) / N, (phi / sigma + ls) / N};
    }
    const double l = std::log(phi);
    return {phi * l / N, (l + 1.0) / N};
}

double reg_log_second(double phi, double N, double sigma) {
    return phi <= sigma ? 1.0 / (sigma * N) : 1.0 / (phi * N);
}

ScalarField bulk_density(const FieldTriple& phi, const ModelParams& p) {
    ScalarField f(phi[0].grid());
    if (p.potential == PotentialKind::None) return f;
    for (std::size_t k = 0; k < f.size(); ++k) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += reg_log(phi[i][k], p.N[i], p.sigma).value;
        f[k] = s;
    }
    return f;
}

FieldTriple bulk_derivative(const FieldTriple& phi, const ModelParams& p) {
    FieldTriple d = make_triple(phi[0].grid());
    if (p.potential == PotentialKind::None) return d;
    for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < d[i].size(); ++k) d[i][k] = reg_log(phi[i][k], p.N[i], p.sigma).derivative;
    return d;
}

FieldTriple bulk_second_derivative(const FieldTriple& phi, const ModelParams& p) {
    FieldTriple d = make_triple(phi[0].grid());
    if (p.potential == PotentialKind::None) return d;
    for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < d[i].size(); ++k) d[i][k] = reg_log_second(phi[i][k], p.N[i], p.sigma);
    return d;
}

ScalarField solve_psi(const ScalarField& phi, double phibar) {
    const double m = mean_h(phi);
    if (std::abs(m - phibar) > 1e-10) {
        std::ostringstream os;
        os << "solve_psi: incompatible Neumann problem, mean(phi) = " << m << " differs from phibar = " << phibar;
        throw std::invalid_argument(os.str());
    }
    return CosineBasisPlan::shared(phi.grid())->solve_poisson(phi);
}

FieldTriple apply_linear(const FieldTriple& phi, const ModelParams& p) {
    const Grid2D& g = phi[0].grid();
    const auto basis = CosineBasisPlan::shared(g);
    std::array<ScalarField, 3> lap = {laplacian_h(phi[0]), laplacian_h(phi[1]), laplacian_h(phi[2])};
    const ScalarField psiA = basis->solve_poisson(phi[0]);
    const ScalarField psiB = basis->solve_poisson(phi[1]);
    FieldTriple out = make_triple(g);
    for (int i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            double v = -p.gamma_i[i] * lap[i][k];
            for (int j = 0; j < 3; ++j) v += p.chi(i, j) * phi[j][k];
            v -= p.alpha(i, 0) * psiA[k] + p.alpha(i, 1) * psiB[k];
            out[i][k] = v;
        }
    }
    return out;
}

FieldTriple chemical_potentials(const FieldTriple& phi, const ModelParams& p, const ScalarField& psiA,
                                const ScalarField& psiB) {
    const Grid2D& g = phi[0].grid();
    const FieldTriple fp = bulk_derivative(phi, p);
    FieldTriple mu = make_triple(g);
    for (int i = 0; i < 3; ++i) {
        const ScalarField lap = laplacian_h(phi[i]);
        for (std::size_t k = 0; k < g.size(); ++k) {
            double v = -p.gamma_i[i] * lap[k] + fp[i][k];
            for (int j = 0; j < 3; ++j) v += p.chi(i, j) * phi[j][k];
            v -= p.alpha(i, 0) * psiA[k] + p.alpha(i, 1) * psiB[k];
            mu[i][k] = v;
        }
    }
    return mu;
}

FieldTriple chemical_potentials(const FieldTriple& phi, const ModelParams& p) {
    const auto basis = CosineBasisPlan::shared(phi[0].grid());
    return chemical_potentials(phi, p, basis->solve_poisson(phi[0]), basis->solve_poisson(phi[1]));
}

double free_energy_h(const FieldTriple& phi, const ModelParams& p) {
    const FieldTriple Lphi = apply_linear(phi, p);
    double e = 0.0;
    for (int i = 0; i < 3; ++i) e += 0.5 * inner_h(phi[i], Lphi[i]);
    if (p.potential == PotentialKind::None) return e;
    const ScalarField f = bulk_density(phi, p);
    return e + mean_h(f) * phi[0].grid().area();
}

Mat3 effective_mobility(const Mat3& M) {
    const double total = M.sum();
    if (!(total > 0.0)) throw std::invalid_argument("effective_mobility: total mobility must be positive");
    const Vec3 r = M.rowwise().sum();
    return M - r * r.transpose() / total;
}

ScalarField lagrange_multiplier(const FieldTriple& mu, const Mat3& M) {
    const double total = M.sum();
    if (!(total > 0.0)) throw std::invalid_argument("lagrange_multiplier: total mobility must be positive");
    const Vec3 r = M.rowwise().sum();
    ScalarField L(mu[0].grid());
    for (std::size_t k = 0; k < L.size(); ++k) L[k] = -(r[0] * mu[0][k] + r[1] * mu[1][k] + r[2] * mu[2][k]) / total;
    return L;
}

} // namespace copoly
