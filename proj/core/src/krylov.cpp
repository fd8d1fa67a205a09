#include "copoly/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace copoly {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double nrm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace

KrylovResult krylov_solve(const LinearOperator& apply, std::span<const double> rhs, const LinearOperator& precond,
                          KrylovOptions opts, std::span<const double> x0) {
    if (!apply) throw std::invalid_argument("krylov_solve: operator callback is empty");
    const std::size_t n = rhs.size();
    if (!x0.empty() && x0.size() != n) throw std::invalid_argument("krylov_solve: initial guess has wrong size");

    auto prec = [&](std::span<const double> in, std::span<double> out) {
        if (precond)
            precond(in, out);
        else
            std::copy(in.begin(), in.end(), out.begin());
    };

    KrylovResult res;
    res.x.assign(n, 0.0);
    if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());

    const double bnorm = nrm(rhs);
    if (bnorm == 0.0) {
        res.x.assign(n, 0.0);
        res.converged = true;
        return res;
    }

    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
    apply(res.x, r);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - r[k];
    rhat = r;
    double rnorm = nrm(r);
    res.residual = rnorm / bnorm;
    if (res.residual <= opts.tol) {
        res.converged = true;
        return res;
    }

    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 1; it <= opts.maxit; ++it) {
        const double rho_new = dot(rhat, r);
        if (rho_new == 0.0 || !std::isfinite(rho_new)) break;  // breakdown
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
        prec(p, phat);
        apply(phat, v);
        const double rv = dot(rhat, v);
        if (rv == 0.0 || !std::isfinite(rv)) break;
        alpha = rho / rv;
        for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
        res.iterations = it;
        const double snorm = nrm(s);
        if (snorm / bnorm <= opts.tol) {
            for (std::size_t k = 0; k < n; ++k) res.x[k] += alpha * phat[k];
            res.residual = snorm / bnorm;
            res.converged = true;
            return res;
        }
        prec(s, shat);
        apply(shat, t);
        const double tt = dot(t, t);
        omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            res.x[k] += alpha * phat[k] + omega * shat[k];
            r[k] = s[k] - omega * t[k];
        }
        rnorm = nrm(r);
        res.residual = rnorm / bnorm;
        if (res.residual <= opts.tol) {
            res.converged = true;
            return res;
        }
        if (omega == 0.0 || !std::isfinite(omega)) break;
    }
    // Report the true residual of the returned iterate.
    apply(res.x, r);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - r[k];
    res.residual = nrm(r) / bnorm;
    res.converged = res.residual <= opts.tol;
    return res;
}

} // namespace copoly
