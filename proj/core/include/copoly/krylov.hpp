#pragma once

/// Matrix-free right-preconditioned BiCGStab for the variable-coefficient
/// systems (EQ step, electric potential fallback).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace copoly {

/// y = Op(x); x and y never alias.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct KrylovResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;  ///< final ||b - A x|| / ||b||
    bool converged = false;
};

struct KrylovOptions {
    double tol = 1e-11;  ///< relative residual target
    int maxit = 500;
};

/// Solves A x = b with preconditioner P ~ A^{-1} applied on the right.
/// The iteration is deterministic: identical inputs give bitwise-identical iterates.
/// An empty precond means the identity. x0 may be empty (zero initial guess).
KrylovResult krylov_solve(const LinearOperator& apply, std::span<const double> rhs,
                          const LinearOperator& precond = {}, KrylovOptions opts = {},
                          std::span<const double> x0 = {});

} // namespace copoly
