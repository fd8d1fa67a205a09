#pragma once

/// Linear second-order time integrators: the energy-quadratization (EQ)
/// scheme and the four supplementary-variable (SVM) prediction-correction
/// schemes, plus the first-order two-level bootstrap step.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "copoly/couplings.hpp"
#include "copoly/krylov.hpp"
#include "copoly/model.hpp"
#include "copoly/spectral.hpp"

namespace copoly {

enum class SchemeKind { EQ, SVM1, SVM2, SVM3, SVM4 };

std::string to_string(SchemeKind s);
/// Case-insensitive; throws std::invalid_argument for unknown names.
SchemeKind parse_scheme(std::string_view name);
inline constexpr std::array<SchemeKind, 5> kAllSchemes{SchemeKind::EQ, SchemeKind::SVM1, SchemeKind::SVM2,
                                                       SchemeKind::SVM3, SchemeKind::SVM4};

/// Where the SVM energy-dissipation rate is evaluated.
enum class DissipationPoint {
    Predicted,  ///< at the predicted midpoint state (default)
    Final       ///< at the corrected state phi^{n+1}
};

struct StepperOptions {
    DissipationPoint dissipation_point = DissipationPoint::Predicted;
    /// Electric coupling only: re-solve the induced potential at every Newton
    /// iterate instead of freezing it at the predicted midpoint.
    bool refresh_potential_in_newton = false;
    double newton_tol = 1e-12;  ///< on |U - target| / max(1, |target|)
    int newton_maxit = 50;
    KrylovOptions krylov{1e-11, 500};
};

struct StepRecord {
    double t = 0.0;
    double energy = 0.0;            ///< F_h (or coupled E_h) at the new state
    double predicted_energy = 0.0;  ///< SVM: enforced target; EQ: modified quadratic energy
    double dissipation = 0.0;       ///< dt * (mu, m Lap mu)_h, always <= 0
    double alpha = 0.0;             ///< beta / dt
    double beta = 0.0;
    int newton_iters = 0;
    int krylov_iters = 0;
    std::array<double, 3> means{};
    bool degenerate_direction = false;  ///< SVM correction accepted beta = 0 near equilibrium
};

/// Immutable per-run data shared by all steps: parameters, coupling, time step and the
/// factorized Crank-Nicolson operator.
class StepContext {
public:
    StepContext(const ModelParams& params, Coupling coupling, const Grid2D& grid, double dt,
                StepperOptions options = {});

    const ModelParams& params() const noexcept { return params_; }
    const Coupling& coupling() const noexcept { return coupling_; }
    const Grid2D& grid() const noexcept { return grid_; }
    double dt() const noexcept { return dt_; }
    const StepperOptions& options() const noexcept { return options_; }
    const BlockHelmholtzPlan& helmholtz() const noexcept { return *helmholtz_; }
    bool electric() const noexcept { return std::holds_alternative<ElectricParams>(coupling_); }

    /// Induced potential at phi (electric coupling only).
    ScalarField solve_potential(const FieldTriple& phi, double t, const ScalarField* guess) const;
    /// Coupling potential [c, -c, 0]; for electric coupling Phi must be given.
    FieldTriple coupling_potential(const FieldTriple& phi, const ScalarField* Phi, double t) const;
    /// Coupling contribution to the step functional: +E_m (magnetic), -W (electric, Phi given), 0.
    double coupling_energy(const FieldTriple& phi, const ScalarField* Phi, double t) const;
    /// F_h plus the coupling contribution.
    double total_energy(const FieldTriple& phi, const ScalarField* Phi, double t) const;

private:
    ModelParams params_;
    Coupling coupling_;
    Grid2D grid_;
    double dt_;
    StepperOptions options_;
    std::shared_ptr<const BlockHelmholtzPlan> helmholtz_;
};

/// Energy functional U enforced by one SVM correction: F_h plus the coupling term with
/// the induced potential frozen (or refreshed, per options) at time t.
class StepFunctional {
public:
    StepFunctional(const StepContext& ctx, double t, std::optional<ScalarField> frozen_Phi);

    double energy(const FieldTriple& phi) const;
    /// Variational derivative (per cell area) of energy().
    FieldTriple potential(const FieldTriple& phi) const;

    const StepContext& context() const noexcept { return ctx_; }
    double time() const noexcept { return t_; }
    const std::optional<ScalarField>& frozen_potential() const noexcept { return Phi_; }

    /// Potential and energy from a precomputed L phi (avoids a spectral solve).
    double energy_with(const FieldTriple& phi, const FieldTriple& Lphi) const;
    FieldTriple potential_with(const FieldTriple& phi, const FieldTriple& Lphi) const;
    /// Directional derivative of potential() along dir at phi, given L dir.
    FieldTriple potential_derivative(const FieldTriple& phi, const FieldTriple& dir, const FieldTriple& Ldir) const;

private:
    const ScalarField* potential_for(const FieldTriple& phi) const;

    const StepContext& ctx_;
    double t_;
    std::optional<ScalarField> Phi_;
    mutable std::optional<ScalarField> refreshed_;
};

struct NewtonResult {
    double beta = 0.0;
    int iterations = 0;
    double residual = 0.0;  ///< final |U - target|
};

class NoRootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root of u(beta) = U(phi_hat + beta dir) - target by Newton from beta = 0 with
/// u'(beta) = (mu_U(phi_hat + beta dir), dir)_h. Throws NoRootError when dir is degenerate
/// and the target is not already met, std::runtime_error on divergence.
NewtonResult newton_beta(double target, const FieldTriple& phi_hat, const FieldTriple& dir, const StepFunctional& U);

struct SvmPrediction {
    double t_half = 0.0;
    FieldTriple phi_bar;  ///< extrapolated state 3/2 phi^n - 1/2 phi^{n-1}
    FieldTriple phi_mid;  ///< predicted midpoint
    FieldTriple h_mid;    ///< f'(phi_mid) + coupling potential
    FieldTriple mu_mid;   ///< L phi_mid + h_mid
    FieldTriple mlap_mu_mid;
    std::optional<ScalarField> Phi_bar, Phi_mid;
    double energy_curr = 0.0;  ///< U(phi^n)
    double dissipation = 0.0;  ///< dt (mu_mid, m Lap mu_mid)_h
    double energy_pred = 0.0;  ///< energy_curr + dissipation
};

/// Prediction stage; t is t_n.
SvmPrediction svm_predict(const PhaseState& prev, const PhaseState& curr, double t, const StepContext& ctx);

struct SvmCorrection {
    PhaseState next;
    double beta = 0.0;
    int newton_iters = 0;
    double target = 0.0;
    double dissipation = 0.0;
    bool degenerate_direction = false;
};

/// Correction stage: CN solve with h at the predicted midpoint, direction per variant,
/// and the scalar energy constraint.
SvmCorrection svm_correct(const PhaseState& curr, const SvmPrediction& pred, const StepContext& ctx,
                          SchemeKind variant);

struct EqResult {
    PhaseState next;
    int krylov_iters = 0;
    double dissipation = 0.0;
    double modified_energy = 0.0;  ///< (1/2)(phi, L phi)_h + ||q||^2 - C |Omega| at the new state
};

/// Fully discrete EQ step; curr.q must hold the auxiliary variable (initialized if absent).
EqResult eq_step(const PhaseState& prev, const PhaseState& curr, double t, const StepContext& ctx);

/// (1/2)(phi, L phi)_h + ||q||_h^2 - C |Omega|.
double eq_modified_energy(const FieldTriple& phi, const ScalarField& q, const ModelParams& p);
/// q = sqrt(f(phi) + C).
ScalarField eq_auxiliary(const FieldTriple& phi, const ModelParams& p);

struct StepOutcome {
    PhaseState next;
    StepRecord record;
};

/// One step of the chosen scheme from (prev, curr) at t_n = t; the record is stamped t + dt.
StepOutcome step(SchemeKind scheme, const PhaseState& prev, const PhaseState& curr, double t, const StepContext& ctx);

/// First-order two-level step (extrapolated quantities replaced by current ones).
StepOutcome bootstrap_step(SchemeKind scheme, const PhaseState& state0, double t, const StepContext& ctx);

/// Prepares companions for a run: q for EQ, the induced potential for electric coupling.
PhaseState prepare_state(const FieldTriple& phi, SchemeKind scheme, double t, const StepContext& ctx);

struct RunOptions {
    double T = 0.0;
    std::vector<double> snapshot_times;  ///< t = 0 and the final state are always emitted
    std::function<void(const PhaseState&, double)> on_snapshot;
    std::function<void(const StepRecord&)> on_step;
};

struct RunResult {
    std::vector<StepRecord> records;
    PhaseState final_state;
    double t_final = 0.0;
    double initial_energy = 0.0;
    bool failed = false;
    std::string error;
};

/// Bootstrap then repeated steps up to T (T / dt must be an integer up to 1e-9 relative).
/// A failing step stops the run; the last valid state is returned and snapshotted.
RunResult run(SchemeKind scheme, const FieldTriple& phi0, const StepContext& ctx, const RunOptions& opts);

/// Number of steps for horizon T; throws std::invalid_argument when T is not a multiple of dt.
long long step_count(double T, double dt);

} // namespace copoly
