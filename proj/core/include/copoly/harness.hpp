#pragma once

/// Experiment definitions, refinement studies and structure diagnostics.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "copoly/couplings.hpp"
#include "copoly/integrators.hpp"
#include "copoly/model.hpp"

namespace copoly {

/// Initial volume fractions phi_A, phi_B (phi_S = 1 - phi_A - phi_B):
///   CosineProduct: phi_i = base_i + amp_i cos(pi x / Lx) cos(pi y / Ly)
///   Bump:          phi_i = base_i + amp_i (1 - cos(2 pi x / Lx)) (1 - cos(2 pi y / Ly))
///   Noise:         phi_i = base_i + amp_i r_i(x, y), r_i uniform in (-1, 1), seeded, sample mean removed
///   Relaxed:       final state of experiment `relax_from` run with SVM2 up to `relax_T`
struct InitialCondition {
    enum class Kind { CosineProduct, Bump, Noise, Relaxed };
    Kind kind = Kind::CosineProduct;
    std::array<double, 2> base{0.3, 0.2};
    std::array<double, 2> amp{0.0, 0.0};
    std::string relax_from;
    double relax_T = 0.0;
};

std::string to_string(InitialCondition::Kind k);
InitialCondition::Kind parse_initial_kind(const std::string& s);

/// Serializable coupling description.
struct ElectricSpec {
    double eps0 = 1.0;
    double eps1 = 0.0;
    Vec2 E0{0.0, 0.0};
    bool hysteresis = false;  ///< E0(t) = (E1(t), 0) with the ramp/plateau/ramp-down schedule
};
using CouplingSpec = std::variant<std::monostate, ElectricSpec, MagneticParams>;

Coupling make_coupling(const CouplingSpec& spec);

struct ExperimentSpec {
    std::string name;
    std::string description;
    ModelInputs model;  ///< phibar is replaced by the mean of the initial data
    CouplingSpec coupling;
    InitialCondition initial;
    int n = 64;         ///< desk-scale cells per side (unit square)
    double dt = 1e-4;
    double T = 1.0;
    std::vector<double> snapshot_times;
    int paper_n = 128;  ///< settings of the full-scale runs
    double paper_dt = 1e-5;
    double paper_T = 20.0;
};

/// Examples: mesh refinement, spots, lamellae, lamellae+spots, the six mobility
/// matrices, electric and magnetic pattern formation (three mobilities each), hysteresis.
std::vector<ExperimentSpec> builtin_experiments();
/// Throws std::invalid_argument for unknown names.
ExperimentSpec find_experiment(const std::string& name);

/// Initial fields on a grid (before phibar is derived). seed only affects Noise.
FieldTriple initial_fields(const ExperimentSpec& spec, const Grid2D& grid, std::uint64_t seed,
                           double dt_override = 0.0);

/// Model parameters with phibar taken from the mean of phi.
ModelParams model_for(const ExperimentSpec& spec, const FieldTriple& phi);

/// Applied field schedule: (E1(t), 0) with E1 = 2t on [0,5], 10 on [5,15], 40-2t on [15,20], 0 after.
Vec2 hysteresis_field(double t);

enum class RefinementAxis { Time, Space };
std::string to_string(RefinementAxis a);
RefinementAxis parse_axis(const std::string& s);

struct RefinementLevel {
    double step = 0.0;  ///< dt (time axis) or h (space axis)
    int n = 0;
    double dt = 0.0;
    double max_abs_alpha = 0.0;
    double max_abs_beta = 0.0;
    std::array<double, 3> error{};  ///< L2 difference to the next finer level, per species (NaN on the finest)
    double error_total = 0.0;       ///< sqrt(sum of squares) of the species errors
};

struct RefinementReport {
    RefinementAxis axis = RefinementAxis::Time;
    SchemeKind scheme = SchemeKind::SVM2;
    std::string experiment;
    std::vector<RefinementLevel> levels;
    std::vector<double> observed_orders;  ///< log2 ratios of successive errors
    double fitted_order = 0.0;            ///< least-squares slope of log(error) vs log(step)
    double alpha_order = 0.0;             ///< least-squares slope of log(max|alpha|) vs log(dt)
    bool complete = true;
    std::string error;
};

struct RefinementSettings {
    RefinementAxis axis = RefinementAxis::Time;
    SchemeKind scheme = SchemeKind::SVM2;
    int levels = 5;
    int n = 64;          ///< grid (time axis) or coarsest grid (space axis)
    double dt = 0.05;    ///< coarsest dt (time axis) or fixed dt (space axis)
    double T = 1.0;
    std::uint64_t seed = 1;
    StepperOptions options{};
};

/// Runs the dt-halving (fixed grid) or h-halving (fixed dt) ladder and compares each level
/// with the next finer one at T (space: the finer solution is restricted by 2x2 averaging).
RefinementReport refinement_study(const ExperimentSpec& spec, const RefinementSettings& settings);

/// Least-squares slope of log(y) against log(x).
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

/// 2x2 cell averaging onto a grid with half the cells per side.
ScalarField restrict_average(const ScalarField& fine);

struct StructureMetrics {
    double angle_deg = 0.0;     ///< dominant gradient direction of phi_A - phi_B, in [0, 180)
    double anisotropy = 0.0;    ///< (l1 - l2) / (l1 + l2) of the structure tensor, in [0, 1]
    bool angle_defined = false; ///< false for (near-)uniform states
};

/// Structure-tensor analysis of grad(phi_A - phi_B). Stripes "along" a direction have their
/// dominant gradient perpendicular to it. A proxy for lamellar order, not a defect count.
StructureMetrics structure_metrics(const FieldTriple& phi);

/// Smallest angle between two undirected directions, in degrees within [0, 90].
double angle_between_deg(double a_deg, double b_deg);

} // namespace copoly
