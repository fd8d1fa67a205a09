#pragma once

/// Run configuration files, energy logs, snapshot files and refinement reports.
///
/// Configuration format (INI style; `#` or `;` start comments, lists are comma separated):
///
///   experiment = spots        # built-in providing every default below (required)
///   scheme     = svm2         # eq | svm1 | svm2 | svm3 | svm4            (default svm2)
///   seed       = 1            # 64-bit seed for noise initial data         (default 1)
///
///   [model]     N = 1,1,1     chi_AB, chi_AS, chi_BS, eps, gamma, sigma, eq_C,
///               M = 9 entries row-major, potential = reglog | none
///   [initial]   kind = cosine_product | bump | noise | relaxed, base = a,b, amp = a,b,
///               relax_from, relax_T
///   [coupling]  kind = none | electric | magnetic; electric: eps0, eps1, E0 = ex,ey,
///               hysteresis = true|false; magnetic: gamma_m, B0 = bx,by
///   [grid]      Nx, Ny (>= 4), Lx, Ly                  (default: experiment's n, unit square)
///   [time]      dt (> 0), T (>= 0), snapshots = t1,t2  (default: experiment's values)
///   [solver]    dissipation = predicted | final, refresh_potential = true|false
///   [output]    dir                                   (default "out")
///
/// Every key is optional except `experiment`; unknown sections/keys are rejected.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "copoly/harness.hpp"
#include "copoly/integrators.hpp"

namespace copoly {

struct RunConfig {
    std::string experiment = "spots";
    ExperimentSpec spec;  ///< the named built-in with all overrides applied
    SchemeKind scheme = SchemeKind::SVM2;
    int nx = 64;
    int ny = 64;
    double lx = 1.0;
    double ly = 1.0;
    double dt = 1e-4;
    double T = 0.0;
    std::uint64_t seed = 1;
    std::vector<double> snapshot_times;
    std::string out_dir = "out";
    DissipationPoint dissipation_point = DissipationPoint::Predicted;
    bool refresh_potential_in_newton = false;

    Grid2D grid() const { return Grid2D(nx, ny, lx, ly); }
    StepperOptions stepper_options() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Configuration error with the offending field ("section.key") and, when known, the 1-based line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, int line, const std::string& what);
    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

/// Parses and validates a configuration text. Throws ConfigError.
RunConfig parse_config(std::string_view text);
/// Reads a configuration file. Throws ConfigError (I/O failures name the path).
RunConfig load_config(const std::filesystem::path& path);
/// Complete configuration text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

/// Energy log columns, in order.
inline constexpr std::array<const char*, 11> kEnergyLogColumns{
    "t", "energy", "predicted_energy", "dissipation", "alpha", "beta",
    "newton_iters", "krylov_iters", "mean_A", "mean_B", "mean_S"};

/// Comma-separated energy log row (17 significant digits), without newline.
std::string energy_log_row(const StepRecord& r);

/// Streaming energy log: header on open, one flushed row per record.
class EnergyLogWriter {
public:
    explicit EnergyLogWriter(const std::filesystem::path& path);
    ~EnergyLogWriter();
    EnergyLogWriter(const EnergyLogWriter&) = delete;
    EnergyLogWriter& operator=(const EnergyLogWriter&) = delete;

    void write(const StepRecord& r);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::unique_ptr<std::ofstream> out_;
};

/// Header row plus one row per record. Throws std::runtime_error naming the path.
void write_energy_log(const std::vector<StepRecord>& records, const std::filesystem::path& path);
/// Parses a file written by write_energy_log.
std::vector<StepRecord> read_energy_log(const std::filesystem::path& path);

/// Snapshot binary layout (all little-endian):
///   char[8] magic "COPOLYSN"; uint32 version, Nx, Ny, field_count;
///   float64 hx, hy, t; field_count x char[16] NUL-padded names;
///   field_count blocks of Nx*Ny float64, row-major (index j*Nx + i).
/// Fields: phi_A, phi_B, phi_S and, when present, Phi.
inline constexpr char kSnapshotMagic[8] = {'C', 'O', 'P', 'O', 'L', 'Y', 'S', 'N'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 8 + 4 * 4 + 3 * 8;
inline constexpr std::size_t kSnapshotNameBytes = 16;

struct Snapshot {
    PhaseState state;
    double t = 0.0;
};

void write_snapshot(const PhaseState& state, double t, const std::filesystem::path& path);
Snapshot read_snapshot(const std::filesystem::path& path);
/// Expected file size for a grid and field count.
std::size_t snapshot_bytes(int nx, int ny, int field_count);

/// Refinement report as JSON (undefined values are null).
std::string refinement_report_json(const RefinementReport& r);
void write_refinement_report(const RefinementReport& r, const std::filesystem::path& path);
/// Human-readable table of the report.
std::string format_refinement_table(const RefinementReport& r);

} // namespace copoly
