#pragma once

// Multi-cut parameter extraction. Mechanical parameters and both couplings
// are shared across cuts; each cut has its own microwave frequency and loss.

#include "hybridspec/genetic.hpp"
#include "hybridspec/model.hpp"
#include "hybridspec/scattering.hpp"
#include "hybridspec/tuning.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hybridspec {

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool contains(double x) const noexcept { return x >= lower && x <= upper; }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct MechanicalBounds {
    Bounds omega;
    Bounds linewidth;
    Bounds coupling;

    friend bool operator==(const MechanicalBounds&, const MechanicalBounds&) = default;
};

struct SharedBounds {
    std::vector<MechanicalBounds> mechanical;  ///< its length fixes the number of modes
    Bounds g_ac;
    Bounds c_offset;  ///< positive real scale

    friend bool operator==(const SharedBounds&, const SharedBounds&) = default;
};

struct CutBounds {
    Bounds omega_a;
    Bounds kappa_ai;

    friend bool operator==(const CutBounds&, const CutBounds&) = default;
};

struct CutTrace {
    std::string cut_id;
    SpectrumTrace trace;
    std::optional<double> current_ma;

    friend bool operator==(const CutTrace&, const CutTrace&) = default;
};

/// Magnitude compares |S21| (default); Complex compares the complex values.
enum class ResidualMode { Magnitude, Complex };

struct FitProblem {
    std::vector<CutTrace> cuts;
    CavityParams fixed;
    SharedBounds shared_bounds;
    std::vector<CutBounds> per_cut_bounds;  ///< one per cut, same order
    GaSettings ga;
    ResidualMode residual = ResidualMode::Magnitude;
    int polish_iterations = 200;  ///< Levenberg-Marquardt evaluations budget per parameter after the GA; 0 skips
    /// Post-GA scan of each mechanical mode's frequency range (grid points),
    /// each scan followed by a polish from its best point. 0 disables.
    int mode_scan_points = 101;
    int mode_scan_passes = 3;  ///< repeated while the cost keeps dropping
};

/// Throws ConfigError for empty or inconsistent problems.
void require_valid(const FitProblem& problem);

/// Candidate vector layout, physical units:
///   [w_m, gamma, g_ab] per mechanical mode, g_ac, c_offset, [w_a, kappa_ai] per cut.
struct ParameterLayout {
    std::size_t mechanical_count = 0;
    std::size_t cut_count = 0;

    [[nodiscard]] std::size_t size() const noexcept { return 3 * mechanical_count + 2 + 2 * cut_count; }
    [[nodiscard]] std::size_t mech_omega(std::size_t n) const noexcept { return 3 * n; }
    [[nodiscard]] std::size_t mech_linewidth(std::size_t n) const noexcept { return 3 * n + 1; }
    [[nodiscard]] std::size_t mech_coupling(std::size_t n) const noexcept { return 3 * n + 2; }
    [[nodiscard]] std::size_t g_ac() const noexcept { return 3 * mechanical_count; }
    [[nodiscard]] std::size_t c_offset() const noexcept { return 3 * mechanical_count + 1; }
    [[nodiscard]] std::size_t cut_omega(std::size_t k) const noexcept { return 3 * mechanical_count + 2 + 2 * k; }
    [[nodiscard]] std::size_t cut_loss(std::size_t k) const noexcept { return 3 * mechanical_count + 3 + 2 * k; }
};

[[nodiscard]] ParameterLayout layout_of(const FitProblem& problem);

/// Bounds in layout order.
[[nodiscard]] std::vector<Bounds> flat_bounds(const FitProblem& problem);

/// Per-cut parameters -> candidate vector. Shared fields come from the first entry.
[[nodiscard]] std::vector<double> encode(const FitProblem& problem,
                                         std::span<const SystemParams> per_cut);

/// Candidate vector -> one SystemParams per cut (cavity from problem.fixed).
[[nodiscard]] std::vector<SystemParams> decode(const FitProblem& problem,
                                               std::span<const double> candidate);

/// Sum of squared residuals over cuts and points, in index order. Model
/// failures give +infinity. Throws ConfigError when the candidate has the
/// wrong size or leaves its bounds.
[[nodiscard]] double cost(const FitProblem& problem, std::span<const double> candidate);

/// Residual vector whose squared norm is cost(); empty when the model fails.
[[nodiscard]] std::vector<double> residuals(const FitProblem& problem,
                                            std::span<const double> candidate);

struct FitResult {
    std::vector<std::string> cut_ids;
    std::vector<std::optional<double>> cut_currents_ma;
    std::vector<SystemParams> params_per_cut;
    double cost = 0.0;
    double ga_cost = 0.0;  ///< best cost before the local polish
    std::vector<double> history;
    std::uint64_t seed_used = 0;
    int generations_run = 0;

    friend bool operator==(const FitResult&, const FitResult&) = default;
};

/// Runs the genetic search. Frequencies are searched on a linear scale and
/// rates, couplings and c_offset on a log scale. Throws NumericalError when
/// no candidate has a finite cost.
[[nodiscard]] FitResult fit(const FitProblem& problem);

/// Lorentzian fit of the isolated cavity peak in a wide trace. Only the total
/// linewidth is observable; it is split as kappa_ci = kappa_c - kappa_c1 - kappa_c2
/// with the given port rates. Errors: "no peak" (no interior maximum),
/// "peak not bracketed" (half-power region touches the grid edge), and a
/// ConfigError when the port rates exceed the fitted total.
[[nodiscard]] CavityParams prefit_cavity(const SpectrumTrace& wide_trace, double kappa_c1,
                                         double kappa_c2);

/// Total linewidth and centre only.
struct LorentzianPeak {
    double omega = 0.0;
    double linewidth = 0.0;
};
[[nodiscard]] LorentzianPeak fit_lorentzian_peak(const SpectrumTrace& trace);

/// Tuning model through the fitted per-cut microwave frequencies. Needs a
/// current on at least two cuts.
[[nodiscard]] TuningModel tuning_from_fit(const FitResult& result, double omega_a0_hint,
                                          double alpha_k = 1.0, double coil_cal = 0.01);

struct OverlayLine {
    std::string label;
    std::vector<double> currents_ma;
    std::vector<double> freqs_hz;
};

struct Reconstruction {
    SweepGrid grid;
    std::vector<OverlayLine> overlays;  ///< bare mechanical lines, then the tuned microwave line
};

/// Full coil sweep from the fitted shared parameters and the tuning model.
/// kappa_ai is interpolated linearly between cut currents (held constant
/// outside them; averaged when no cut carries a current).
[[nodiscard]] Reconstruction reconstruct_sweep(const FitResult& result, const TuningModel& tuning,
                                               std::span<const double> currents_ma,
                                               std::span<const double> freqs_hz);

}  // namespace hybridspec
