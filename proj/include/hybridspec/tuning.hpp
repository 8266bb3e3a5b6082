#pragma once

// Kinetic-inductance nonlinearity and the coil-current -> microwave-frequency map.

#include <span>

namespace hybridspec {

/// Nanowire geometry in metres and the nonlinearity scale current in amperes.
struct KineticInductanceParams {
    double london_depth = 0.0;
    double length = 0.0;
    double width = 0.0;
    double thickness = 0.0;
    double i_star = 0.0;
};

/// Maps coil current (mA) to microwave angular frequency.
///
/// With L_total(I) = L_geo + L_k(0) [1 + (I/I*)^2] and alpha_k = L_k(0)/L_total(0),
/// an LC resonance gives
///
///     omega(I) = omega_a0 / sqrt(1 + alpha_k (I / i_star_eff)^2).
///
/// i_star_eff is referred to the coil current, so it absorbs the unknown
/// coil-to-nanowire transduction. coil_cal only labels the field axis.
struct TuningModel {
    double omega_a0 = 0.0;            ///< rad/s
    double alpha_k = 1.0;             ///< kinetic-inductance fraction, (0, 1]
    double i_star_eff = 0.0;          ///< mA
    double coil_cal = 0.01;           ///< mT/mA

    /// Combined curvature alpha_k / i_star_eff^2 in 1/mA^2.
    [[nodiscard]] double curvature() const noexcept {
        return alpha_k / (i_star_eff * i_star_eff);
    }

    friend bool operator==(const TuningModel&, const TuningModel&) = default;
};

struct CalibrationPoint {
    double current = 0.0;  ///< mA
    double omega = 0.0;    ///< rad/s
};

void require_valid(const KineticInductanceParams& p);
void require_valid(const TuningModel& m);

/// L_k(I) = mu0 lambda_L^2 l / (w t) * [1 + (I/I*)^2], in henry. `current` in amperes.
[[nodiscard]] double kinetic_inductance(const KineticInductanceParams& p, double current);

[[nodiscard]] double frequency_at_current(const TuningModel& m, double current_ma);

/// Field at the chip in mT.
[[nodiscard]] double field_at_current(const TuningModel& m, double current_ma);

/// Least-squares fit of omega_a0 and the combined curvature to (current, omega)
/// pairs, minimizing the squared frequency residual. The curvature is split
/// into alpha_k (taken as given) and i_star_eff.
///
/// Needs at least two distinct |I| values; otherwise throws ConfigError
/// ("degenerate calibration input"). omega_a0_hint seeds the refinement when
/// the linearized start is unusable. Throws NumericalError if the data imply a
/// frequency that rises with current.
[[nodiscard]] TuningModel calibrate(std::span<const CalibrationPoint> points,
                                    double omega_a0_hint, double alpha_k = 1.0,
                                    double coil_cal = 0.01);

}  // namespace hybridspec
