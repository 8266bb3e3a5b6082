#pragma once

// Coupled three-tier system: a two-port cavity, one microwave resonator, and
// N mechanical resonators that couple only to the microwave mode.
//
// All frequencies and rates are angular (rad/s). Mode ordering in every
// matrix and vector is fixed: [cavity, microwave, mech_1, ..., mech_N].

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace hybridspec {

using Complex = std::complex<double>;

/// One damped mode: angular frequency and intrinsic energy decay rate.
struct ModeParams {
    double omega = 0.0;
    double linewidth = 0.0;

    friend bool operator==(const ModeParams&, const ModeParams&) = default;
};

/// Two-port cavity. The total linewidth is always derived from the three
/// contributions and never stored.
struct CavityParams {
    double omega_c = 0.0;
    double kappa_c1 = 0.0;  ///< port-1 external coupling
    double kappa_c2 = 0.0;  ///< port-2 external coupling
    double kappa_ci = 0.0;  ///< intrinsic loss

    [[nodiscard]] double kappa_c() const noexcept { return kappa_c1 + kappa_c2 + kappa_ci; }

    friend bool operator==(const CavityParams&, const CavityParams&) = default;
};

/// Full parameter set of one coupled system.
///
/// Couplings are stored as non-negative reals. A coupling phase can be
/// gauged away in this chain topology, so it never shows up in |S21|.
struct SystemParams {
    CavityParams cavity;
    ModeParams microwave;               ///< linewidth is kappa_a,i
    std::vector<ModeParams> mechanical;  ///< linewidths are gamma_b,n
    double g_ac = 0.0;
    std::vector<double> g_ab;            ///< one entry per mechanical mode
    Complex c_offset{1.0, 0.0};          ///< measurement-chain scale on t(omega)

    [[nodiscard]] std::size_t mechanical_count() const noexcept { return mechanical.size(); }
    [[nodiscard]] std::size_t mode_count() const noexcept { return mechanical.size() + 2; }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct ValidationReport {
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Lists every violated invariant; an empty report means the parameters are valid.
[[nodiscard]] ValidationReport validate(const SystemParams& params);

/// Throws ConfigError naming the first violated invariant.
void require_valid(const SystemParams& params);

inline constexpr Eigen::Index kCavityMode = 0;
inline constexpr Eigen::Index kMicrowaveMode = 1;
constexpr Eigen::Index mechanical_mode(std::size_t n) noexcept {
    return static_cast<Eigen::Index>(n) + 2;
}

/// Dynamical matrix of the Fourier-domain equations of motion
///
///     -i w x = M x + drive * c_in
///
/// with x = [c, a, b_1..b_N]. Diagonal entries are -i w_k - decay_k / 2 and
/// every coupling enters as -i g on both sides of the diagonal. `drive` holds
/// sqrt(kappa_c1) in the cavity slot; the sign is the one that makes the
/// output relations c_out,1 = c_in - sqrt(kappa_c1) c and
/// c_out,2 = -sqrt(kappa_c2) c reproduce the closed-form r and t.
struct ModeMatrix {
    Eigen::Index dimension = 0;
    Eigen::MatrixXcd matrix;
    Eigen::VectorXcd drive;
};

/// Throws ConfigError for invalid parameters.
[[nodiscard]] ModeMatrix build_mode_matrix(const SystemParams& params);

/// Returns a copy with the microwave frequency replaced.
[[nodiscard]] SystemParams with_microwave_frequency(SystemParams params, double omega_a);

}  // namespace hybridspec
