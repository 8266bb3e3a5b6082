#pragma once

// Small-signal nodal analysis of the cross-chip wirebond lumped-element model.

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hybridspec {

enum class ElementKind { Resistor, Inductor, Capacitor };

struct CircuitElement {
    std::string name;
    ElementKind kind = ElementKind::Resistor;
    double value = 0.0;  ///< ohm, henry or farad
    std::string node_a;
    std::string node_b;

    friend bool operator==(const CircuitElement&, const CircuitElement&) = default;
};

struct CircuitNetwork {
    std::vector<CircuitElement> elements;
    std::string ground = "gnd";
    std::string probe;

    friend bool operator==(const CircuitNetwork&, const CircuitNetwork&) = default;
};

/// Throws ConfigError unless every value is positive and finite, no element
/// shorts a node to itself, ground and probe are present, and the graph is
/// connected.
void require_valid(const CircuitNetwork& net);

/// Which end of each wirebond inductance carries the parasitic C_p.
enum class ParasiticSide { Mechanics, Microwave };

/// Element values of the wirebond model (SI base units; per-mm values per mm).
///
/// The mechanical resonator is a Butterworth-Van Dyke branch: motional
/// C_m in series with L_m, static C_o across it, and pad parasitic C_pm to
/// ground. R_m is a loss conductance across L_m, and R_mw shunts the
/// microwave tank. Both are the megaohm-scale shunt values of the model, so
/// each sets Q ~ R sqrt(C/L).
struct WirebondModelParams {
    double l_m = 0.0;
    double c_m = 0.0;
    double r_m = 0.0;
    double c_o = 0.0;
    double c_pm = 0.0;
    double l_mw = 0.0;
    double c_mw = 0.0;
    double r_mw = 0.0;
    double l_wb_per_mm = 0.0;
    double c_p = 0.0;
    double c_wb = 0.0;
    double r_wb = 0.0;
    double c_pwb_per_mm = 0.0;
    double length_mm = 0.0;
    ParasiticSide parasitic_side = ParasiticSide::Mechanics;

    /// sqrt(L_mw / C_mw), about 400 ohm for the nominal values.
    [[nodiscard]] double characteristic_impedance() const;

    friend bool operator==(const WirebondModelParams&, const WirebondModelParams&) = default;
};

void require_valid(const WirebondModelParams& p);

/// Nominal values exactly as printed (L_m in nH puts the motional resonance
/// near 71 GHz, far outside the mechanical band).
[[nodiscard]] WirebondModelParams as_printed_wirebond_params();

/// Same values with L_m = 2.73 uH, which places the motional resonance at
/// about 2.25 GHz, inside the mechanical band.
[[nodiscard]] WirebondModelParams band_consistent_wirebond_params();

/// Node names used by build_network().
namespace wirebond_nodes {
inline constexpr const char* kMicrowave = "mw";
inline constexpr const char* kSignalWire = "sig_wire";
inline constexpr const char* kSignalContact = "sig_contact";
inline constexpr const char* kMechSignal = "mech_sig";
inline constexpr const char* kMotional = "motional";
inline constexpr const char* kGroundWire = "gnd_wire";
inline constexpr const char* kGroundContact = "gnd_contact";
inline constexpr const char* kMechGround = "mech_gnd";
}  // namespace wirebond_nodes

/// Builds the lumped network. Probe is the microwave signal node and the
/// microwave ground is the reference.
///
///   microwave:   R_mw, L_mw, C_mw in parallel, mw -- gnd
///   each bond:   L_wb (per-mm x length), then C_wb, then R_wb towards the
///                mechanics chip; C_p to ground at the chosen end of L_wb
///                (skipped when it would short ground to itself)
///   mutual:      C_pwb (per-mm x length) between the two bond wires
///   mechanics:   C_m + (L_m || R_m) and C_o between mech_sig and mech_gnd,
///                C_pm from mech_sig to ground
[[nodiscard]] CircuitNetwork build_network(const WirebondModelParams& p);

/// The isolated microwave tank (R_mw || L_mw || C_mw).
[[nodiscard]] CircuitNetwork build_microwave_branch(const WirebondModelParams& p);

/// Copy of `net` without the named elements.
[[nodiscard]] CircuitNetwork without_elements(const CircuitNetwork& net,
                                              std::span<const std::string> names);

/// Node-admittance matrix with the ground row and column eliminated.
struct AdmittanceMatrix {
    std::vector<std::string> nodes;  ///< order of first appearance, ground excluded
    Eigen::MatrixXcd y;

    [[nodiscard]] Eigen::Index index_of(const std::string& node) const;
};

/// Stamps: resistor 1/R, inductor 1/(i w L), capacitor i w C.
[[nodiscard]] AdmittanceMatrix admittance_matrix(const CircuitNetwork& net, double omega);

/// Impedance between probe and ground from a unit current injection.
/// Throws NumericalError when the admittance matrix is singular.
[[nodiscard]] std::complex<double> driving_point_impedance(const CircuitNetwork& net,
                                                           double omega);

/// All node voltages for a unit current injected at the probe, keyed like
/// AdmittanceMatrix::nodes.
[[nodiscard]] Eigen::VectorXcd node_voltages(const CircuitNetwork& net, double omega,
                                             AdmittanceMatrix* layout = nullptr);

struct Resonance {
    double frequency_hz = 0.0;
    double linewidth_hz = 0.0;  ///< full width at |Z| = peak / sqrt(2)
    double peak_impedance = 0.0;
};

/// Local maxima of |Z| on a uniform grid of n_grid points in [f_min, f_max],
/// each refined by golden-section search to 1e-9 relative. The linewidth is
/// the 3 dB width when it spans at least one grid step, otherwise it comes
/// from the curvature of log|Z| at the peak.
[[nodiscard]] std::vector<Resonance> find_resonances(const CircuitNetwork& net, double f_min,
                                                     double f_max, int n_grid);

/// Settings for the avoided-crossing search performed by trimming one element.
struct CrossingSearch {
    double trim_min = 0.2;       ///< smallest trim factor
    double trim_max = 5.0;       ///< largest trim factor
    int trim_points = 121;       ///< log-spaced coarse scan
    double window = 0.25;        ///< relative half-width of the resonance band
    int grid_points = 3000;      ///< grid for find_resonances inside the band
};

struct AvoidedCrossing {
    bool found = false;
    std::string error;
    double g_hz = 0.0;           ///< half the minimum splitting
    double trim = 0.0;           ///< trim factor at the minimum
    double lower_hz = 0.0;
    double upper_hz = 0.0;
};

/// Sweeps `build(trim)` over the trim range and finds the smallest gap
/// between the two resonances straddling reference_hz.
[[nodiscard]] AvoidedCrossing find_avoided_crossing(
    const std::function<CircuitNetwork(double)>& build, double reference_hz,
    const CrossingSearch& search = {});

struct CouplingShift {
    double length_mm = 0.0;
    bool ok = false;
    std::string error;
    double g_hz = 0.0;
    double shift_hz = 0.0;       ///< bare microwave resonance minus loaded one
    double loaded_hz = 0.0;
};

/// Bare microwave tank resonance 1 / (2 pi sqrt(L_mw C_mw)).
[[nodiscard]] double bare_microwave_frequency_hz(const WirebondModelParams& p);

/// Microwave-like resonance of the full network.
[[nodiscard]] double loaded_microwave_frequency_hz(const WirebondModelParams& p);

/// Mechanics-like resonance of the network with L_mw removed.
[[nodiscard]] double mechanical_reference_frequency_hz(const WirebondModelParams& p);

/// Per length: frequency shift of the microwave-like resonance and the
/// coupling g from trimming L_mw through the mechanics-like resonance.
/// Failures are reported per entry rather than thrown.
[[nodiscard]] std::vector<CouplingShift> coupling_and_shift_vs_length(
    const WirebondModelParams& p, std::span<const double> lengths_mm,
    const CrossingSearch& search = {});

[[nodiscard]] const char* to_string(ElementKind kind);

}  // namespace hybridspec
