#include "hybridspec/scattering.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/units.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hybridspec {

std::vector<double> SpectrumTrace::magnitudes() const {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [](const Complex& v) { return std::abs(v); });
    return out;
}

void require_valid(const SpectrumTrace& trace) {
    if (trace.freqs_hz.size() != trace.values.size()) {
        throw ConfigError("trace: frequency and value lists differ in length");
    }
    for (std::size_t k = 0; k < trace.freqs_hz.size(); ++k) {
        if (!std::isfinite(trace.freqs_hz[k]) || !std::isfinite(trace.values[k].real()) ||
            !std::isfinite(trace.values[k].imag())) {
            throw ConfigError("trace: non-finite entry at index " + std::to_string(k));
        }
        if (k > 0 && !(trace.freqs_hz[k] > trace.freqs_hz[k - 1])) {
            throw ConfigError("trace: frequencies must be strictly increasing");
        }
    }
}

namespace detail {

// Evaluates the nested fraction
//
//   D = -i dc + kc/2 + g_ac^2 / (-i da + ka/2 + sum_n g_n^2 / (-i db_n + gb_n/2))
//
// from the inside out. A zero inner denominator with nonzero coupling sends
// the enclosing self-energy to infinity, whose reciprocal contribution one
// level up is then exactly zero. Only D == 0 is a true pole.
Response response_unchecked(const SystemParams& params, double omega) {
    if (!std::isfinite(omega)) {
        throw NumericalError("non-finite probe frequency");
    }
    const Complex i{0.0, 1.0};
    const auto& cav = params.cavity;

    Complex mech_self_energy{0.0, 0.0};
    bool mech_self_energy_infinite = false;
    for (std::size_t n = 0; n < params.mechanical.size(); ++n) {
        const double g = params.g_ab[n];
        if (g == 0.0) continue;
        const auto& mode = params.mechanical[n];
        const Complex inverse_chi = -i * (omega - mode.omega) + mode.linewidth / 2.0;
        if (inverse_chi == Complex{0.0, 0.0}) {
            mech_self_energy_infinite = true;
        } else {
            mech_self_energy += g * g / inverse_chi;
        }
    }

    Complex denom = -i * (omega - cav.omega_c) + cav.kappa_c() / 2.0;
    if (params.g_ac != 0.0 && !mech_self_energy_infinite) {
        const Complex inverse_chi_a =
            -i * (omega - params.microwave.omega) + params.microwave.linewidth / 2.0 +
            mech_self_energy;
        if (inverse_chi_a == Complex{0.0, 0.0}) {
            // Cavity self-energy diverges: the cavity is fully detuned.
            return Response{Complex{1.0, 0.0}, Complex{0.0, 0.0}};
        }
        denom += params.g_ac * params.g_ac / inverse_chi_a;
    }

    if (denom == Complex{0.0, 0.0}) {
        throw NumericalError("exact lossless pole at omega = " + std::to_string(omega));
    }
    Response out;
    out.r = 1.0 - cav.kappa_c1 / denom;
    out.t = -std::sqrt(cav.kappa_c1 * cav.kappa_c2) / denom;
    if (!std::isfinite(out.r.real()) || !std::isfinite(out.r.imag()) ||
        !std::isfinite(out.t.real()) || !std::isfinite(out.t.imag())) {
        throw NumericalError("non-finite scattering result at omega = " + std::to_string(omega));
    }
    return out;
}

}  // namespace detail

Response closed_form_response(const SystemParams& params, double omega) {
    require_valid(params);
    return detail::response_unchecked(params, omega);
}

Complex reflection(const SystemParams& params, double omega) {
    return closed_form_response(params, omega).r;
}

Complex transmission(const SystemParams& params, double omega) {
    return closed_form_response(params, omega).t;
}

Complex s21(const SystemParams& params, double omega) {
    return params.c_offset * closed_form_response(params, omega).t;
}

Response brute_force_response(const SystemParams& params, double omega) {
    const ModeMatrix mm = build_mode_matrix(params);
    if (!std::isfinite(omega)) {
        throw NumericalError("non-finite probe frequency");
    }
    const Complex i{0.0, 1.0};
    Eigen::MatrixXcd system = -mm.matrix;
    system.diagonal().array() += -i * omega;

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(system);
    if (!lu.isInvertible()) {
        throw NumericalError("singular mode system at omega = " + std::to_string(omega));
    }
    const Eigen::VectorXcd x = lu.solve(mm.drive);
    const Complex c = x(kCavityMode);

    Response out;
    out.r = 1.0 - std::sqrt(params.cavity.kappa_c1) * c;
    out.t = -std::sqrt(params.cavity.kappa_c2) * c;
    if (!std::isfinite(std::abs(out.r)) || !std::isfinite(std::abs(out.t))) {
        throw NumericalError("non-finite oracle result at omega = " + std::to_string(omega));
    }
    return out;
}

std::vector<HybridMode> hybridized_modes(const SystemParams& params) {
    const ModeMatrix mm = build_mode_matrix(params);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(mm.matrix, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigensolver did not converge");
    }
    std::vector<HybridMode> modes;
    modes.reserve(static_cast<std::size_t>(mm.dimension));
    for (Eigen::Index k = 0; k < mm.dimension; ++k) {
        const Complex lambda = solver.eigenvalues()(k);
        modes.push_back(HybridMode{-lambda.imag(), -2.0 * lambda.real()});
    }
    std::sort(modes.begin(), modes.end(), [](const HybridMode& a, const HybridMode& b) {
        return a.omega != b.omega ? a.omega < b.omega : a.decay < b.decay;
    });
    return modes;
}

SpectrumTrace simulate_s21(const SystemParams& params, std::span<const double> freqs_hz) {
    require_valid(params);
    SpectrumTrace trace;
    trace.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
    trace.values.reserve(freqs_hz.size());
    for (double f : freqs_hz) {
        trace.values.push_back(params.c_offset *
                               detail::response_unchecked(params, hz_to_angular(f)).t);
    }
    return trace;
}

SweepGrid sweep(const SystemParams& params, const TuningModel& tuning,
                std::span<const double> currents_ma, std::span<const double> freqs_hz) {
    require_valid(params);
    require_valid(tuning);
    SweepGrid grid;
    grid.currents_ma.assign(currents_ma.begin(), currents_ma.end());
    grid.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
    grid.magnitude.reserve(currents_ma.size() * freqs_hz.size());

    for (double current : currents_ma) {
        const SystemParams tuned =
            with_microwave_frequency(params, frequency_at_current(tuning, current));
        require_valid(tuned);
        for (double f : freqs_hz) {
            grid.magnitude.push_back(
                std::abs(tuned.c_offset * detail::response_unchecked(tuned, hz_to_angular(f)).t));
        }
    }
    return grid;
}

std::vector<std::size_t> local_maxima(std::span<const double> values) {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k + 1 < values.size(); ++k) {
        if (values[k] > values[k - 1] && values[k] > values[k + 1]) out.push_back(k);
    }
    return out;
}

std::vector<double> peak_frequencies(std::span<const double> freqs_hz,
                                     std::span<const double> magnitude) {
    std::vector<double> out;
    for (std::size_t k : local_maxima(magnitude)) {
        // Vertex of the parabola through three (possibly unevenly spaced) points.
        const double x0 = freqs_hz[k - 1], x1 = freqs_hz[k], x2 = freqs_hz[k + 1];
        const double y0 = magnitude[k - 1], y1 = magnitude[k], y2 = magnitude[k + 1];
        const double d1 = (y1 - y0) / (x1 - x0);
        const double d2 = (y2 - y1) / (x2 - x1);
        const double curvature = (d2 - d1) / (x2 - x0);
        double vertex = x1;
        if (curvature < 0.0) {
            vertex = 0.5 * (x0 + x1) - d1 / (2.0 * curvature);
            vertex = std::clamp(vertex, x0, x2);
        }
        out.push_back(vertex);
    }
    return out;
}

std::vector<CrossingSplitting> extract_splittings(const SweepGrid& grid,
                                                  std::span<const double> bare_hz) {
    std::vector<std::vector<double>> row_peaks(grid.rows());
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        row_peaks[r] = peak_frequencies(grid.freqs_hz, grid.row(r));
    }

    std::vector<CrossingSplitting> out;
    for (double bare : bare_hz) {
        CrossingSplitting best;
        best.bare_hz = bare;
        best.min_splitting_hz = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < grid.rows(); ++r) {
            const auto& peaks = row_peaks[r];
            const auto above = std::upper_bound(peaks.begin(), peaks.end(), bare);
            if (above == peaks.begin() || above == peaks.end()) continue;
            const double upper = *above;
            const double lower = *std::prev(above);
            if (upper - lower < best.min_splitting_hz) {
                best.found = true;
                best.min_splitting_hz = upper - lower;
                best.current_ma = grid.currents_ma[r];
                best.lower_hz = lower;
                best.upper_hz = upper;
            }
        }
        if (!best.found) best.min_splitting_hz = 0.0;
        out.push_back(best);
    }
    return out;
}

}  // namespace hybridspec
