#pragma once

// Two-port response of the coupled system: closed-form r(w) and t(w), an
// independent linear-solve oracle, hybridized eigenmodes, and coil sweeps.

#include "hybridspec/model.hpp"
#include "hybridspec/tuning.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hybridspec {

/// Frequency grid (Hz, strictly increasing) with one complex value per point.
struct SpectrumTrace {
    std::vector<double> freqs_hz;
    std::vector<Complex> values;

    [[nodiscard]] std::size_t size() const noexcept { return freqs_hz.size(); }
    [[nodiscard]] std::vector<double> magnitudes() const;

    friend bool operator==(const SpectrumTrace&, const SpectrumTrace&) = default;
};

/// Throws ConfigError on length mismatch or non-increasing frequencies.
void require_valid(const SpectrumTrace& trace);

/// |S21| over (current, frequency). magnitude is row-major, one row per current.
struct SweepGrid {
    std::vector<double> currents_ma;
    std::vector<double> freqs_hz;
    std::vector<double> magnitude;

    [[nodiscard]] std::size_t rows() const noexcept { return currents_ma.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return freqs_hz.size(); }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const {
        return magnitude[row * cols() + col];
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return std::span<const double>(magnitude).subspan(r * cols(), cols());
    }

    friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

struct Response {
    Complex r;
    Complex t;
};

/// Hybridized mode: frequency -Im(lambda) and energy decay rate -2 Re(lambda).
struct HybridMode {
    double omega = 0.0;
    double decay = 0.0;
};

/// Closed-form r(w) from the nested self-energy. Throws ConfigError for
/// invalid params and NumericalError at an exact lossless pole.
[[nodiscard]] Complex reflection(const SystemParams& params, double omega);

/// Closed-form t(w); shares its denominator with reflection().
[[nodiscard]] Complex transmission(const SystemParams& params, double omega);

/// c_offset * t(w).
[[nodiscard]] Complex s21(const SystemParams& params, double omega);

/// Both coefficients from one evaluation of the nested fraction.
[[nodiscard]] Response closed_form_response(const SystemParams& params, double omega);

/// Solves (-i w I - M) x = drive directly and applies the port output
/// relations. Independent of the closed form; throws NumericalError when the
/// system is singular.
[[nodiscard]] Response brute_force_response(const SystemParams& params, double omega);

/// Eigenmodes of the mode matrix, ascending by frequency, ties by decay rate.
[[nodiscard]] std::vector<HybridMode> hybridized_modes(const SystemParams& params);

/// s21 on a frequency grid (Hz).
[[nodiscard]] SpectrumTrace simulate_s21(const SystemParams& params,
                                         std::span<const double> freqs_hz);

/// One |s21| row per coil current with the microwave frequency taken from
/// the tuning model and every other parameter held fixed.
[[nodiscard]] SweepGrid sweep(const SystemParams& params, const TuningModel& tuning,
                              std::span<const double> currents_ma,
                              std::span<const double> freqs_hz);

/// Indices of strict three-point local maxima.
[[nodiscard]] std::vector<std::size_t> local_maxima(std::span<const double> values);

/// Local-maximum positions with three-point parabolic interpolation (Hz).
[[nodiscard]] std::vector<double> peak_frequencies(std::span<const double> freqs_hz,
                                                   std::span<const double> magnitude);

/// Avoided crossing around one bare mechanical frequency.
struct CrossingSplitting {
    double bare_hz = 0.0;
    bool found = false;
    double min_splitting_hz = 0.0;  ///< smallest gap between the peaks straddling bare_hz
    double current_ma = 0.0;        ///< row where the smallest gap occurs
    double lower_hz = 0.0;
    double upper_hz = 0.0;
};

/// For each bare frequency, scans the rows of the grid for the pair of |S21|
/// peaks that straddle it and reports where their gap is smallest.
[[nodiscard]] std::vector<CrossingSplitting> extract_splittings(
    const SweepGrid& grid, std::span<const double> bare_hz);

namespace detail {
/// Closed form without parameter validation, for hot loops that validated once.
[[nodiscard]] Response response_unchecked(const SystemParams& params, double omega);
}  // namespace detail

}  // namespace hybridspec
