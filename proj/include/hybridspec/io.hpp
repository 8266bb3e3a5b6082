#pragma once

// Plain-text artifacts: CSV traces and grids, PGM heatmaps, provenance.

#include "hybridspec/scattering.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace hybridspec {

struct Provenance {
    std::string version;
    std::string config_sha256;
    std::uint64_t seed = 0;
};

/// Lower-case hex SHA-256 of the bytes.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_double(double value);

/// "# hybridspec <version> config_sha256=<hash> seed=<seed>"
[[nodiscard]] std::string provenance_comment(const Provenance& p);

/// Throws IoError when the file cannot be read or written.
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Columns freq_hz, s21_mag_linear[, s21_phase_rad]; one provenance comment line first.
[[nodiscard]] std::string trace_to_csv(const SpectrumTrace& trace, const Provenance& p,
                                       bool with_phase = true);

/// Parses the trace CSV format. Lines starting with '#' are skipped. Without
/// a phase column the values are real and non-negative. Throws ConfigError on
/// malformed content.
[[nodiscard]] SpectrumTrace trace_from_csv(std::string_view text);

/// Header "current_ma,<f1>,<f2>,..." then one row per current.
[[nodiscard]] std::string sweep_to_csv(const SweepGrid& grid, const Provenance& p);

/// ASCII PGM (P2), one image row per current and one column per frequency,
/// min-max normalized to 0..65535. A constant grid maps to 0.
[[nodiscard]] std::string sweep_to_pgm(const SweepGrid& grid, const Provenance& p);

}  // namespace hybridspec
