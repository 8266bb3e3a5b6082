#include "hybridspec/io.hpp"

#include "hybridspec/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace hybridspec {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int k = 0; k < length; ++k) {
        out.push_back(kHex[digest[k] >> 4]);
        out.push_back(kHex[digest[k] & 0x0f]);
    }
    return out;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string provenance_comment(const Provenance& p) {
    return "# hybridspec " + p.version + " config_sha256=" + p.config_sha256 +
           " seed=" + std::to_string(p.seed);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string trace_to_csv(const SpectrumTrace& trace, const Provenance& p, bool with_phase) {
    std::string out = provenance_comment(p) + "\n";
    out += with_phase ? "freq_hz,s21_mag_linear,s21_phase_rad\n" : "freq_hz,s21_mag_linear\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out += format_double(trace.freqs_hz[k]);
        out += ',';
        out += format_double(std::abs(trace.values[k]));
        if (with_phase) {
            out += ',';
            out += format_double(std::arg(trace.values[k]));
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        fields.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw ConfigError("csv line " + std::to_string(line_no) + ": invalid number '" +
                          std::string(field) + "'");
    }
    return value;
}

}  // namespace

SpectrumTrace trace_from_csv(std::string_view text) {
    SpectrumTrace trace;
    bool header_seen = false;
    bool has_phase = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_fields(line);
        if (!header_seen) {
            if (fields.size() < 2 || fields[0] != "freq_hz" || fields[1] != "s21_mag_linear" ||
                fields.size() > 3 || (fields.size() == 3 && fields[2] != "s21_phase_rad")) {
                throw ConfigError("csv: header must be freq_hz,s21_mag_linear[,s21_phase_rad]");
            }
            has_phase = fields.size() == 3;
            header_seen = true;
            continue;
        }
        if (fields.size() != (has_phase ? 3u : 2u)) {
            throw ConfigError("csv line " + std::to_string(line_no) + ": wrong number of columns");
        }
        const double f = parse_number(fields[0], line_no);
        const double mag = parse_number(fields[1], line_no);
        if (mag < 0.0) throw ConfigError("csv line " + std::to_string(line_no) + ": negative magnitude");
        const double phase = has_phase ? parse_number(fields[2], line_no) : 0.0;
        trace.freqs_hz.push_back(f);
        trace.values.push_back(std::polar(mag, phase));
    }
    if (!header_seen) throw ConfigError("csv: missing header");
    if (trace.size() == 0) throw ConfigError("csv: no data rows");
    require_valid(trace);
    return trace;
}

std::string sweep_to_csv(const SweepGrid& grid, const Provenance& p) {
    std::string out = provenance_comment(p) + "\ncurrent_ma";
    for (double f : grid.freqs_hz) {
        out += ',';
        out += format_double(f);
    }
    out += '\n';
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        out += format_double(grid.currents_ma[r]);
        for (double v : grid.row(r)) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::string sweep_to_pgm(const SweepGrid& grid, const Provenance& p) {
    constexpr int kMaxVal = 65535;
    std::string out = "P2\n" + provenance_comment(p) + "\n" + std::to_string(grid.cols()) + " " +
                      std::to_string(grid.rows()) + "\n" + std::to_string(kMaxVal) + "\n";
    double lo = 0.0;
    double hi = 0.0;
    if (!grid.magnitude.empty()) {
        const auto [mn, mx] = std::minmax_element(grid.magnitude.begin(), grid.magnitude.end());
        lo = *mn;
        hi = *mx;
    }
    const double span = hi - lo;
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        const auto row = grid.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const long level = span > 0.0 ? std::lround((row[c] - lo) / span * kMaxVal) : 0L;
            if (c > 0) out += ' ';
            out += std::to_string(level);
        }
        out += '\n';
    }
    return out;
}

}  // namespace hybridspec
