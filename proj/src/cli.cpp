#include "hybridspec/cli.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/io.hpp"
#include "hybridspec/scattering.hpp"
#include "hybridspec/units.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <iostream>
#include <limits>
#include <random>
#include <string_view>

namespace hybridspec::cli {

using nlohmann::json;

namespace {

// ---- schema helpers -------------------------------------------------------

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    expect_object(j, where);
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

const json& required(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing key '" + key + "'");
    return *it;
}

const json* optional(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

std::string join(const std::string& where, const char* key) { return where + "." + key; }

// Bare numbers are read in the field's own unit; strings carry an SI prefix
// and unit symbol and are converted into that unit.
double quantity(const json& v, std::string_view unit, double field_unit_in_si, const std::string& where) {
    double value = 0.0;
    if (v.is_number()) {
        value = v.get<double>();
    } else if (v.is_string()) {
        try {
            value = parse_quantity(v.get<std::string>(), unit) / field_unit_in_si;
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    } else {
        throw ConfigError(where + ": expected a number or a quantity string");
    }
    if (!std::isfinite(value)) throw ConfigError(where + ": value must be finite");
    return value;
}

double frequency_hz(const json& v, const std::string& where) { return quantity(v, "Hz", 1.0, where); }

double angular(const json& v, const std::string& where) { return hz_to_angular(frequency_hz(v, where)); }

double current_ma(const json& v, const std::string& where) { return quantity(v, "A", 1e-3, where); }

double plain_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + ": value must be finite");
    return x;
}

long long integer(const json& v, const std::string& where, long long min_value) {
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    const long long x = v.get<long long>();
    if (x < min_value) throw ConfigError(where + ": must be at least " + std::to_string(min_value));
    return x;
}

std::uint64_t seed_value(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw ConfigError(where + ": seed must be a non-negative integer");
}

// Either an explicit array or {"start", "stop", "points"}.
template <typename Parse>
std::vector<double> value_list(const json& v, const std::string& where, Parse parse) {
    std::vector<double> out;
    if (v.is_array()) {
        for (std::size_t k = 0; k < v.size(); ++k) out.push_back(parse(v[k], where + "[" + std::to_string(k) + "]"));
    } else {
        check_keys(v, where, {"start", "stop", "points"});
        const double start = parse(required(v, "start", where), join(where, "start"));
        const double stop = parse(required(v, "stop", where), join(where, "stop"));
        const auto points = integer(required(v, "points", where), join(where, "points"), 1);
        if (points == 1) {
            if (start != stop) throw ConfigError(where + ": a single point needs start == stop");
            out.push_back(start);
        } else {
            for (long long k = 0; k < points; ++k) {
                out.push_back(start + (stop - start) * static_cast<double>(k) / static_cast<double>(points - 1));
            }
        }
    }
    if (out.empty()) throw ConfigError(where + ": list is empty");
    return out;
}

Bounds bounds_pair(const json& v, const std::string& where, double (*parse)(const json&, const std::string&)) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(where + ": expected [lower, upper]");
    return Bounds{parse(v[0], where + "[0]"), parse(v[1], where + "[1]")};
}

double bare_number(const json& v, const std::string& where) { return plain_number(v, where); }

CavityParams parse_cavity(const json& j, const std::string& where) {
    check_keys(j, where, {"frequency", "kappa_port1", "kappa_port2", "kappa_internal"});
    CavityParams c;
    c.omega_c = angular(required(j, "frequency", where), join(where, "frequency"));
    c.kappa_c1 = angular(required(j, "kappa_port1", where), join(where, "kappa_port1"));
    c.kappa_c2 = angular(required(j, "kappa_port2", where), join(where, "kappa_port2"));
    c.kappa_ci = angular(required(j, "kappa_internal", where), join(where, "kappa_internal"));
    return c;
}

Complex parse_offset(const json& v, const std::string& where) {
    if (v.is_number()) return {plain_number(v, where), 0.0};
    if (v.is_array() && v.size() == 2) return {plain_number(v[0], where + "[0]"), plain_number(v[1], where + "[1]")};
    throw ConfigError(where + ": expected a number or [re, im]");
}

json provenance_json(const Provenance& p) {
    return json{{"version", p.version}, {"config_sha256", p.config_sha256}, {"seed", p.seed}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- commands ---------------------------------------------------------------

struct Context {
    json config;
    std::filesystem::path config_dir;
    std::filesystem::path out_dir;
    Provenance provenance;
    std::ostream* log = nullptr;
    int verbosity = 0;

    void note(const std::string& text) const {
        if (verbosity > 0) *log << text << "\n";
    }
    void write(const std::string& name, const std::string& content) const {
        write_text_file(out_dir / name, content);
        note("wrote " + (out_dir / name).string());
    }
};

std::uint64_t resolve_seed(const json& config, const std::optional<std::uint64_t>& override_seed,
                           const json* ga_block) {
    if (override_seed) return *override_seed;
    if (ga_block != nullptr) {
        if (const json* s = optional(*ga_block, "seed")) return seed_value(*s, "config.ga.seed");
    }
    if (const json* s = optional(config, "seed")) return seed_value(*s, "config.seed");
    return 0;
}

json modes_json(const std::vector<HybridMode>& modes) {
    json out = json::array();
    for (const auto& m : modes) {
        out.push_back({{"frequency_hz", angular_to_hz(m.omega)}, {"linewidth_hz", angular_to_hz(m.decay)}});
    }
    return out;
}

void cmd_simulate(const Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, "config", {"system", "grid", "noise", "seed"});
    const SystemParams params = parse_system(required(c, "system", "config"), "config.system");
    const auto freqs = parse_frequency_grid(required(c, "grid", "config"), "config.grid");
    SpectrumTrace trace = simulate_s21(params, freqs);

    double noise = 0.0;
    if (const json* n = optional(c, "noise")) {
        check_keys(*n, "config.noise", {"relative_amplitude"});
        noise = plain_number(required(*n, "relative_amplitude", "config.noise"), "config.noise.relative_amplitude");
        if (noise < 0.0) throw ConfigError("config.noise.relative_amplitude: must be non-negative");
    }
    if (noise > 0.0) {
        std::mt19937_64 rng(ctx.provenance.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : trace.values) v *= std::max(0.0, 1.0 + noise * normal(rng));
    }

    ctx.write("trace.csv", trace_to_csv(trace, ctx.provenance));
    json summary;
    summary["provenance"] = provenance_json(ctx.provenance);
    summary["hybrid_modes"] = modes_json(hybridized_modes(params));
    summary["peaks_hz"] = peak_frequencies(trace.freqs_hz, trace.magnitudes());
    summary["points"] = trace.size();
    ctx.write("summary.json", dump(summary));
}

void cmd_sweep(const Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, "config", {"system", "tuning", "currents", "grid", "seed"});
    const SystemParams params = parse_system(required(c, "system", "config"), "config.system");
    const TuningModel tuning = parse_tuning(required(c, "tuning", "config"), "config.tuning");
    const auto currents = value_list(required(c, "currents", "config"), "config.currents", current_ma);
    const auto freqs = parse_frequency_grid(required(c, "grid", "config"), "config.grid");
    const SweepGrid grid = sweep(params, tuning, currents, freqs);

    ctx.write("sweep.csv", sweep_to_csv(grid, ctx.provenance));
    ctx.write("sweep.pgm", sweep_to_pgm(grid, ctx.provenance));

    std::vector<double> bare;
    for (const auto& m : params.mechanical) bare.push_back(angular_to_hz(m.omega));
    json crossings = json::array();
    for (const auto& s : extract_splittings(grid, bare)) {
        crossings.push_back({{"bare_hz", s.bare_hz},
                             {"found", s.found},
                             {"min_splitting_hz", s.min_splitting_hz},
                             {"current_ma", s.current_ma},
                             {"lower_hz", s.lower_hz},
                             {"upper_hz", s.upper_hz}});
    }
    json summary;
    summary["provenance"] = provenance_json(ctx.provenance);
    summary["rows"] = grid.rows();
    summary["cols"] = grid.cols();
    summary["tuning"] = to_json(tuning);
    summary["crossings"] = crossings;
    ctx.write("summary.json", dump(summary));
}

void cmd_tune(const Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, "config", {"calibration", "frequency_0_hint", "alpha_k", "coil_cal", "currents", "seed"});
    const json& cal = required(c, "calibration", "config");
    if (!cal.is_array() || cal.empty()) throw ConfigError("config.calibration: expected a non-empty list of points");
    std::vector<CalibrationPoint> points;
    for (std::size_t k = 0; k < cal.size(); ++k) {
        const std::string where = "config.calibration[" + std::to_string(k) + "]";
        check_keys(cal[k], where, {"current", "frequency"});
        points.push_back({current_ma(required(cal[k], "current", where), where + ".current"),
                          angular(required(cal[k], "frequency", where), where + ".frequency")});
    }
    double hint = 0.0;
    for (const auto& p : points) hint = std::max(hint, p.omega);
    if (const json* h = optional(c, "frequency_0_hint")) hint = angular(*h, "config.frequency_0_hint");
    const double alpha = optional(c, "alpha_k") ? plain_number(c["alpha_k"], "config.alpha_k") : 1.0;
    const double coil = optional(c, "coil_cal") ? quantity(c["coil_cal"], "T/A", 1.0, "config.coil_cal") : 0.01;
    const TuningModel model = calibrate(points, hint, alpha, coil);

    std::vector<double> currents;
    if (const json* cur = optional(c, "currents")) {
        currents = value_list(*cur, "config.currents", current_ma);
    } else {
        for (const auto& p : points) currents.push_back(p.current);
    }

    std::string csv = provenance_comment(ctx.provenance) + "\ncurrent_ma,field_mt,freq_hz\n";
    for (double i : currents) {
        csv += format_double(i) + "," + format_double(field_at_current(model, i)) + "," +
               format_double(angular_to_hz(frequency_at_current(model, i))) + "\n";
    }
    ctx.write("tuning.csv", csv);

    json residuals = json::array();
    for (const auto& p : points) {
        residuals.push_back({{"current_ma", p.current},
                             {"frequency_hz", angular_to_hz(p.omega)},
                             {"model_hz", angular_to_hz(frequency_at_current(model, p.current))}});
    }
    json out;
    out["provenance"] = provenance_json(ctx.provenance);
    out["model"] = to_json(model);
    out["calibration"] = residuals;
    ctx.write("tuning.json", dump(out));
}

WirebondModelParams parse_circuit_params(const json& c) {
    WirebondModelParams p = band_consistent_wirebond_params();
    if (const json* preset = optional(c, "preset")) {
        if (!preset->is_string()) throw ConfigError("config.preset: expected a string");
        const auto name = preset->get<std::string>();
        if (name == "as_printed") {
            p = as_printed_wirebond_params();
        } else if (name != "band_consistent") {
            throw ConfigError("config.preset: expected 'band_consistent' or 'as_printed'");
        }
    }
    if (const json* e = optional(c, "elements")) {
        const std::string where = "config.elements";
        check_keys(*e, where, {"l_m", "c_m", "r_m", "c_o", "c_pm", "l_mw", "c_mw", "r_mw", "l_wb_per_mm", "c_p",
                               "c_wb", "r_wb", "c_pwb_per_mm"});
        struct Field {
            const char* key;
            const char* unit;
            double WirebondModelParams::*member;
        };
        static constexpr Field kFields[] = {
            {"l_m", "H", &WirebondModelParams::l_m},
            {"c_m", "F", &WirebondModelParams::c_m},
            {"r_m", "Ohm", &WirebondModelParams::r_m},
            {"c_o", "F", &WirebondModelParams::c_o},
            {"c_pm", "F", &WirebondModelParams::c_pm},
            {"l_mw", "H", &WirebondModelParams::l_mw},
            {"c_mw", "F", &WirebondModelParams::c_mw},
            {"r_mw", "Ohm", &WirebondModelParams::r_mw},
            {"l_wb_per_mm", "H/mm", &WirebondModelParams::l_wb_per_mm},
            {"c_p", "F", &WirebondModelParams::c_p},
            {"c_wb", "F", &WirebondModelParams::c_wb},
            {"r_wb", "Ohm", &WirebondModelParams::r_wb},
            {"c_pwb_per_mm", "F/mm", &WirebondModelParams::c_pwb_per_mm},
        };
        for (const auto& f : kFields) {
            if (const json* v = optional(*e, f.key)) {
                const double x = quantity(*v, f.unit, 1.0, join(where, f.key));
                if (!(x > 0.0)) throw ConfigError(join(where, f.key) + ": must be positive");
                p.*f.member = x;
            }
        }
    }
    if (const json* side = optional(c, "parasitic_side")) {
        const auto s = side->is_string() ? side->get<std::string>() : std::string{};
        if (s == "mechanics") {
            p.parasitic_side = ParasiticSide::Mechanics;
        } else if (s == "microwave") {
            p.parasitic_side = ParasiticSide::Microwave;
        } else {
            throw ConfigError("config.parasitic_side: expected 'mechanics' or 'microwave'");
        }
    }
    return p;
}

CrossingSearch parse_search(const json& s) {
    const std::string where = "config.search";
    check_keys(s, where, {"trim_min", "trim_max", "trim_points", "window", "grid_points"});
    CrossingSearch out;
    if (const json* v = optional(s, "trim_min")) out.trim_min = plain_number(*v, join(where, "trim_min"));
    if (const json* v = optional(s, "trim_max")) out.trim_max = plain_number(*v, join(where, "trim_max"));
    if (const json* v = optional(s, "trim_points")) out.trim_points = static_cast<int>(integer(*v, join(where, "trim_points"), 3));
    if (const json* v = optional(s, "window")) out.window = plain_number(*v, join(where, "window"));
    if (const json* v = optional(s, "grid_points")) out.grid_points = static_cast<int>(integer(*v, join(where, "grid_points"), 100));
    if (!(out.trim_min > 0.0) || !(out.trim_max > out.trim_min)) {
        throw ConfigError(where + ": need 0 < trim_min < trim_max");
    }
    if (!(out.window > 0.0 && out.window < 1.0)) throw ConfigError(where + ".window: must lie in (0, 1)");
    return out;
}

void cmd_circuit(const Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, "config", {"preset", "elements", "parasitic_side", "lengths", "search", "seed"});
    WirebondModelParams p = parse_circuit_params(c);
    const auto lengths = value_list(required(c, "lengths", "config"), "config.lengths",
                                    [](const json& v, const std::string& where) {
                                        const double mm = quantity(v, "m", 1e-3, where);
                                        if (!(mm > 0.0)) throw ConfigError(where + ": length must be positive");
                                        return mm;
                                    });
    p.length_mm = lengths.front();
    require_valid(p);
    const CrossingSearch search = optional(c, "search") ? parse_search(c["search"]) : CrossingSearch{};
    const auto rows = coupling_and_shift_vs_length(p, lengths, search);

    std::string csv = provenance_comment(ctx.provenance) + "\nlength_mm,g_hz,shift_hz,loaded_hz,status\n";
    json entries = json::array();
    for (const auto& r : rows) {
        csv += format_double(r.length_mm) + "," + format_double(r.g_hz) + "," + format_double(r.shift_hz) + "," +
               format_double(r.loaded_hz) + "," + (r.ok ? "ok" : "error") + "\n";
        entries.push_back({{"length_mm", r.length_mm},
                           {"ok", r.ok},
                           {"error", r.error},
                           {"g_hz", r.g_hz},
                           {"shift_hz", r.shift_hz},
                           {"loaded_hz", r.loaded_hz}});
    }
    ctx.write("circuit.csv", csv);

    json summary;
    summary["provenance"] = provenance_json(ctx.provenance);
    summary["bare_microwave_hz"] = bare_microwave_frequency_hz(p);
    summary["characteristic_impedance_ohm"] = p.characteristic_impedance();
    summary["entries"] = entries;
    const auto first_ok = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
    const auto last_ok = std::find_if(rows.rbegin(), rows.rend(), [](const auto& r) { return r.ok; });
    if (first_ok != rows.end() && &*first_ok != &*last_ok && first_ok->shift_hz > 0.0 && last_ok->shift_hz > 0.0) {
        // Log-log slopes between the shortest and longest successful lengths.
        const double dl = std::log(last_ok->length_mm / first_ok->length_mm);
        summary["shift_length_sensitivity"] = std::log(last_ok->shift_hz / first_ok->shift_hz) / dl;
        summary["coupling_length_sensitivity"] = std::log(last_ok->g_hz / first_ok->g_hz) / dl;
    }
    ctx.write("summary.json", dump(summary));
}

FitProblem parse_fit_problem(const Context& ctx) {
    const json& c = ctx.config;
    FitProblem problem;

    const json& cuts = required(c, "cuts", "config");
    if (!cuts.is_array() || cuts.empty()) throw ConfigError("config.cuts: expected a non-empty list");
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        const std::string where = "config.cuts[" + std::to_string(k) + "]";
        check_keys(cuts[k], where, {"id", "csv", "current"});
        CutTrace cut;
        const json& id = required(cuts[k], "id", where);
        if (!id.is_string()) throw ConfigError(where + ".id: expected a string");
        cut.cut_id = id.get<std::string>();
        const json& csv = required(cuts[k], "csv", where);
        if (!csv.is_string()) throw ConfigError(where + ".csv: expected a path string");
        const auto path = ctx.config_dir / csv.get<std::string>();
        if (!std::filesystem::exists(path)) throw ConfigError(where + ".csv: file not found: " + path.string());
        cut.trace = trace_from_csv(read_text_file(path));
        if (const json* cur = optional(cuts[k], "current")) cut.current_ma = current_ma(*cur, where + ".current");
        problem.cuts.push_back(std::move(cut));
    }

    const json* fixed = optional(c, "cavity");
    const json* prefit = optional(c, "cavity_prefit");
    if ((fixed == nullptr) == (prefit == nullptr)) {
        throw ConfigError("config: give exactly one of 'cavity' and 'cavity_prefit'");
    }
    if (fixed != nullptr) {
        problem.fixed = parse_cavity(*fixed, "config.cavity");
    } else {
        const std::string where = "config.cavity_prefit";
        check_keys(*prefit, where, {"csv", "kappa_port1", "kappa_port2"});
        const json& csv = required(*prefit, "csv", where);
        if (!csv.is_string()) throw ConfigError(where + ".csv: expected a path string");
        const auto path = ctx.config_dir / csv.get<std::string>();
        if (!std::filesystem::exists(path)) throw ConfigError(where + ".csv: file not found: " + path.string());
        problem.fixed = prefit_cavity(trace_from_csv(read_text_file(path)),
                                      angular(required(*prefit, "kappa_port1", where), where + ".kappa_port1"),
                                      angular(required(*prefit, "kappa_port2", where), where + ".kappa_port2"));
    }

    const std::string bw = "config.bounds";
    const json& b = required(c, "bounds", "config");
    check_keys(b, bw, {"mechanical", "g_ac", "c_offset"});
    const json& mech = required(b, "mechanical", bw);
    if (!mech.is_array()) throw ConfigError(bw + ".mechanical: expected a list");
    for (std::size_t n = 0; n < mech.size(); ++n) {
        const std::string where = bw + ".mechanical[" + std::to_string(n) + "]";
        check_keys(mech[n], where, {"frequency", "gamma", "g_ab"});
        problem.shared_bounds.mechanical.push_back(
            {bounds_pair(required(mech[n], "frequency", where), where + ".frequency", angular),
             bounds_pair(required(mech[n], "gamma", where), where + ".gamma", angular),
             bounds_pair(required(mech[n], "g_ab", where), where + ".g_ab", angular)});
    }
    problem.shared_bounds.g_ac = bounds_pair(required(b, "g_ac", bw), bw + ".g_ac", angular);
    problem.shared_bounds.c_offset = bounds_pair(required(b, "c_offset", bw), bw + ".c_offset", bare_number);

    const json& cb = required(c, "cut_bounds", "config");
    if (!cb.is_array() || cb.size() != problem.cuts.size()) {
        throw ConfigError("config.cut_bounds: expected one entry per cut");
    }
    for (std::size_t k = 0; k < cb.size(); ++k) {
        const std::string where = "config.cut_bounds[" + std::to_string(k) + "]";
        check_keys(cb[k], where, {"frequency", "kappa_internal"});
        problem.per_cut_bounds.push_back(
            {bounds_pair(required(cb[k], "frequency", where), where + ".frequency", angular),
             bounds_pair(required(cb[k], "kappa_internal", where), where + ".kappa_internal", angular)});
    }

    if (const json* ga = optional(c, "ga")) problem.ga = parse_ga(*ga, "config.ga");
    problem.ga.seed = ctx.provenance.seed;
    if (const json* r = optional(c, "residual")) {
        const auto mode = r->is_string() ? r->get<std::string>() : std::string{};
        if (mode == "magnitude") {
            problem.residual = ResidualMode::Magnitude;
        } else if (mode == "complex") {
            problem.residual = ResidualMode::Complex;
        } else {
            throw ConfigError("config.residual: expected 'magnitude' or 'complex'");
        }
    }
    if (const json* p = optional(c, "polish_iterations")) {
        problem.polish_iterations = static_cast<int>(integer(*p, "config.polish_iterations", 0));
    }
    if (const json* p = optional(c, "mode_scan_points")) {
        problem.mode_scan_points = static_cast<int>(integer(*p, "config.mode_scan_points", 0));
    }
    if (const json* p = optional(c, "mode_scan_passes")) {
        problem.mode_scan_passes = static_cast<int>(integer(*p, "config.mode_scan_passes", 0));
    }
    require_valid(problem);
    return problem;
}

void cmd_fit(const Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, "config", {"cuts", "cavity", "cavity_prefit", "bounds", "cut_bounds", "ga", "residual",
                             "polish_iterations", "mode_scan_points", "mode_scan_passes", "reconstruction", "seed"});
    const FitProblem problem = parse_fit_problem(ctx);
    ctx.note("fitting " + std::to_string(problem.cuts.size()) + " cuts");
    const FitResult result = fit(problem);

    json out = to_json(result);
    out["provenance"] = provenance_json(ctx.provenance);
    ctx.write("fit_result.json", dump(out));
    ctx.write("fit_table.txt", provenance_comment(ctx.provenance) + "\n" + fit_table(result));

    std::size_t with_current = 0;
    double max_current = 0.0;
    for (const auto& cut : problem.cuts) {
        if (cut.current_ma) {
            ++with_current;
            max_current = std::max(max_current, std::abs(*cut.current_ma));
        }
    }
    const json* rec = optional(c, "reconstruction");
    if (with_current < 2) {
        if (rec != nullptr) throw ConfigError("config.reconstruction: needs a current on at least two cuts");
        return;
    }

    const std::string where = "config.reconstruction";
    const json empty = json::object();
    const json& r = rec != nullptr ? *rec : empty;
    check_keys(r, where, {"frequency_0_hint", "alpha_k", "coil_cal", "currents", "grid"});
    double hint = 0.0;
    for (const auto& p : result.params_per_cut) hint = std::max(hint, p.microwave.omega);
    if (const json* h = optional(r, "frequency_0_hint")) hint = angular(*h, join(where, "frequency_0_hint"));
    const double alpha = optional(r, "alpha_k") ? plain_number(r["alpha_k"], join(where, "alpha_k")) : 1.0;
    const double coil = optional(r, "coil_cal") ? quantity(r["coil_cal"], "T/A", 1.0, join(where, "coil_cal")) : 0.01;
    const TuningModel tuning = tuning_from_fit(result, hint, alpha, coil);

    std::vector<double> currents;
    if (const json* cur = optional(r, "currents")) {
        currents = value_list(*cur, join(where, "currents"), current_ma);
    } else {
        const double span = 1.25 * max_current;
        for (int k = 0; k <= 100; ++k) currents.push_back(-span + 2.0 * span * k / 100.0);
    }
    std::vector<double> freqs;
    if (const json* g = optional(r, "grid")) {
        freqs = parse_frequency_grid(*g, join(where, "grid"));
    } else {
        const auto& f0 = problem.cuts.front().trace.freqs_hz;
        const std::size_t stride = std::max<std::size_t>(1, f0.size() / 1000);
        for (std::size_t k = 0; k < f0.size(); k += stride) freqs.push_back(f0[k]);
    }
    const Reconstruction recon = reconstruct_sweep(result, tuning, currents, freqs);

    json bundle;
    bundle["provenance"] = provenance_json(ctx.provenance);
    bundle["tuning"] = to_json(tuning);
    bundle["currents_ma"] = recon.grid.currents_ma;
    bundle["freqs_hz"] = recon.grid.freqs_hz;
    json rows = json::array();
    for (std::size_t k = 0; k < recon.grid.rows(); ++k) {
        const auto row = recon.grid.row(k);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    bundle["magnitude"] = rows;
    json overlays = json::array();
    for (const auto& o : recon.overlays) {
        overlays.push_back({{"label", o.label}, {"currents_ma", o.currents_ma}, {"freqs_hz", o.freqs_hz}});
    }
    bundle["overlays"] = overlays;
    ctx.write("reconstruction.json", bundle.dump() + "\n");
    ctx.write("reconstruction.pgm", sweep_to_pgm(recon.grid, ctx.provenance));
}

std::string error_json(const char* kind, const std::string& message, int code) {
    return json{{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}}.dump();
}

}  // namespace

// ---- public parsers ---------------------------------------------------------

SystemParams parse_system(const json& j, const std::string& where) {
    check_keys(j, where, {"cavity", "microwave", "mechanical", "g_ac", "c_offset"});
    SystemParams p;
    p.cavity = parse_cavity(required(j, "cavity", where), join(where, "cavity"));

    const std::string mw = join(where, "microwave");
    const json& m = required(j, "microwave", where);
    check_keys(m, mw, {"frequency", "kappa_internal"});
    p.microwave.omega = angular(required(m, "frequency", mw), join(mw, "frequency"));
    p.microwave.linewidth = angular(required(m, "kappa_internal", mw), join(mw, "kappa_internal"));

    if (const json* list = optional(j, "mechanical")) {
        if (!list->is_array()) throw ConfigError(join(where, "mechanical") + ": expected a list");
        for (std::size_t n = 0; n < list->size(); ++n) {
            const std::string w = join(where, "mechanical") + "[" + std::to_string(n) + "]";
            const json& e = (*list)[n];
            check_keys(e, w, {"frequency", "gamma", "g_ab"});
            p.mechanical.push_back({angular(required(e, "frequency", w), join(w, "frequency")),
                                    angular(required(e, "gamma", w), join(w, "gamma"))});
            p.g_ab.push_back(angular(required(e, "g_ab", w), join(w, "g_ab")));
        }
    }
    p.g_ac = optional(j, "g_ac") ? angular(j["g_ac"], join(where, "g_ac")) : 0.0;
    if (const json* off = optional(j, "c_offset")) p.c_offset = parse_offset(*off, join(where, "c_offset"));
    require_valid(p);
    return p;
}

std::vector<double> parse_frequency_grid(const json& j, const std::string& where) {
    auto freqs = value_list(j, where, frequency_hz);
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        if (!(freqs[k] > 0.0)) throw ConfigError(where + ": frequencies must be positive");
        if (k > 0 && !(freqs[k] > freqs[k - 1])) throw ConfigError(where + ": frequencies must increase");
    }
    return freqs;
}

TuningModel parse_tuning(const json& j, const std::string& where) {
    check_keys(j, where, {"frequency_0", "alpha_k", "i_star_eff", "coil_cal"});
    TuningModel m;
    m.omega_a0 = angular(required(j, "frequency_0", where), join(where, "frequency_0"));
    if (const json* a = optional(j, "alpha_k")) m.alpha_k = plain_number(*a, join(where, "alpha_k"));
    m.i_star_eff = current_ma(required(j, "i_star_eff", where), join(where, "i_star_eff"));
    if (const json* c = optional(j, "coil_cal")) m.coil_cal = quantity(*c, "T/A", 1.0, join(where, "coil_cal"));
    require_valid(m);
    return m;
}

GaSettings parse_ga(const json& j, const std::string& where) {
    check_keys(j, where, {"population", "generations", "crossover_rate", "mutation_rate", "mutation_scale",
                          "elite_count", "seed", "stall_generations", "tournament_size", "threads"});
    GaSettings s;
    auto int_field = [&](const char* key, int& target, long long min_value) {
        if (const json* v = optional(j, key)) {
            const long long x = integer(*v, join(where, key), min_value);
            if (x > std::numeric_limits<int>::max()) throw ConfigError(join(where, key) + ": too large");
            target = static_cast<int>(x);
        }
    };
    auto real_field = [&](const char* key, double& target) {
        if (const json* v = optional(j, key)) target = plain_number(*v, join(where, key));
    };
    int_field("population", s.population, 2);
    int_field("generations", s.generations, 0);
    real_field("crossover_rate", s.crossover_rate);
    real_field("mutation_rate", s.mutation_rate);
    real_field("mutation_scale", s.mutation_scale);
    int_field("elite_count", s.elite_count, 0);
    int_field("stall_generations", s.stall_generations, 0);
    int_field("tournament_size", s.tournament_size, 1);
    int_field("threads", s.threads, 0);
    if (const json* v = optional(j, "seed")) s.seed = seed_value(*v, join(where, "seed"));
    require_valid(s);
    return s;
}

// ---- serialization ------------------------------------------------------------

json to_json(const SystemParams& p) {
    json mech = json::array();
    for (std::size_t n = 0; n < p.mechanical.size(); ++n) {
        mech.push_back({{"frequency", angular_to_hz(p.mechanical[n].omega)},
                        {"gamma", angular_to_hz(p.mechanical[n].linewidth)},
                        {"g_ab", angular_to_hz(p.g_ab[n])}});
    }
    return json{{"cavity",
                 {{"frequency", angular_to_hz(p.cavity.omega_c)},
                  {"kappa_port1", angular_to_hz(p.cavity.kappa_c1)},
                  {"kappa_port2", angular_to_hz(p.cavity.kappa_c2)},
                  {"kappa_internal", angular_to_hz(p.cavity.kappa_ci)}}},
                {"microwave",
                 {{"frequency", angular_to_hz(p.microwave.omega)},
                  {"kappa_internal", angular_to_hz(p.microwave.linewidth)}}},
                {"mechanical", mech},
                {"g_ac", angular_to_hz(p.g_ac)},
                {"c_offset", json::array({p.c_offset.real(), p.c_offset.imag()})}};
}

json to_json(const TuningModel& m) {
    return json{{"frequency_0", angular_to_hz(m.omega_a0)},
                {"alpha_k", m.alpha_k},
                {"i_star_eff_ma", m.i_star_eff},
                {"coil_cal_mt_per_ma", m.coil_cal}};
}

json to_json(const FitResult& r) {
    json cuts = json::array();
    for (std::size_t k = 0; k < r.params_per_cut.size(); ++k) {
        json entry;
        entry["id"] = k < r.cut_ids.size() ? r.cut_ids[k] : std::to_string(k);
        entry["current_ma"] = (k < r.cut_currents_ma.size() && r.cut_currents_ma[k]) ? json(*r.cut_currents_ma[k])
                                                                                     : json(nullptr);
        entry["params"] = to_json(r.params_per_cut[k]);
        cuts.push_back(entry);
    }
    return json{{"cuts", cuts},
                {"cost", r.cost},
                {"ga_cost", r.ga_cost},
                {"history", r.history},
                {"seed_used", r.seed_used},
                {"generations_run", r.generations_run}};
}

std::string fit_table(const FitResult& r) {
    if (r.params_per_cut.empty()) return "no parameters\n";
    const SystemParams& s = r.params_per_cut.front();
    auto row = [](const char* name, const std::string& value) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-16s", name);
        return std::string(buf) + value + "\n";
    };
    auto list = [](const std::vector<double>& values, double scale, const char* fmt, const char* unit) {
        std::string out;
        for (std::size_t k = 0; k < values.size(); ++k) {
            char buf[64];
            std::snprintf(buf, sizeof buf, fmt, values[k] / scale);
            out += (k > 0 ? ", " : "") + std::string(buf);
        }
        return out + " " + unit;
    };
    auto hz = [](double omega) { return angular_to_hz(omega); };

    std::vector<double> wa, ka, wm, gm, gab;
    for (const auto& p : r.params_per_cut) {
        wa.push_back(hz(p.microwave.omega));
        ka.push_back(hz(p.microwave.linewidth));
    }
    for (std::size_t n = 0; n < s.mechanical.size(); ++n) {
        wm.push_back(hz(s.mechanical[n].omega));
        gm.push_back(hz(s.mechanical[n].linewidth));
        gab.push_back(hz(s.g_ab[n]));
    }
    std::string out = row("Parameter", "Value");
    out += row("omega_c/2pi", list({hz(s.cavity.omega_c)}, 1e9, "%.6f", "GHz"));
    out += row("kappa_c/2pi", list({hz(s.cavity.kappa_c())}, 1e3, "%.1f", "kHz"));
    out += row("omega_a/2pi", list(wa, 1e9, "%.6f", "GHz"));
    out += row("kappa_a,i/2pi", list(ka, 1e3, "%.1f", "kHz"));
    if (!wm.empty()) {
        out += row("omega_m/2pi", list(wm, 1e9, "%.6f", "GHz"));
        out += row("gamma_i/2pi", list(gm, 1e3, "%.1f", "kHz"));
    }
    out += row("g_ac/2pi", list({hz(s.g_ac)}, 1e6, "%.3f", "MHz"));
    if (!gab.empty()) out += row("g_ab/2pi", list(gab, 1e6, "%.3f", "MHz"));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", std::abs(s.c_offset));
    out += row("c_offset", buf);
    std::snprintf(buf, sizeof buf, "%.6e", r.cost);
    out += row("cost", buf);
    return out;
}

// ---- entry points -------------------------------------------------------------

int run(const RunConfig& rc, std::ostream& log, std::ostream& err) {
    try {
        const std::string text = read_text_file(rc.config_path);
        Context ctx;
        try {
            ctx.config = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("malformed JSON: ") + e.what());
        }
        expect_object(ctx.config, "config");
        ctx.config_dir = rc.config_path.parent_path();
        ctx.out_dir = rc.out_dir;
        ctx.log = &log;
        ctx.verbosity = rc.verbosity;
        const json* ga = ctx.config.contains("ga") ? &ctx.config["ga"] : nullptr;
        if (ga != nullptr) expect_object(*ga, "config.ga");
        ctx.provenance = Provenance{HYBRIDSPEC_VERSION, sha256_hex(text), resolve_seed(ctx.config, rc.seed, ga)};

        std::error_code ec;
        std::filesystem::create_directories(rc.out_dir, ec);
        if (ec) throw IoError("cannot create output directory '" + rc.out_dir.string() + "': " + ec.message());

        if (rc.command == "simulate") {
            cmd_simulate(ctx);
        } else if (rc.command == "sweep") {
            cmd_sweep(ctx);
        } else if (rc.command == "fit") {
            cmd_fit(ctx);
        } else if (rc.command == "circuit") {
            cmd_circuit(ctx);
        } else if (rc.command == "tune") {
            cmd_tune(ctx);
        } else {
            throw ConfigError("unknown command '" + rc.command + "'");
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << error_json("config", e.what(), kExitConfig) << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        err << error_json("config", e.what(), kExitConfig) << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << error_json("numerical", e.what(), kExitNumerical) << "\n";
        return kExitNumerical;
    } catch (const IoError& e) {
        err << error_json("io", e.what(), kExitIo) << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_json("io", e.what(), kExitIo) << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << error_json("numerical", e.what(), kExitNumerical) << "\n";
        return kExitNumerical;
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Coupled cavity, microwave and mechanical resonator spectra: simulation, sweeps, fits, "
                 "wirebond circuit model and coil tuning."};
    app.set_version_flag("--version", HYBRIDSPEC_VERSION);
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"simulate", "|S21| trace and hybrid-mode table"},
        {"sweep", "|S21| over coil current, with a PGM heatmap"},
        {"fit", "genetic-algorithm fit of several cuts"},
        {"circuit", "wirebond model: coupling and frequency shift versus length"},
        {"tune", "coil-current tuning calibration"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "overrides the seed in the configuration");
        sub->add_flag("-v,--verbose", rc.verbosity, "print the files written");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << error_json("config", e.what(), kExitConfig) << "\n";
        return kExitConfig;
    }
    for (CLI::App* sub : subs) {
        if (sub->parsed()) {
            rc.command = sub->get_name();
            if (sub->count("--seed") > 0) rc.seed = seed;
        }
    }
    rc.config_path = config_path;
    rc.out_dir = out_dir;
    return run(rc, std::cout, std::cerr);
}

}  // namespace hybridspec::cli
