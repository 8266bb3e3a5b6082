#include "hybridspec/circuit.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>

namespace hybridspec {

using Complex = std::complex<double>;

const char* to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Resistor: return "R";
        case ElementKind::Inductor: return "L";
        case ElementKind::Capacitor: return "C";
    }
    return "?";
}

void require_valid(const CircuitNetwork& net) {
    if (net.elements.empty()) throw ConfigError("network has no elements");
    std::map<std::string, std::vector<std::string>> adjacency;
    for (const auto& e : net.elements) {
        if (!std::isfinite(e.value) || e.value <= 0.0) {
            throw ConfigError("element " + e.name + ": value must be positive");
        }
        if (e.node_a == e.node_b) {
            throw ConfigError("element " + e.name + ": both terminals on node " + e.node_a);
        }
        adjacency[e.node_a].push_back(e.node_b);
        adjacency[e.node_b].push_back(e.node_a);
    }
    if (!adjacency.contains(net.ground)) throw ConfigError("network: ground node not present");
    if (!adjacency.contains(net.probe)) throw ConfigError("network: probe node not present");
    if (net.probe == net.ground) throw ConfigError("network: probe must differ from ground");

    std::set<std::string> seen{net.ground};
    std::queue<std::string> frontier;
    frontier.push(net.ground);
    while (!frontier.empty()) {
        const auto node = frontier.front();
        frontier.pop();
        for (const auto& next : adjacency[node]) {
            if (seen.insert(next).second) frontier.push(next);
        }
    }
    if (seen.size() != adjacency.size()) throw ConfigError("network: graph is not connected");
}

// ---------------------------------------------------------------------------
// Wirebond model
// ---------------------------------------------------------------------------

double WirebondModelParams::characteristic_impedance() const { return std::sqrt(l_mw / c_mw); }

void require_valid(const WirebondModelParams& p) {
    const std::pair<const char*, double> fields[] = {
        {"L_m", p.l_m},     {"C_m", p.c_m},   {"R_m", p.r_m},
        {"C_o", p.c_o},     {"C_pm", p.c_pm}, {"L_mw", p.l_mw},
        {"C_mw", p.c_mw},   {"R_mw", p.r_mw}, {"L_wb_per_mm", p.l_wb_per_mm},
        {"C_p", p.c_p},     {"C_wb", p.c_wb}, {"R_wb", p.r_wb},
        {"C_pwb_per_mm", p.c_pwb_per_mm},     {"length", p.length_mm},
    };
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value) || value <= 0.0) {
            throw ConfigError(std::string("wirebond model: ") + name + " must be positive");
        }
    }
}

WirebondModelParams as_printed_wirebond_params() {
    WirebondModelParams p;
    p.l_m = 2.73e-9;
    p.c_m = 1.83e-15;
    p.r_m = 884e6;
    p.c_o = 337e-18;
    p.c_pm = 50e-15;
    p.l_mw = 20e-9;
    p.c_mw = 130.8e-15;
    p.r_mw = 37e6;
    p.l_wb_per_mm = 1e-9;
    p.c_p = 3.9e-15;
    p.c_wb = 20e-12;
    p.r_wb = 0.4;
    p.c_pwb_per_mm = 7e-15;
    p.length_mm = 1.0;
    return p;
}

WirebondModelParams band_consistent_wirebond_params() {
    WirebondModelParams p = as_printed_wirebond_params();
    p.l_m = 2.73e-6;
    return p;
}

CircuitNetwork build_network(const WirebondModelParams& p) {
    require_valid(p);
    namespace n = wirebond_nodes;
    const std::string gnd = "gnd";
    const double l_wb = p.l_wb_per_mm * p.length_mm;
    const double c_pwb = p.c_pwb_per_mm * p.length_mm;
    const bool mech_side = p.parasitic_side == ParasiticSide::Mechanics;

    CircuitNetwork net;
    net.ground = gnd;
    net.probe = n::kMicrowave;
    auto add = [&net](std::string name, ElementKind kind, double value, std::string a,
                      std::string b) {
        net.elements.push_back({std::move(name), kind, value, std::move(a), std::move(b)});
    };
    using K = ElementKind;

    add("R_mw", K::Resistor, p.r_mw, n::kMicrowave, gnd);
    add("L_mw", K::Inductor, p.l_mw, n::kMicrowave, gnd);
    add("C_mw", K::Capacitor, p.c_mw, n::kMicrowave, gnd);

    add("L_wb_sig", K::Inductor, l_wb, n::kMicrowave, n::kSignalWire);
    add("C_p_sig", K::Capacitor, p.c_p, mech_side ? n::kSignalWire : n::kMicrowave, gnd);
    add("C_wb_sig", K::Capacitor, p.c_wb, n::kSignalWire, n::kSignalContact);
    add("R_wb_sig", K::Resistor, p.r_wb, n::kSignalContact, n::kMechSignal);

    add("L_wb_gnd", K::Inductor, l_wb, gnd, n::kGroundWire);
    if (mech_side) add("C_p_gnd", K::Capacitor, p.c_p, n::kGroundWire, gnd);
    add("C_wb_gnd", K::Capacitor, p.c_wb, n::kGroundWire, n::kGroundContact);
    add("R_wb_gnd", K::Resistor, p.r_wb, n::kGroundContact, n::kMechGround);

    add("C_pwb", K::Capacitor, c_pwb, n::kSignalWire, n::kGroundWire);

    add("C_m", K::Capacitor, p.c_m, n::kMechSignal, n::kMotional);
    add("L_m", K::Inductor, p.l_m, n::kMotional, n::kMechGround);
    add("R_m", K::Resistor, p.r_m, n::kMotional, n::kMechGround);
    add("C_o", K::Capacitor, p.c_o, n::kMechSignal, n::kMechGround);
    add("C_pm", K::Capacitor, p.c_pm, n::kMechSignal, gnd);
    return net;
}

CircuitNetwork build_microwave_branch(const WirebondModelParams& p) {
    CircuitNetwork net;
    net.ground = "gnd";
    net.probe = wirebond_nodes::kMicrowave;
    net.elements = {
        {"R_mw", ElementKind::Resistor, p.r_mw, net.probe, net.ground},
        {"L_mw", ElementKind::Inductor, p.l_mw, net.probe, net.ground},
        {"C_mw", ElementKind::Capacitor, p.c_mw, net.probe, net.ground},
    };
    return net;
}

CircuitNetwork without_elements(const CircuitNetwork& net, std::span<const std::string> names) {
    CircuitNetwork out = net;
    std::erase_if(out.elements, [&](const CircuitElement& e) {
        return std::find(names.begin(), names.end(), e.name) != names.end();
    });
    return out;
}

// ---------------------------------------------------------------------------
// Nodal analysis
// ---------------------------------------------------------------------------

Eigen::Index AdmittanceMatrix::index_of(const std::string& node) const {
    const auto it = std::find(nodes.begin(), nodes.end(), node);
    if (it == nodes.end()) throw ConfigError("unknown node " + node);
    return static_cast<Eigen::Index>(it - nodes.begin());
}

namespace {

// Element list resolved to matrix indices once; -1 stands for ground.
struct CompiledNetwork {
    std::vector<std::string> nodes;
    struct Stamp {
        ElementKind kind;
        double value;
        Eigen::Index a;
        Eigen::Index b;
    };
    std::vector<Stamp> stamps;
    Eigen::Index probe = -1;

    explicit CompiledNetwork(const CircuitNetwork& net) {
        require_valid(net);
        std::map<std::string, Eigen::Index> index;
        auto resolve = [&](const std::string& name) -> Eigen::Index {
            if (name == net.ground) return -1;
            auto [it, inserted] = index.emplace(name, static_cast<Eigen::Index>(nodes.size()));
            if (inserted) nodes.push_back(name);
            return it->second;
        };
        for (const auto& e : net.elements) {
            const auto a = resolve(e.node_a);
            const auto b = resolve(e.node_b);
            stamps.push_back({e.kind, e.value, a, b});
        }
        probe = index.at(net.probe);
    }

    [[nodiscard]] Eigen::MatrixXcd admittance(double omega) const {
        const auto n = static_cast<Eigen::Index>(nodes.size());
        Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
        for (const auto& s : stamps) {
            Complex adm;
            switch (s.kind) {
                case ElementKind::Resistor: adm = 1.0 / s.value; break;
                case ElementKind::Inductor: adm = 1.0 / Complex(0.0, omega * s.value); break;
                case ElementKind::Capacitor: adm = Complex(0.0, omega * s.value); break;
            }
            if (s.a >= 0) y(s.a, s.a) += adm;
            if (s.b >= 0) y(s.b, s.b) += adm;
            if (s.a >= 0 && s.b >= 0) {
                y(s.a, s.b) -= adm;
                y(s.b, s.a) -= adm;
            }
        }
        return y;
    }

    [[nodiscard]] Eigen::VectorXcd voltages(double omega) const {
        if (!(omega > 0.0) || !std::isfinite(omega)) {
            throw ConfigError("nodal analysis needs a positive finite frequency");
        }
        const Eigen::MatrixXcd y = admittance(omega);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(y.rows());
        rhs(probe) = 1.0;
        const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(y);
        Eigen::VectorXcd v = lu.solve(rhs);
        if (!v.allFinite()) {
            throw NumericalError("singular admittance matrix at omega = " + std::to_string(omega));
        }
        return v;
    }

    [[nodiscard]] double impedance_magnitude(double f_hz) const {
        return std::abs(voltages(hz_to_angular(f_hz))(probe));
    }
};

constexpr double kInvPhi = 0.6180339887498949;

// Golden-section maximization of f on [a, b].
template <class F>
double golden_maximize(F&& f, double a, double b, double rel_tol) {
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int iter = 0; iter < 200 && (b - a) > rel_tol * std::abs(0.5 * (a + b)); ++iter) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? c : d;
}

// Bisection for |Z|(f) == target between f_in (above target) and f_out (below).
template <class F>
double bisect_level(F&& mag, double f_in, double f_out, double target) {
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (f_in + f_out);
        if (mag(mid) >= target) {
            f_in = mid;
        } else {
            f_out = mid;
        }
        if (std::abs(f_out - f_in) <= 1e-12 * std::abs(mid)) break;
    }
    return 0.5 * (f_in + f_out);
}

// Full width from the curvature of log|Z|: log|Z| ~ log P - 2 d^2 / width^2.
template <class F>
double width_from_log_curvature(F&& mag, double f0, double h) {
    double width = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 0; iter < 30; ++iter) {
        const double l0 = std::log(mag(f0));
        const double curv =
            (std::log(mag(f0 + h)) - 2.0 * l0 + std::log(mag(f0 - h))) / (h * h);
        if (!(curv < 0.0)) break;
        width = 2.0 / std::sqrt(-curv);
        if (h <= width / 50.0) break;
        h = width / 200.0;
    }
    return width;
}

}  // namespace

AdmittanceMatrix admittance_matrix(const CircuitNetwork& net, double omega) {
    const CompiledNetwork compiled(net);
    return AdmittanceMatrix{compiled.nodes, compiled.admittance(omega)};
}

Eigen::VectorXcd node_voltages(const CircuitNetwork& net, double omega, AdmittanceMatrix* layout) {
    const CompiledNetwork compiled(net);
    if (layout != nullptr) {
        layout->nodes = compiled.nodes;
        layout->y = compiled.admittance(omega);
    }
    return compiled.voltages(omega);
}

Complex driving_point_impedance(const CircuitNetwork& net, double omega) {
    const CompiledNetwork compiled(net);
    return compiled.voltages(omega)(compiled.probe);
}

namespace {

std::vector<Resonance> scan_resonances(const CircuitNetwork& net, double f_min, double f_max,
                                       int n_grid, bool with_linewidth) {
    if (!(f_min > 0.0) || !(f_min < f_max) || !std::isfinite(f_max)) {
        throw ConfigError("find_resonances: need 0 < f_min < f_max");
    }
    if (n_grid < 100) throw ConfigError("find_resonances: n_grid must be at least 100");

    const CompiledNetwork compiled(net);
    auto mag = [&compiled](double f) { return compiled.impedance_magnitude(f); };

    const double step = (f_max - f_min) / (n_grid - 1);
    std::vector<double> freqs(static_cast<std::size_t>(n_grid));
    std::vector<double> values(freqs.size());
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        freqs[k] = f_min + step * static_cast<double>(k);
        values[k] = mag(freqs[k]);
    }

    std::vector<Resonance> out;
    for (std::size_t k = 1; k + 1 < freqs.size(); ++k) {
        if (!(values[k] > values[k - 1] && values[k] > values[k + 1])) continue;

        const double f0 = golden_maximize(mag, freqs[k - 1], freqs[k + 1], 1e-9);
        const double peak = std::max(mag(f0), values[k]);
        const double level = peak / std::numbers::sqrt2;

        Resonance res{f0, 0.0, peak};
        if (!with_linewidth) {
            out.push_back(res);
            continue;
        }
        if (values[k - 1] < level && values[k + 1] < level) {
            // Narrower than the grid.
            res.linewidth_hz = width_from_log_curvature(mag, f0, step / 4.0);
        } else {
            // Walk outward on the grid until |Z| drops below the 3 dB level,
            // stopping at a local minimum (no resolvable half-power point).
            std::size_t lo = k;
            while (lo > 0 && values[lo - 1] >= level && values[lo - 1] <= values[lo]) --lo;
            std::size_t hi = k;
            while (hi + 1 < freqs.size() && values[hi + 1] >= level &&
                   values[hi + 1] <= values[hi]) {
                ++hi;
            }
            const bool lo_ok = lo > 0 && values[lo - 1] < level;
            const bool hi_ok = hi + 1 < freqs.size() && values[hi + 1] < level;
            if (lo_ok && hi_ok) {
                const double f_lo =
                    bisect_level(mag, std::min(freqs[lo], f0), freqs[lo - 1], level);
                const double f_hi =
                    bisect_level(mag, std::max(freqs[hi], f0), freqs[hi + 1], level);
                res.linewidth_hz = f_hi - f_lo;
            } else {
                res.linewidth_hz = width_from_log_curvature(mag, f0, step / 4.0);
            }
        }
        out.push_back(res);
    }
    return out;
}

}  // namespace

std::vector<Resonance> find_resonances(const CircuitNetwork& net, double f_min, double f_max,
                                       int n_grid) {
    return scan_resonances(net, f_min, f_max, n_grid, true);
}

// ---------------------------------------------------------------------------
// Avoided crossing and wirebond sweeps
// ---------------------------------------------------------------------------

namespace {

struct StraddlingPair {
    bool ok = false;
    double lower = 0.0;
    double upper = 0.0;
};

StraddlingPair straddle(const CircuitNetwork& net, double reference_hz, const CrossingSearch& s) {
    const auto res = scan_resonances(net, reference_hz * (1.0 - s.window),
                                     reference_hz * (1.0 + s.window), s.grid_points, false);
    StraddlingPair pair;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    for (const auto& r : res) {
        if (r.frequency_hz <= reference_hz) lower = std::max(lower, r.frequency_hz);
        if (r.frequency_hz > reference_hz) upper = std::min(upper, r.frequency_hz);
    }
    if (std::isfinite(lower) && std::isfinite(upper)) {
        pair = {true, lower, upper};
    }
    return pair;
}

double nearest_resonance(const std::vector<Resonance>& res, double target) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : res) {
        if (std::isnan(best) || std::abs(r.frequency_hz - target) < std::abs(best - target)) {
            best = r.frequency_hz;
        }
    }
    return best;
}

}  // namespace

AvoidedCrossing find_avoided_crossing(const std::function<CircuitNetwork(double)>& build,
                                      double reference_hz, const CrossingSearch& search) {
    AvoidedCrossing out;
    if (!(search.trim_min > 0.0) || !(search.trim_min < search.trim_max) ||
        search.trim_points < 3 || !(search.window > 0.0 && search.window < 1.0)) {
        throw ConfigError("crossing search: invalid trim range or window");
    }
    if (!(reference_hz > 0.0) || !std::isfinite(reference_hz)) {
        out.error = "no mechanics-like reference resonance";
        return out;
    }

    auto gap_at = [&](double log_trim) {
        const auto pair = straddle(build(std::exp(log_trim)), reference_hz, search);
        return pair.ok ? pair.upper - pair.lower : std::numeric_limits<double>::infinity();
    };

    const double lo = std::log(search.trim_min);
    const double hi = std::log(search.trim_max);
    const double dx = (hi - lo) / (search.trim_points - 1);
    std::vector<double> gaps(static_cast<std::size_t>(search.trim_points));
    for (std::size_t k = 0; k < gaps.size(); ++k) gaps[k] = gap_at(lo + dx * static_cast<double>(k));

    const auto best = std::min_element(gaps.begin(), gaps.end());
    if (!std::isfinite(*best)) {
        out.error = "failed to bracket crossing: no resonance pair straddles the reference";
        return out;
    }
    const auto k = static_cast<std::size_t>(best - gaps.begin());
    if (k == 0 || k + 1 == gaps.size()) {
        out.error = "failed to bracket crossing: minimum splitting at edge of trim range";
        return out;
    }

    // Golden-section minimization of the gap in log-trim.
    const double x = golden_maximize([&](double lt) { return -gap_at(lt); },
                                     lo + dx * static_cast<double>(k - 1),
                                     lo + dx * static_cast<double>(k + 1), 1e-10);
    const auto pair = straddle(build(std::exp(x)), reference_hz, search);
    if (!pair.ok) {
        out.error = "failed to bracket crossing during refinement";
        return out;
    }
    out.found = true;
    out.trim = std::exp(x);
    out.lower_hz = pair.lower;
    out.upper_hz = pair.upper;
    out.g_hz = 0.5 * (pair.upper - pair.lower);
    return out;
}

double bare_microwave_frequency_hz(const WirebondModelParams& p) {
    return 1.0 / (kTwoPi * std::sqrt(p.l_mw * p.c_mw));
}

double loaded_microwave_frequency_hz(const WirebondModelParams& p) {
    const double bare = bare_microwave_frequency_hz(p);
    const CircuitNetwork full = build_network(p);
    const std::string motional[] = {"C_m", "L_m", "R_m"};
    const CircuitNetwork static_only = without_elements(full, motional);

    const auto reference = find_resonances(static_only, 0.2 * bare, 1.1 * bare, 20000);
    if (reference.empty()) throw NumericalError("no microwave-like resonance below the bare tank");
    const auto strongest = std::max_element(
        reference.begin(), reference.end(),
        [](const Resonance& a, const Resonance& b) { return a.peak_impedance < b.peak_impedance; });

    const auto res = find_resonances(full, 0.2 * bare, 1.1 * bare, 20000);
    const double loaded = nearest_resonance(res, strongest->frequency_hz);
    if (std::isnan(loaded)) throw NumericalError("microwave-like resonance not found");
    return loaded;
}

double mechanical_reference_frequency_hz(const WirebondModelParams& p) {
    const double motional = 1.0 / (kTwoPi * std::sqrt(p.l_m * p.c_m));
    const std::string microwave_inductor[] = {"L_mw"};
    const CircuitNetwork net = without_elements(build_network(p), microwave_inductor);
    const auto res = find_resonances(net, 0.5 * motional, 1.5 * motional, 20000);
    return nearest_resonance(res, motional);
}

std::vector<CouplingShift> coupling_and_shift_vs_length(const WirebondModelParams& p,
                                                        std::span<const double> lengths_mm,
                                                        const CrossingSearch& search) {
    std::vector<CouplingShift> out;
    for (double length : lengths_mm) {
        CouplingShift row;
        row.length_mm = length;
        try {
            WirebondModelParams q = p;
            q.length_mm = length;
            require_valid(q);
            row.loaded_hz = loaded_microwave_frequency_hz(q);
            row.shift_hz = bare_microwave_frequency_hz(q) - row.loaded_hz;

            const double reference = mechanical_reference_frequency_hz(q);
            const auto crossing = find_avoided_crossing(
                [&q](double trim) {
                    WirebondModelParams t = q;
                    t.l_mw = q.l_mw * trim;
                    return build_network(t);
                },
                reference, search);
            if (crossing.found) {
                row.ok = true;
                row.g_hz = crossing.g_hz;
            } else {
                row.error = crossing.error;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace hybridspec
