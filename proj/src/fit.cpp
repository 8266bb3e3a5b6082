#include "hybridspec/fit.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/units.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace hybridspec {

namespace {

void check_bounds(const Bounds& b, const std::string& what, bool log_scaled) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
        throw ConfigError("fit: bounds for " + what + " must be finite with lower < upper");
    }
    if (log_scaled && !(b.lower > 0.0)) {
        throw ConfigError("fit: bounds for " + what + " must be positive");
    }
    if (!log_scaled && !(b.lower > 0.0)) {
        throw ConfigError("fit: frequency bounds for " + what + " must be positive");
    }
}

bool is_frequency_slot(const ParameterLayout& layout, std::size_t index) {
    if (index < 3 * layout.mechanical_count) return index % 3 == 0;
    if (index < layout.g_ac() + 2) return false;
    return (index - layout.cut_omega(0)) % 2 == 0;
}

double from_gene(const Bounds& b, bool linear, double u) {
    if (linear) return b.lower + u * (b.upper - b.lower);
    const double lo = std::log(b.lower);
    const double hi = std::log(b.upper);
    return std::exp(lo + u * (hi - lo));
}

// |t(w)| with the nested fraction expanded into real arithmetic. Returns a
// negative value when a denominator vanishes, so the caller can fall back to
// the general evaluation.
double transmission_magnitude_fast(const SystemParams& p, double omega) {
    double se_re = 0.0;
    double se_im = 0.0;
    for (std::size_t n = 0; n < p.mechanical.size(); ++n) {
        const double delta = omega - p.mechanical[n].omega;
        const double half = 0.5 * p.mechanical[n].linewidth;
        const double den = delta * delta + half * half;
        if (den == 0.0) return -1.0;
        const double g2 = p.g_ab[n] * p.g_ab[n] / den;
        se_re += g2 * half;
        se_im += g2 * delta;
    }
    const double a_re = 0.5 * p.microwave.linewidth + se_re;
    const double a_im = -(omega - p.microwave.omega) + se_im;
    const double a_den = a_re * a_re + a_im * a_im;
    if (a_den == 0.0) return -1.0;
    const double ga2 = p.g_ac * p.g_ac / a_den;
    const double d_re = 0.5 * p.cavity.kappa_c() + ga2 * a_re;
    const double d_im = -(omega - p.cavity.omega_c) - ga2 * a_im;
    const double d_abs = std::hypot(d_re, d_im);
    if (d_abs == 0.0) return -1.0;
    return std::sqrt(p.cavity.kappa_c1 * p.cavity.kappa_c2) / d_abs;
}

}  // namespace

void require_valid(const FitProblem& problem) {
    if (problem.cuts.empty()) throw ConfigError("fit: at least one cut is required");
    if (problem.per_cut_bounds.size() != problem.cuts.size()) {
        throw ConfigError("fit: per_cut_bounds must have one entry per cut");
    }
    for (const auto& cut : problem.cuts) {
        require_valid(cut.trace);
        if (cut.trace.size() == 0) throw ConfigError("fit: cut '" + cut.cut_id + "' has no points");
        for (double f : cut.trace.freqs_hz) {
            if (!(f > 0.0)) throw ConfigError("fit: cut '" + cut.cut_id + "' has non-positive frequency");
        }
        if (cut.current_ma && !std::isfinite(*cut.current_ma)) {
            throw ConfigError("fit: cut '" + cut.cut_id + "' has a non-finite current");
        }
    }
    const auto& cav = problem.fixed;
    if (!(cav.omega_c > 0.0) || !(cav.kappa_c1 >= 0.0) || !(cav.kappa_c2 >= 0.0) ||
        !(cav.kappa_ci >= 0.0) || !std::isfinite(cav.kappa_c())) {
        throw ConfigError("fit: fixed cavity parameters are invalid");
    }
    const auto& sb = problem.shared_bounds;
    for (std::size_t n = 0; n < sb.mechanical.size(); ++n) {
        const std::string tag = "mechanical[" + std::to_string(n) + "]";
        check_bounds(sb.mechanical[n].omega, tag + ".omega", false);
        check_bounds(sb.mechanical[n].linewidth, tag + ".linewidth", true);
        check_bounds(sb.mechanical[n].coupling, tag + ".coupling", true);
    }
    check_bounds(sb.g_ac, "g_ac", true);
    check_bounds(sb.c_offset, "c_offset", true);
    for (std::size_t k = 0; k < problem.per_cut_bounds.size(); ++k) {
        const std::string tag = "cut[" + std::to_string(k) + "]";
        check_bounds(problem.per_cut_bounds[k].omega_a, tag + ".omega_a", false);
        check_bounds(problem.per_cut_bounds[k].kappa_ai, tag + ".kappa_ai", true);
    }
    if (problem.polish_iterations < 0) throw ConfigError("fit: polish_iterations must be >= 0");
    if (problem.mode_scan_points < 0 || problem.mode_scan_passes < 0) {
        throw ConfigError("fit: mode_scan_points and mode_scan_passes must be >= 0");
    }
    require_valid(problem.ga);
}

ParameterLayout layout_of(const FitProblem& problem) {
    return ParameterLayout{problem.shared_bounds.mechanical.size(), problem.cuts.size()};
}

std::vector<Bounds> flat_bounds(const FitProblem& problem) {
    const ParameterLayout layout = layout_of(problem);
    std::vector<Bounds> out(layout.size());
    for (std::size_t n = 0; n < layout.mechanical_count; ++n) {
        const auto& mb = problem.shared_bounds.mechanical[n];
        out[layout.mech_omega(n)] = mb.omega;
        out[layout.mech_linewidth(n)] = mb.linewidth;
        out[layout.mech_coupling(n)] = mb.coupling;
    }
    out[layout.g_ac()] = problem.shared_bounds.g_ac;
    out[layout.c_offset()] = problem.shared_bounds.c_offset;
    for (std::size_t k = 0; k < layout.cut_count; ++k) {
        out[layout.cut_omega(k)] = problem.per_cut_bounds[k].omega_a;
        out[layout.cut_loss(k)] = problem.per_cut_bounds[k].kappa_ai;
    }
    return out;
}

std::vector<double> encode(const FitProblem& problem, std::span<const SystemParams> per_cut) {
    const ParameterLayout layout = layout_of(problem);
    if (per_cut.size() != layout.cut_count) throw ConfigError("fit: encode needs one parameter set per cut");
    const SystemParams& first = per_cut.front();
    if (first.mechanical.size() != layout.mechanical_count || first.g_ab.size() != layout.mechanical_count) {
        throw ConfigError("fit: parameter set has the wrong number of mechanical modes");
    }
    std::vector<double> x(layout.size());
    for (std::size_t n = 0; n < layout.mechanical_count; ++n) {
        x[layout.mech_omega(n)] = first.mechanical[n].omega;
        x[layout.mech_linewidth(n)] = first.mechanical[n].linewidth;
        x[layout.mech_coupling(n)] = first.g_ab[n];
    }
    x[layout.g_ac()] = first.g_ac;
    x[layout.c_offset()] = first.c_offset.real();
    for (std::size_t k = 0; k < layout.cut_count; ++k) {
        x[layout.cut_omega(k)] = per_cut[k].microwave.omega;
        x[layout.cut_loss(k)] = per_cut[k].microwave.linewidth;
    }
    return x;
}

std::vector<SystemParams> decode(const FitProblem& problem, std::span<const double> x) {
    const ParameterLayout layout = layout_of(problem);
    if (x.size() != layout.size()) {
        throw ConfigError("fit: candidate has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(layout.size()));
    }
    SystemParams shared;
    shared.cavity = problem.fixed;
    for (std::size_t n = 0; n < layout.mechanical_count; ++n) {
        shared.mechanical.push_back({x[layout.mech_omega(n)], x[layout.mech_linewidth(n)]});
        shared.g_ab.push_back(x[layout.mech_coupling(n)]);
    }
    shared.g_ac = x[layout.g_ac()];
    shared.c_offset = {x[layout.c_offset()], 0.0};

    std::vector<SystemParams> out(layout.cut_count, shared);
    for (std::size_t k = 0; k < layout.cut_count; ++k) {
        out[k].microwave = {x[layout.cut_omega(k)], x[layout.cut_loss(k)]};
    }
    return out;
}

namespace {

void check_candidate(const FitProblem& problem, std::span<const double> x) {
    const auto bounds = flat_bounds(problem);
    if (x.size() != bounds.size()) {
        throw ConfigError("fit: candidate has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(bounds.size()));
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!bounds[j].contains(x[j])) {
            throw ConfigError("fit: candidate entry " + std::to_string(j) + " is out of bounds");
        }
    }
}

// Appends residuals in cut-major, point-minor order. Returns false when the
// model cannot be evaluated.
bool append_residuals(const FitProblem& problem, std::span<const double> x, std::vector<double>& out) {
    const auto per_cut = decode(problem, x);
    try {
        for (std::size_t k = 0; k < per_cut.size(); ++k) {
            const auto& params = per_cut[k];
            if (!validate(params).ok()) return false;
            const auto& trace = problem.cuts[k].trace;
            const double scale = std::abs(params.c_offset);
            for (std::size_t j = 0; j < trace.size(); ++j) {
                const double omega = hz_to_angular(trace.freqs_hz[j]);
                if (problem.residual == ResidualMode::Magnitude) {
                    double mag = transmission_magnitude_fast(params, omega);
                    if (mag < 0.0) mag = std::abs(detail::response_unchecked(params, omega).t);
                    out.push_back(scale * mag - std::abs(trace.values[j]));
                } else {
                    const Complex d = params.c_offset * detail::response_unchecked(params, omega).t -
                                      trace.values[j];
                    out.push_back(d.real());
                    out.push_back(d.imag());
                }
            }
        }
    } catch (const NumericalError&) {
        return false;
    }
    return true;
}

double sum_of_squares(const std::vector<double>& r) {
    double total = 0.0;
    for (double v : r) total += v * v;
    return std::isfinite(total) ? total : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<double> residuals(const FitProblem& problem, std::span<const double> x) {
    check_candidate(problem, x);
    std::vector<double> out;
    if (!append_residuals(problem, x, out)) out.clear();
    return out;
}

double cost(const FitProblem& problem, std::span<const double> x) {
    check_candidate(problem, x);
    std::vector<double> r;
    if (!append_residuals(problem, x, r)) return std::numeric_limits<double>::infinity();
    return sum_of_squares(r);
}

namespace {

// Tent map of the real line onto [0, 1]. Unlike clamping it keeps a nonzero
// slope, so a parameter that overshoots a bound can come back.
double fold_unit(double u) {
    const double v = std::fmod(std::abs(u), 2.0);
    return v <= 1.0 ? v : 2.0 - v;
}

// Levenberg-Marquardt on the gene vector, folded into the unit box.
struct PolishFunctor : Eigen::DenseFunctor<double> {
    const FitProblem* problem;
    std::function<std::vector<double>(std::span<const double>)> to_physical;
    std::size_t count;

    PolishFunctor(const FitProblem& p, std::function<std::vector<double>(std::span<const double>)> map,
                  int inputs, std::size_t values)
        : Eigen::DenseFunctor<double>(inputs, static_cast<int>(values)),
          problem(&p), to_physical(std::move(map)), count(values) {}

    int operator()(const Eigen::VectorXd& u, Eigen::VectorXd& f) const {
        std::vector<double> genes(static_cast<std::size_t>(u.size()));
        for (Eigen::Index j = 0; j < u.size(); ++j) genes[static_cast<std::size_t>(j)] = fold_unit(u(j));
        std::vector<double> r;
        r.reserve(count);
        if (!append_residuals(*problem, to_physical(genes), r) || r.size() != count) {
            f.setConstant(1e6);
            return 0;
        }
        for (std::size_t j = 0; j < count; ++j) f(static_cast<Eigen::Index>(j)) = r[j];
        return 0;
    }
};

}  // namespace

FitResult fit(const FitProblem& problem) {
    require_valid(problem);
    const ParameterLayout layout = layout_of(problem);
    const auto bounds = flat_bounds(problem);

    auto to_physical = [&](std::span<const double> genes) {
        std::vector<double> x(genes.size());
        for (std::size_t j = 0; j < genes.size(); ++j) {
            x[j] = std::clamp(from_gene(bounds[j], is_frequency_slot(layout, j), genes[j]),
                              bounds[j].lower, bounds[j].upper);
        }
        return x;
    };

    const GaOutcome outcome = minimize_genetic(
        layout.size(), [&](std::span<const double> genes) { return cost(problem, to_physical(genes)); },
        problem.ga);

    if (!std::isfinite(outcome.best_cost)) {
        throw NumericalError("fit: every candidate was infeasible (model evaluation failed for all " +
                             std::to_string(problem.ga.population) + " members in every generation)");
    }

    std::vector<double> best_genes = outcome.best_genes;
    double best_cost = outcome.best_cost;
    if (problem.polish_iterations > 0) {
        std::vector<double> r;
        append_residuals(problem, to_physical(best_genes), r);
        PolishFunctor functor(problem, to_physical, static_cast<int>(layout.size()), r.size());
        Eigen::NumericalDiff<PolishFunctor> numeric(functor);

        auto polish_from = [&](const std::vector<double>& start) {
            Eigen::LevenbergMarquardt<Eigen::NumericalDiff<PolishFunctor>> lm(numeric);
            lm.setMaxfev(problem.polish_iterations * static_cast<Eigen::Index>(layout.size() + 1));
            lm.setXtol(1e-14);
            lm.setFtol(1e-14);
            Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(start.data(), static_cast<Eigen::Index>(start.size()));
            lm.minimize(u);
            std::vector<double> polished(start.size());
            for (std::size_t j = 0; j < polished.size(); ++j) {
                polished[j] = fold_unit(u(static_cast<Eigen::Index>(j)));
            }
            const double c = cost(problem, to_physical(polished));
            if (c < best_cost) {
                best_cost = c;
                best_genes = std::move(polished);
            }
        };

        polish_from(best_genes);

        // Coordinate scan: one mechanical mode at a time over a frequency grid
        // and a few linewidth and coupling levels, others held at the best.
        // The frequency grid must be finer than the narrowest linewidth for the
        // polish to lock on, which the GA alone does not guarantee.
        constexpr std::array<double, 4> kLinewidthGenes{0.1, 0.4, 0.7, 1.0};
        constexpr std::array<double, 3> kCouplingGenes{0.25, 0.5, 0.75};
        const int points = problem.mode_scan_points;
        for (int pass = 0; points > 0 && pass < problem.mode_scan_passes; ++pass) {
            const double before = best_cost;
            for (std::size_t n = 0; n < layout.mechanical_count; ++n) {
                std::vector<double> probe = best_genes;
                std::vector<double> chosen;
                double chosen_cost = std::numeric_limits<double>::infinity();
                for (int k = 0; k < points; ++k) {
                    probe[layout.mech_omega(n)] = points == 1 ? 0.5 : static_cast<double>(k) / (points - 1);
                    for (double lw : kLinewidthGenes) {
                        probe[layout.mech_linewidth(n)] = lw;
                        for (double g : kCouplingGenes) {
                            probe[layout.mech_coupling(n)] = g;
                            const double c = cost(problem, to_physical(probe));
                            if (c < chosen_cost) {
                                chosen_cost = c;
                                chosen = probe;
                            }
                        }
                    }
                }
                if (!chosen.empty()) polish_from(chosen);
            }
            if (!(best_cost < before)) break;
        }
    }

    FitResult result;
    for (const auto& cut : problem.cuts) {
        result.cut_ids.push_back(cut.cut_id);
        result.cut_currents_ma.push_back(cut.current_ma);
    }
    result.params_per_cut = decode(problem, to_physical(best_genes));
    result.cost = best_cost;
    result.ga_cost = outcome.best_cost;
    result.history = outcome.history;
    result.seed_used = problem.ga.seed;
    result.generations_run = outcome.generations_run;
    return result;
}

LorentzianPeak fit_lorentzian_peak(const SpectrumTrace& trace) {
    require_valid(trace);
    const std::vector<double> mag = trace.magnitudes();
    if (mag.size() < 3) throw NumericalError("no peak");
    const auto [min_it, max_it] = std::minmax_element(mag.begin(), mag.end());
    if (!(*max_it > *min_it)) throw NumericalError("no peak");
    const auto top = static_cast<std::size_t>(std::distance(mag.begin(), max_it));
    if (top == 0 || top + 1 == mag.size()) throw NumericalError("peak not bracketed");
    if (!(mag[top] > mag[top - 1] && mag[top] > mag[top + 1])) throw NumericalError("no peak");
    const double peak = mag[top];

    // Contiguous region where the power is above a quarter of the maximum.
    const double level = 0.25 * peak * peak;
    std::size_t lo = top;
    std::size_t hi = top;
    while (lo > 0 && mag[lo - 1] * mag[lo - 1] >= level) --lo;
    while (hi + 1 < mag.size() && mag[hi + 1] * mag[hi + 1] >= level) ++hi;
    if (lo == 0 || hi + 1 == mag.size()) throw NumericalError("peak not bracketed");
    if (hi - lo + 1 < 3) throw NumericalError("no peak: fewer than three points across the resonance");

    // 1/|S|^2 is a parabola in omega for a Lorentzian; weight by |S|^4 so the
    // fit is uniform in relative power error.
    const double centre = hz_to_angular(trace.freqs_hz[top]);
    const double scale = hz_to_angular(trace.freqs_hz[hi] - trace.freqs_hz[lo]);
    const auto count = static_cast<Eigen::Index>(hi - lo + 1);
    Eigen::MatrixXd a(count, 3);
    Eigen::VectorXd b(count);
    for (Eigen::Index r = 0; r < count; ++r) {
        const std::size_t j = lo + static_cast<std::size_t>(r);
        const double x = (hz_to_angular(trace.freqs_hz[j]) - centre) / scale;
        const double p = mag[j] * mag[j];
        const double w = p / (peak * peak);
        a(r, 0) = w * x * x;
        a(r, 1) = w * x;
        a(r, 2) = w;
        b(r) = w * (peak * peak / p);
    }
    const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
    if (!(coef(0) > 0.0)) throw NumericalError("no peak: inverse power is not convex");
    const double x0 = -coef(1) / (2.0 * coef(0));
    const double half_width_sq = coef(2) / coef(0) - x0 * x0;
    if (!(half_width_sq > 0.0)) throw NumericalError("no peak: non-positive fitted linewidth");
    LorentzianPeak out;
    out.omega = centre + x0 * scale;
    out.linewidth = 2.0 * std::sqrt(half_width_sq) * scale;
    return out;
}

CavityParams prefit_cavity(const SpectrumTrace& wide_trace, double kappa_c1, double kappa_c2) {
    if (!(kappa_c1 >= 0.0) || !(kappa_c2 >= 0.0)) {
        throw ConfigError("prefit: port rates must be non-negative");
    }
    const LorentzianPeak peak = fit_lorentzian_peak(wide_trace);
    CavityParams out;
    out.omega_c = peak.omega;
    out.kappa_c1 = kappa_c1;
    out.kappa_c2 = kappa_c2;
    out.kappa_ci = peak.linewidth - kappa_c1 - kappa_c2;
    if (out.kappa_ci < 0.0) {
        throw ConfigError("prefit: port rates exceed the fitted total linewidth");
    }
    return out;
}

TuningModel tuning_from_fit(const FitResult& result, double omega_a0_hint, double alpha_k,
                            double coil_cal) {
    std::vector<CalibrationPoint> points;
    for (std::size_t k = 0; k < result.params_per_cut.size(); ++k) {
        if (k < result.cut_currents_ma.size() && result.cut_currents_ma[k]) {
            points.push_back({*result.cut_currents_ma[k], result.params_per_cut[k].microwave.omega});
        }
    }
    if (points.size() < 2) throw ConfigError("tuning from fit: at least two cuts need a current");
    return calibrate(points, omega_a0_hint, alpha_k, coil_cal);
}

namespace {

double interpolated_loss(const FitResult& result, double current) {
    std::vector<std::pair<double, double>> known;
    for (std::size_t k = 0; k < result.params_per_cut.size(); ++k) {
        if (k < result.cut_currents_ma.size() && result.cut_currents_ma[k]) {
            known.emplace_back(*result.cut_currents_ma[k], result.params_per_cut[k].microwave.linewidth);
        }
    }
    if (known.empty()) {
        double sum = 0.0;
        for (const auto& p : result.params_per_cut) sum += p.microwave.linewidth;
        return sum / static_cast<double>(result.params_per_cut.size());
    }
    std::sort(known.begin(), known.end());
    if (current <= known.front().first) return known.front().second;
    if (current >= known.back().first) return known.back().second;
    const auto upper = std::upper_bound(known.begin(), known.end(), current,
                                        [](double c, const auto& p) { return c < p.first; });
    const auto lower = std::prev(upper);
    const double span = upper->first - lower->first;
    if (span <= 0.0) return lower->second;
    const double w = (current - lower->first) / span;
    return (1.0 - w) * lower->second + w * upper->second;
}

}  // namespace

Reconstruction reconstruct_sweep(const FitResult& result, const TuningModel& tuning,
                                 std::span<const double> currents_ma,
                                 std::span<const double> freqs_hz) {
    if (result.params_per_cut.empty()) throw ConfigError("reconstruct: fit result has no cuts");
    require_valid(tuning);
    const SystemParams& shared = result.params_per_cut.front();

    Reconstruction out;
    out.grid.currents_ma.assign(currents_ma.begin(), currents_ma.end());
    out.grid.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
    out.grid.magnitude.reserve(currents_ma.size() * freqs_hz.size());
    for (double current : currents_ma) {
        SystemParams row_params = shared;
        row_params.microwave.linewidth = interpolated_loss(result, current);
        const double single[] = {current};
        const SweepGrid row = sweep(row_params, tuning, single, freqs_hz);
        out.grid.magnitude.insert(out.grid.magnitude.end(), row.magnitude.begin(), row.magnitude.end());
    }

    for (std::size_t n = 0; n < shared.mechanical.size(); ++n) {
        OverlayLine line;
        line.label = "mechanical_" + std::to_string(n + 1);
        line.currents_ma.assign(currents_ma.begin(), currents_ma.end());
        line.freqs_hz.assign(currents_ma.size(), angular_to_hz(shared.mechanical[n].omega));
        out.overlays.push_back(std::move(line));
    }
    OverlayLine mw;
    mw.label = "microwave";
    mw.currents_ma.assign(currents_ma.begin(), currents_ma.end());
    for (double current : currents_ma) mw.freqs_hz.push_back(angular_to_hz(frequency_at_current(tuning, current)));
    out.overlays.push_back(std::move(mw));
    return out;
}

}  // namespace hybridspec
