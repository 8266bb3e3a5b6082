#include "hybridspec/tuning.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/units.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace hybridspec {

void require_valid(const KineticInductanceParams& p) {
    const double fields[] = {p.london_depth, p.length, p.width, p.thickness, p.i_star};
    for (double v : fields) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw ConfigError("kinetic inductance geometry and i_star must be positive");
        }
    }
}

void require_valid(const TuningModel& m) {
    if (!std::isfinite(m.omega_a0) || m.omega_a0 <= 0.0) {
        throw ConfigError("tuning model: omega_a0 must be positive");
    }
    if (!(m.alpha_k > 0.0 && m.alpha_k <= 1.0)) {
        throw ConfigError("tuning model: alpha_k must lie in (0, 1]");
    }
    // i_star_eff = +inf is the untuned limit and is allowed.
    if (std::isnan(m.i_star_eff) || m.i_star_eff <= 0.0) {
        throw ConfigError("tuning model: i_star_eff must be positive");
    }
    if (!std::isfinite(m.coil_cal) || m.coil_cal <= 0.0) {
        throw ConfigError("tuning model: coil_cal must be positive");
    }
}

double kinetic_inductance(const KineticInductanceParams& p, double current) {
    require_valid(p);
    const double l0 = kMu0 * p.london_depth * p.london_depth * p.length / (p.width * p.thickness);
    const double x = current / p.i_star;
    return l0 * (1.0 + x * x);
}

double frequency_at_current(const TuningModel& m, double current_ma) {
    const double x = current_ma / m.i_star_eff;
    return m.omega_a0 / std::sqrt(1.0 + m.alpha_k * x * x);
}

double field_at_current(const TuningModel& m, double current_ma) {
    return m.coil_cal * current_ma;
}

namespace {

// omega(I) = w0 (1 + c I^2)^(-1/2); returns the residual vector and Jacobian
// with respect to (w0, c).
void model_residuals(std::span<const CalibrationPoint> points, double w0, double c,
                     Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const auto n = static_cast<Eigen::Index>(points.size());
    r.resize(n);
    jac.resize(n, 2);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double u = points[k].current * points[k].current;
        const double base = 1.0 + c * u;
        const double s = 1.0 / std::sqrt(base);
        r(k) = w0 * s - points[k].omega;
        jac(k, 0) = s;
        jac(k, 1) = -0.5 * w0 * u * s / base;
    }
}

}  // namespace

TuningModel calibrate(std::span<const CalibrationPoint> points, double omega_a0_hint,
                      double alpha_k, double coil_cal) {
    std::vector<double> magnitudes;
    for (const auto& p : points) {
        if (!std::isfinite(p.current) || !std::isfinite(p.omega) || p.omega <= 0.0) {
            throw ConfigError("calibration point must have finite current and positive frequency");
        }
        magnitudes.push_back(std::abs(p.current));
    }
    std::sort(magnitudes.begin(), magnitudes.end());
    magnitudes.erase(std::unique(magnitudes.begin(), magnitudes.end()), magnitudes.end());
    if (magnitudes.size() < 2) {
        throw ConfigError("degenerate calibration input: need two distinct |I| values");
    }
    if (!(alpha_k > 0.0 && alpha_k <= 1.0)) {
        throw ConfigError("calibration: alpha_k must lie in (0, 1]");
    }

    // 1/omega^2 = 1/w0^2 + (c/w0^2) I^2 is linear in I^2. Rows are scaled so
    // that the linear residual approximates the frequency residual.
    const auto n = static_cast<Eigen::Index>(points.size());
    const double u_scale = magnitudes.back() * magnitudes.back();
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    double omega_ref = 0.0;
    for (const auto& p : points) omega_ref = std::max(omega_ref, p.omega);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double w = points[k].omega / omega_ref;
        const double weight = 0.5 * w * w * w;
        a(k, 0) = weight;
        a(k, 1) = weight * points[k].current * points[k].current / u_scale;
        y(k) = weight / (w * w);
    }
    const Eigen::Vector2d lin = a.colPivHouseholderQr().solve(y);

    double w0 = omega_a0_hint;
    double c = 0.0;
    if (lin(0) > 0.0 && std::isfinite(lin(0))) {
        w0 = omega_ref / std::sqrt(lin(0));
        c = lin(1) / lin(0) / u_scale;
    }
    if (!std::isfinite(w0) || w0 <= 0.0) {
        throw ConfigError("calibration: omega_a0 hint must be positive");
    }

    // Gauss-Newton on the frequency residual, with step halving.
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    model_residuals(points, w0, c, r, jac);
    double sse = r.squaredNorm();
    bool converged = false;
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        // Column scaling keeps the normal equations well conditioned.
        const Eigen::Vector2d scale(w0, 1.0 / u_scale);
        const Eigen::MatrixXd js = jac * scale.asDiagonal();
        const Eigen::Vector2d step = -(js.colPivHouseholderQr().solve(r));
        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half, t *= 0.5) {
            const double w0_try = w0 + t * step(0) * scale(0);
            const double c_try = c + t * step(1) * scale(1);
            if (w0_try <= 0.0 || 1.0 + c_try * u_scale <= 0.0) continue;
            Eigen::VectorXd r_try;
            Eigen::MatrixXd j_try;
            model_residuals(points, w0_try, c_try, r_try, j_try);
            const double sse_try = r_try.squaredNorm();
            if (sse_try <= sse) {
                const double rel = std::abs(w0_try - w0) / w0 +
                                   std::abs(c_try - c) * u_scale;
                w0 = w0_try;
                c = c_try;
                r = std::move(r_try);
                jac = std::move(j_try);
                sse = sse_try;
                accepted = true;
                converged = rel < 1e-15;
                break;
            }
        }
        if (!accepted) break;
    }

    if (!(c > 0.0) || !std::isfinite(c)) {
        throw NumericalError("calibration produced non-positive curvature; "
                             "frequency must decrease with |I|");
    }
    TuningModel model;
    model.omega_a0 = w0;
    model.alpha_k = alpha_k;
    model.i_star_eff = std::sqrt(alpha_k / c);
    model.coil_cal = coil_cal;
    require_valid(model);
    return model;
}

}  // namespace hybridspec
