#include "hybridspec/model.hpp"

#include "hybridspec/errors.hpp"

#include <cmath>

namespace hybridspec {
namespace {

void check_frequency(std::vector<std::string>& out, double value, const std::string& what) {
    if (!std::isfinite(value)) {
        out.push_back("non-finite value: " + what);
    } else if (value <= 0.0) {
        out.push_back("non-positive frequency: " + what);
    }
}

void check_rate(std::vector<std::string>& out, double value, const std::string& what) {
    if (!std::isfinite(value)) {
        out.push_back("non-finite value: " + what);
    } else if (value < 0.0) {
        out.push_back("negative rate: " + what);
    }
}

}  // namespace

ValidationReport validate(const SystemParams& params) {
    ValidationReport report;
    auto& v = report.violations;

    check_frequency(v, params.cavity.omega_c, "cavity omega_c");
    check_rate(v, params.cavity.kappa_c1, "kappa_c1");
    check_rate(v, params.cavity.kappa_c2, "kappa_c2");
    check_rate(v, params.cavity.kappa_ci, "kappa_ci");

    check_frequency(v, params.microwave.omega, "microwave omega");
    check_rate(v, params.microwave.linewidth, "microwave linewidth");

    for (std::size_t n = 0; n < params.mechanical.size(); ++n) {
        const auto idx = std::to_string(n);
        check_frequency(v, params.mechanical[n].omega, "mechanical[" + idx + "] omega");
        check_rate(v, params.mechanical[n].linewidth, "mechanical[" + idx + "] linewidth");
    }

    if (params.g_ab.size() != params.mechanical.size()) {
        v.push_back("coupling list length mismatch: " + std::to_string(params.g_ab.size()) +
                    " couplings for " + std::to_string(params.mechanical.size()) +
                    " mechanical modes");
    }
    check_rate(v, params.g_ac, "g_ac");
    for (std::size_t n = 0; n < params.g_ab.size(); ++n) {
        check_rate(v, params.g_ab[n], "g_ab[" + std::to_string(n) + "]");
    }

    const double offset = std::abs(params.c_offset);
    if (!std::isfinite(offset)) {
        v.push_back("non-finite value: c_offset");
    } else if (offset <= 0.0) {
        v.push_back("c_offset magnitude must be positive");
    }
    return report;
}

void require_valid(const SystemParams& params) {
    const auto report = validate(params);
    if (!report.ok()) {
        throw ConfigError("invalid system parameters: " + report.violations.front());
    }
}

ModeMatrix build_mode_matrix(const SystemParams& params) {
    require_valid(params);

    const auto dim = static_cast<Eigen::Index>(params.mode_count());
    const Complex i{0.0, 1.0};

    ModeMatrix out;
    out.dimension = dim;
    out.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    out.drive = Eigen::VectorXcd::Zero(dim);

    out.matrix(kCavityMode, kCavityMode) =
        -i * params.cavity.omega_c - params.cavity.kappa_c() / 2.0;
    out.matrix(kMicrowaveMode, kMicrowaveMode) =
        -i * params.microwave.omega - params.microwave.linewidth / 2.0;
    out.matrix(kCavityMode, kMicrowaveMode) = -i * params.g_ac;
    out.matrix(kMicrowaveMode, kCavityMode) = -i * params.g_ac;

    for (std::size_t n = 0; n < params.mechanical.size(); ++n) {
        const auto k = mechanical_mode(n);
        const auto& mode = params.mechanical[n];
        out.matrix(k, k) = -i * mode.omega - mode.linewidth / 2.0;
        out.matrix(kMicrowaveMode, k) = -i * params.g_ab[n];
        out.matrix(k, kMicrowaveMode) = -i * params.g_ab[n];
    }

    out.drive(kCavityMode) = std::sqrt(params.cavity.kappa_c1);
    return out;
}

SystemParams with_microwave_frequency(SystemParams params, double omega_a) {
    params.microwave.omega = omega_a;
    return params;
}

}  // namespace hybridspec
