#include "support/circuits.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <string>

namespace hybridspec::testing {

CircuitNetwork random_network(std::mt19937_64& rng, int nodes, int extra) {
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> decade(-1.0, 1.0);
    auto value = [&](ElementKind k) {
        const double base = k == ElementKind::Resistor ? 50.0 : k == ElementKind::Inductor ? 1e-9 : 1e-12;
        return base * std::pow(10.0, decade(rng));
    };
    auto name = [](int n) { return n == 0 ? std::string("gnd") : "n" + std::to_string(n); };
    CircuitNetwork net;
    net.probe = "n1";
    int id = 0;
    for (int n = 1; n <= nodes; ++n) {
        std::uniform_int_distribution<int> parent(0, n - 1);
        const auto k = static_cast<ElementKind>(kind(rng));
        net.elements.push_back({"e" + std::to_string(id++), k, value(k), name(n), name(parent(rng))});
    }
    std::uniform_int_distribution<int> any(0, nodes);
    while (extra > 0) {
        const int a = any(rng);
        const int b = any(rng);
        if (a == b) continue;
        const auto k = static_cast<ElementKind>(kind(rng));
        net.elements.push_back({"e" + std::to_string(id++), k, value(k), name(a), name(b)});
        --extra;
    }
    return net;
}

CircuitNetwork two_tanks(double l, double c, double cc, double trim) {
    CircuitNetwork net;
    net.probe = "a";
    net.elements = {{"L1", ElementKind::Inductor, l, "a", "gnd"},
                    {"C1", ElementKind::Capacitor, c, "a", "gnd"},
                    {"R1", ElementKind::Resistor, 1e9, "a", "gnd"},
                    {"L2", ElementKind::Inductor, l * trim, "b", "gnd"},
                    {"C2", ElementKind::Capacitor, c, "b", "gnd"},
                    {"R2", ElementKind::Resistor, 1e9, "b", "gnd"},
                    {"Cc", ElementKind::Capacitor, cc, "a", "b"}};
    return net;
}

std::pair<double, double> two_tank_modes(double l, double c, double cc, double trim) {
    Eigen::Matrix2d cap;
    cap << c + cc, -cc, -cc, c + cc;
    const Eigen::Matrix2d gamma = Eigen::Vector2d(1.0 / l, 1.0 / (l * trim)).asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(gamma, cap);
    const Eigen::Vector2d w2 = es.eigenvalues();
    const double two_pi = 2.0 * std::numbers::pi;
    return {std::sqrt(w2(0)) / two_pi, std::sqrt(w2(1)) / two_pi};
}

double two_tank_half_gap(double l, double c, double cc) {
    auto gap = [&](double t) {
        const auto [lo, hi] = two_tank_modes(l, c, cc, t);
        return hi - lo;
    };
    // Golden-section search over the trim factor.
    double a = 0.5;
    double b = 2.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int k = 0; k < 200; ++k) {
        const double x1 = b - phi * (b - a);
        const double x2 = a + phi * (b - a);
        if (gap(x1) < gap(x2)) b = x2; else a = x1;
    }
    return gap((a + b) / 2.0) / 2.0;
}

}  // namespace hybridspec::testing
