#include "catch_amalgamated.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/reference_sets.hpp"
#include "hybridspec/scattering.hpp"
#include "hybridspec/units.hpp"
#include "support/synthetic.hpp"

#include <cmath>
#include <limits>

using namespace hybridspec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double rel_err(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

SystemParams bare_cavity(double k1, double k2, double ki) {
    SystemParams p;
    p.cavity = {hz_to_angular(2.923e9), k1, k2, ki};
    p.microwave = {hz_to_angular(2.6e9), hz_to_angular(300e3)};
    return p;
}

SystemParams lossless(SystemParams p) {
    p.cavity.kappa_ci = 0.0;
    p.microwave.linewidth = 0.0;
    for (auto& m : p.mechanical) m.linewidth = 0.0;
    return p;
}

}  // namespace

TEST_CASE("critically coupled symmetric cavity reflects nothing on resonance") {
    const SystemParams p = bare_cavity(1e5, 1e5, 0.0);
    CHECK(std::abs(reflection(p, p.cavity.omega_c)) < 1e-15);
    CHECK_THAT(std::abs(transmission(p, p.cavity.omega_c)), WithinRel(1.0, 1e-15));
}

TEST_CASE("far-detuned cavity reflects everything") {
    const SystemParams p = bare_cavity(1e5, 2e5, 3e5);
    CHECK_THAT(std::abs(reflection(p, p.cavity.omega_c + 1e15) - 1.0), WithinAbs(0.0, 1e-9));
    CHECK_THAT(std::abs(reflection(p, p.cavity.omega_c - 1e15) - 1.0), WithinAbs(0.0, 1e-9));
}

TEST_CASE("bare cavity peak transmission") {
    const SystemParams p = bare_cavity(1e5, 3e5, 2e5);
    const double expected = std::sqrt(1e5 * 3e5) / (p.cavity.kappa_c() / 2.0);
    CHECK_THAT(std::abs(transmission(p, p.cavity.omega_c)), WithinRel(expected, 1e-14));
}

TEST_CASE("s21 applies the chain offset") {
    SystemParams p = reference::flip_chip(0);
    p.c_offset = {0.5, -0.25};
    const double w = hz_to_angular(2.55e9);
    CHECK(rel_err(s21(p, w), p.c_offset * transmission(p, w)) < 1e-15);
}

TEST_CASE("closed form matches the linear-solve oracle on the reference set") {
    const SystemParams p = reference::flip_chip(0);
    const double w = hz_to_angular(2.50e9);
    const Response closed = closed_form_response(p, w);
    const Response oracle = brute_force_response(p, w);
    CHECK(rel_err(closed.r, oracle.r) <= 1e-9);
    CHECK(rel_err(closed.t, oracle.t) <= 1e-9);
}

TEST_CASE("closed form matches the oracle for random systems") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> band(2.0e9, 3.0e9);
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        const SystemParams p = testing::random_system(rng, static_cast<std::size_t>(trial % 9));
        for (int k = 0; k < 10; ++k) {
            const double w = hz_to_angular(band(rng));
            const Response a = closed_form_response(p, w);
            const Response b = brute_force_response(p, w);
            worst = std::max({worst, rel_err(a.r, b.r), rel_err(a.t, b.t)});
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("decoupled system reduces to the bare cavity") {
    SystemParams p = reference::flip_chip(0);
    p.g_ac = 0.0;
    const SystemParams bare = bare_cavity(p.cavity.kappa_c1, p.cavity.kappa_c2, p.cavity.kappa_ci);
    for (double f : {2.5e9, 2.9e9, 2.923e9}) {
        const double w = hz_to_angular(f);
        CHECK(rel_err(brute_force_response(p, w).t, transmission(bare, w)) < 1e-12);
    }
}

TEST_CASE("lossless systems are unitary") {
    const SystemParams p = lossless(reference::flip_chip(1));
    const auto freqs = testing::uniform_grid(2.40e9, 3.00e9, 60e3);
    double worst = 0.0;
    for (double f : freqs) {
        const Response r = closed_form_response(p, hz_to_angular(f));
        worst = std::max(worst, std::abs(std::norm(r.r) + std::norm(r.t) - 1.0));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("responses are passive and reciprocal") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> band(2.0e9, 3.0e9);
    for (int trial = 0; trial < 100; ++trial) {
        SystemParams p = testing::random_system(rng, static_cast<std::size_t>(trial % 6));
        SystemParams swapped = p;
        std::swap(swapped.cavity.kappa_c1, swapped.cavity.kappa_c2);
        const double bound = p.cavity.kappa_c1 * p.cavity.kappa_c2 / std::pow(p.cavity.kappa_c() / 2.0, 2);
        for (int k = 0; k < 10; ++k) {
            const double w = hz_to_angular(band(rng));
            const Response r = closed_form_response(p, w);
            CHECK(std::abs(r.r) <= 1.0 + 1e-12);
            CHECK(std::norm(r.t) <= bound + 1e-12);
            CHECK_THAT(std::abs(transmission(swapped, w)), WithinRel(std::abs(r.t), 1e-12));
        }
    }
}

TEST_CASE("exact lossless pole is reported, not regularized") {
    SystemParams p;
    p.cavity = {hz_to_angular(2.9e9), 0.0, 0.0, 0.0};
    p.microwave = {hz_to_angular(2.6e9), 0.0};
    CHECK_THROWS_AS(transmission(p, p.cavity.omega_c), NumericalError);
    CHECK_THROWS_AS(brute_force_response(p, p.cavity.omega_c), NumericalError);
}

TEST_CASE("uncoupled eigenmodes are the bare modes") {
    SystemParams p = reference::flip_chip(0);
    p.g_ac = 0.0;
    std::fill(p.g_ab.begin(), p.g_ab.end(), 0.0);
    const auto modes = hybridized_modes(p);
    REQUIRE(modes.size() == 7);
    std::vector<std::pair<double, double>> bare{{p.cavity.omega_c, p.cavity.kappa_c()},
                                                {p.microwave.omega, p.microwave.linewidth}};
    for (const auto& m : p.mechanical) bare.emplace_back(m.omega, m.linewidth);
    std::sort(bare.begin(), bare.end());
    for (std::size_t k = 0; k < modes.size(); ++k) {
        CHECK_THAT(modes[k].omega, WithinRel(bare[k].first, 1e-14));
        CHECK_THAT(modes[k].decay, WithinRel(bare[k].second, 1e-6));
    }
}

TEST_CASE("degenerate lossless pair splits by exactly 2g") {
    SystemParams p;
    p.cavity = {hz_to_angular(2.923e9), 0.0, 0.0, 0.0};
    p.microwave = {hz_to_angular(2.55e9), 0.0};
    p.mechanical = {{hz_to_angular(2.55e9), 0.0}};
    const double g = hz_to_angular(14.364e6);
    p.g_ab = {g};
    const auto modes = hybridized_modes(p);
    REQUIRE(modes.size() == 3);
    CHECK_THAT(modes[1].omega - modes[0].omega, WithinRel(2.0 * g, 1e-9));
    CHECK_THAT(modes[0].omega, WithinRel(p.microwave.omega - g, 1e-12));
}

TEST_CASE("eigenmodes are roots of the characteristic matrix") {
    std::mt19937_64 rng(5);
    const SystemParams p = testing::random_system(rng, 3);
    const ModeMatrix m = build_mode_matrix(p);
    const auto modes = hybridized_modes(p);
    REQUIRE(modes.size() == 5);
    for (std::size_t k = 1; k < modes.size(); ++k) CHECK(modes[k].omega >= modes[k - 1].omega);
    const double scale = m.matrix.norm();
    for (const auto& mode : modes) {
        const Complex lambda{-mode.decay / 2.0, -mode.omega};
        Eigen::MatrixXcd shifted = m.matrix;
        shifted.diagonal().array() -= lambda;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
        CHECK(svd.singularValues().minCoeff() / scale < 1e-12);
    }
}

TEST_CASE("reference spectrum peaks sit on hybrid modes") {
    const SystemParams p = reference::flip_chip(0);
    const auto modes = hybridized_modes(p);
    double min_width = std::numeric_limits<double>::infinity();
    for (const auto& m : modes) min_width = std::min(min_width, angular_to_hz(m.decay));
    const auto freqs = testing::uniform_grid(2.45e9, 2.65e9, min_width / 10.0);
    const SpectrumTrace trace = simulate_s21(p, freqs);
    const auto peaks = peak_frequencies(freqs, trace.magnitudes());
    CHECK(peaks.size() >= 5);
    for (double f : peaks) {
        bool near = false;
        for (const auto& m : modes) {
            near = near || std::abs(f - angular_to_hz(m.omega)) <= angular_to_hz(m.decay);
        }
        CHECK(near);
    }
}

TEST_CASE("sweep rows equal pointwise evaluations") {
    const SystemParams p = reference::flip_chip(0);
    TuningModel t;
    t.omega_a0 = hz_to_angular(2.65e9);
    t.i_star_eff = 300.0;
    const std::vector<double> currents{-100.0, 0.0, 60.0};
    const auto freqs = testing::uniform_grid(2.50e9, 2.60e9, 5e6);
    const SweepGrid grid = sweep(p, t, currents, freqs);
    REQUIRE(grid.rows() == 3);
    REQUIRE(grid.cols() == freqs.size());
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        const SystemParams q = with_microwave_frequency(p, frequency_at_current(t, currents[r]));
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            CHECK(grid.at(r, c) == std::abs(s21(q, hz_to_angular(freqs[c]))));
        }
    }
}

TEST_CASE("untuned sweep has identical rows") {
    const SystemParams p = reference::flip_chip(0);
    TuningModel t;
    t.omega_a0 = p.microwave.omega;
    t.i_star_eff = std::numeric_limits<double>::infinity();
    const std::vector<double> currents{-50.0, 0.0, 80.0};
    const auto freqs = testing::uniform_grid(2.50e9, 2.60e9, 1e6);
    const SweepGrid grid = sweep(p, t, currents, freqs);
    for (std::size_t r = 1; r < grid.rows(); ++r) {
        CHECK(std::equal(grid.row(r).begin(), grid.row(r).end(), grid.row(0).begin()));
    }
}

TEST_CASE("peak interpolation recovers a parabola vertex") {
    const std::vector<double> x{0.0, 1.0, 3.0, 4.0};
    std::vector<double> y;
    for (double v : x) y.push_back(10.0 - (v - 1.4) * (v - 1.4));
    const auto peaks = peak_frequencies(x, y);
    REQUIRE(peaks.size() == 1);
    CHECK_THAT(peaks[0], WithinAbs(1.4, 1e-12));
    CHECK(local_maxima(std::vector<double>{1.0, 1.0, 1.0}).empty());
}

TEST_CASE("splitting extraction finds the narrowest straddling pair") {
    SweepGrid grid;
    grid.currents_ma = {0.0, 1.0, 2.0};
    grid.freqs_hz = testing::uniform_grid(0.0, 100.0, 1.0);
    const std::vector<double> gaps{30.0, 10.0, 20.0};
    for (double gap : gaps) {
        for (double f : grid.freqs_hz) {
            grid.magnitude.push_back(1.0 / (1.0 + std::pow(f - (50.0 - gap / 2.0), 2)) +
                                     1.0 / (1.0 + std::pow(f - (50.0 + gap / 2.0), 2)));
        }
    }
    const std::vector<double> bare{50.0, 99.5};
    const auto s = extract_splittings(grid, bare);
    REQUIRE(s.size() == 2);
    CHECK(s[0].found);
    CHECK(s[0].current_ma == 1.0);
    CHECK_THAT(s[0].min_splitting_hz, WithinAbs(10.0, 0.5));
    CHECK_FALSE(s[1].found);
}

TEST_CASE("trace validation") {
    SpectrumTrace t{{1.0, 2.0}, {Complex{1.0, 0.0}}};
    CHECK_THROWS_AS(require_valid(t), ConfigError);
    t = SpectrumTrace{{2.0, 1.0}, {Complex{}, Complex{}}};
    CHECK_THROWS_AS(require_valid(t), ConfigError);
}
