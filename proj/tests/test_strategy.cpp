#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rum/power.hpp"
#include "rum/strategy.hpp"
#include "support.hpp"

using namespace rum;

namespace {

template <class T>
bool vanishes_outside(const Field<T>& h, const SpatialGrid& s, Interval omega) {
    for (std::size_t j = 0; j < h.time_nodes(); ++j) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!omega.contains(s.x(i)) && h(j, i) != T{}) return false;
        }
    }
    return true;
}

template <class T>
bool endpoints_zero(const Field<T>& f) {
    for (std::size_t i = 0; i < f.space_nodes(); ++i) {
        if (f(0, i) != T{} || f(f.time_nodes() - 1, i) != T{}) return false;
    }
    return true;
}

double field_rel(const RealField& a, const RealField& b) { return rum::testing::rel_diff(a.values(), b.values()); }

PowerSystemConfig scaled_v(double c) {
    auto cfg = PowerSystemConfig::defaults(3);
    cfg.u0.assign(cfg.u0.size(), 0.0);
    for (auto& x : cfg.v0) x *= c;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    auto cfg = PowerSystemConfig::defaults(3);
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.power = 1;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("power"), ConfigError);
    bad = cfg;
    bad.v0.pop_back();
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("v0"), ConfigError);
    CHECK_THROWS_WITH_AS(TimeGrid(1.0, 255), doctest::Contains("nt"), ConfigError);
    bad = cfg;
    bad.omega1 = {0.25, 0.6};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(run_odd_strategy(PowerSystemConfig::defaults(2)), ConfigError);
    CHECK_THROWS_AS(run_even_complex(PowerSystemConfig::defaults(3)), ConfigError);
}

TEST_CASE("phase 1") {
    auto cfg = PowerSystemConfig::defaults(3);
    SUBCASE("zero u0 gives free v") {
        cfg.u0.assign(cfg.u0.size(), 0.0);
        const auto p = phase1_steer_u(cfg);
        CHECK(max_abs(p.control) == 0.0);
        CHECK(max_abs(p.u) == 0.0);
        const auto free = forward_solve(cfg.v_op, std::span<const double>(cfg.v0), RealField(p.grids), p.grids);
        CHECK(p.v.values() == free.values());
        CHECK(p.flags.empty());
    }
    SUBCASE("steers u to zero") {
        const auto p = phase1_steer_u(cfg);
        CHECK(p.rum_converged);
        CHECK(p.flags.empty());
        CHECK(p.terminal <= 1e-6 * max_abs(std::span<const double>(cfg.u0)));
        CHECK(vanishes_outside(p.control, p.grids.space, cfg.omega));
        CHECK(p.grids.time.end() == doctest::Approx(0.5));
    }
    SUBCASE("v(T/2) scales like u0^n") {
        cfg.v0.assign(cfg.v0.size(), 0.0);
        const auto a = phase1_steer_u(cfg);
        for (auto& x : cfg.u0) x *= 2.0;
        const auto b = phase1_steer_u(cfg);
        const std::size_t half = a.v.time_nodes() - 1;
        const double ca = max_abs(a.v.row(half));
        const double cb = max_abs(b.v.row(half)) / 8.0;
        MESSAGE("||v1(T/2)|| / ||u0||^3 = " << ca);
        CHECK(ca > 0.0);
        CHECK(std::isfinite(ca));
        CHECK(cb == doctest::Approx(ca).epsilon(1e-12));
    }
    SUBCASE("loose penalty is flagged") {
        cfg.eps1 = 1.0;
        CHECK_FALSE(phase1_steer_u(cfg).flags.empty());
    }
}

TEST_CASE("phase 2") {
    auto cfg = PowerSystemConfig::defaults(3);
    const std::size_t nx = cfg.grids.space.size();
    const std::vector<double> zero(nx, 0.0);
    SUBCASE("zero midpoint data") {
        const auto p = phase2_odd(cfg, zero, zero);
        CHECK(max_abs(p.coupling_source) == 0.0);
        CHECK(max_abs(p.constructed) == 0.0);
        CHECK(max_abs(p.control) == 0.0);
    }
    SUBCASE("construction") {
        const auto p1 = phase1_steer_u(cfg);
        const auto row = p1.v.row(p1.v.time_nodes() - 1);
        const std::vector<double> vm(row.begin(), row.end());
        const auto p = phase2_odd(cfg, vm, zero);
        CHECK(p.rum_converged);
        // u2^3 = H bit for bit
        for (std::size_t k = 0; k < p.coupling_source.size(); ++k) {
            CHECK(ipow(p.constructed.values()[k], 3) == p.coupling_source.values()[k]);
        }
        CHECK(endpoints_zero(p.constructed));
        CHECK(vanishes_outside(p.control, p.grids.space, cfg.omega));
        CHECK(p.grids.time.start() == doctest::Approx(0.5));
        // with zero residual the u-state is the constructed u2
        CHECK(field_rel(p.u, p.constructed) <= 1e-12);
    }
    SUBCASE("terminal v tracks the penalty") {
        const auto p1 = phase1_steer_u(cfg);
        const auto row = p1.v.row(p1.v.time_nodes() - 1);
        const std::vector<double> vm(row.begin(), row.end());
        const double q = 4.0 / 3.0;
        const double vq = space_lp_norm(std::span<const double>(vm), cfg.grids.space, q);
        for (double eps : {1e-2, 1e-4, 1e-6}) {
            cfg.eps2 = eps;
            const auto p = phase2_odd(cfg, vm, zero);
            const double vt = space_lp_norm(p.v.row(p.v.time_nodes() - 1), cfg.grids.space, q);
            const double c = std::pow(vt / vq, q) / eps;
            MESSAGE("eps " << eps << "  C = " << c);
            CHECK(c <= 1e-3);
        }
    }
    CHECK_THROWS_AS(phase2_odd(PowerSystemConfig::defaults(2), zero, zero), ConfigError);
}

TEST_CASE("odd pipeline") {
    SUBCASE("zero data") {
        auto cfg = PowerSystemConfig::defaults(3);
        cfg.u0.assign(cfg.u0.size(), 0.0);
        cfg.v0.assign(cfg.v0.size(), 0.0);
        const auto r = run_odd_strategy(cfg);
        CHECK(max_abs(r.control) == 0.0);
        CHECK(max_abs(r.u) == 0.0);
        CHECK(max_abs(r.v) == 0.0);
        for (const auto& row : scaling_certificate(r, {2.0, 4.0})) CHECK(row.ratio == 0.0);
    }
    SUBCASE("default data") {
        const auto cfg = PowerSystemConfig::defaults(3);
        const auto r = run_odd_strategy(cfg);
        CHECK(r.ok());
        const double data = std::max(max_abs(std::span<const double>(cfg.u0)), max_abs(std::span<const double>(cfg.v0)));
        CHECK(r.final_residual() <= 1e-3 * data);
        CHECK(vanishes_outside(r.control, cfg.grids.space, cfg.omega));
        CHECK(endpoints_zero(r.phase2.constructed));
        CHECK(r.coupling_identity_error == 0.0);
        CHECK(r.reconstruction_error <= 1e-12);
        CHECK(r.resimulation_error <= 1e-10);
        const std::size_t half = cfg.grids.time.steps() / 2;
        for (std::size_t i = 0; i < cfg.grids.space.size(); ++i) {
            CHECK(r.phase2.u(0, i) == r.phase1.u(half, i));
            CHECK(r.phase2.v(0, i) == r.phase1.v(half, i));
        }
        CHECK(r.phase1.norm_2 > 0.0);
        CHECK(r.phase2.norm_inf >= r.phase2.norm_8);
    }
    SUBCASE("homogeneity in v0") {
        const auto a = run_odd_strategy(scaled_v(1.0));
        const auto b = run_odd_strategy(scaled_v(8.0));
        auto h = a.phase2.coupling_source;
        h *= 8.0;
        CHECK(field_rel(b.phase2.coupling_source, h) <= 1e-6);
        auto u = a.phase2.constructed;
        u *= 2.0;
        CHECK(field_rel(b.phase2.constructed, u) <= 1e-6);
        auto c = a.phase2.control;
        c *= 2.0;
        CHECK(field_rel(b.phase2.control, c) <= 1e-6);
    }
}

TEST_CASE("scaling certificate") {
    SUBCASE("homogeneous family") {
        std::vector<std::vector<ScalingRow>> t;
        for (double c : {1.0, 8.0, 64.0}) t.push_back(scaling_certificate(run_odd_strategy(scaled_v(c)), {2.0, 4.0}));
        for (std::size_t n = 1; n < t.size(); ++n) {
            for (std::size_t m = 0; m < 2; ++m) CHECK(t[n][m].ratio == doctest::Approx(t[0][m].ratio).epsilon(1e-6));
        }
    }
    SUBCASE("mixed family") {
        double lo = 1e300, hi = 0.0;
        for (double c : {0.1, 1.0, 10.0, 100.0}) {
            auto cfg = PowerSystemConfig::defaults(3);
            for (auto& x : cfg.u0) x *= c;
            const auto r = run_odd_strategy(cfg);
            CHECK(r.ok());
            const double ratio = scaling_certificate(r, {2.0})[0].ratio;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        MESSAGE("L2 ratio spread " << hi / lo);
        CHECK(hi <= 3.0 * lo);
    }
}

TEST_CASE("general power") {
    CHECK(phi_root(-4.0, 2) == -2.0);
    CHECK(phi_power(-2.0, 2) == -4.0);
    SUBCASE("n = 3 matches the odd pipeline") {
        const auto cfg = PowerSystemConfig::defaults(3);
        const auto a = run_odd_strategy(cfg);
        const auto b = run_general_power(cfg);
        CHECK(a.control.values() == b.control.values());
        CHECK(a.u.values() == b.u.values());
        CHECK(a.v.values() == b.v.values());
    }
    SUBCASE("n = 2") {
        const auto cfg = PowerSystemConfig::defaults(2);
        const auto r = run_general_power(cfg);
        CHECK(r.ok());
        CHECK(r.final_v <= 1e-3);
        CHECK(r.final_residual() <= 1e-3);
        const auto& u2 = r.phase2.constructed.values();
        CHECK(*std::min_element(u2.begin(), u2.end()) < 0.0);
        CHECK(*std::max_element(u2.begin(), u2.end()) > 0.0);
        for (std::size_t k = 0; k < u2.size(); ++k) CHECK(phi_power(u2[k], 2) == r.phase2.coupling_source.values()[k]);
    }
}

TEST_CASE("complex even construction") {
    const Complex u = complex_even_root(-16.0, 2);
    CHECK(std::abs(u - Complex(0.0, 4.0)) <= 1e-14);
    CHECK(std::abs(u * u - Complex(-16.0, 0.0)) <= 1e-13);
    const Complex three = complex_even_root(9.0, 2);
    CHECK(three.imag() == 0.0);
    CHECK(three.real() == doctest::Approx(3.0).epsilon(1e-15));
    const Complex w = complex_even_root(-3.0, 4);
    CHECK(std::abs(w * w * w * w + 3.0) <= 1e-14);
    CHECK_THROWS_AS(alpha_square(1.0, 3), DomainError);

    const auto cfg = PowerSystemConfig::defaults(2);
    const auto r = run_even_complex(cfg);
    CHECK(r.ok());
    CHECK(r.coupling_identity_error <= 1e-10);
    CHECK(r.final_v <= 1e-3);
    CHECK(vanishes_outside(r.control, cfg.grids.space, cfg.omega));
    for (std::size_t k = 0; k < r.phase2.constructed.size(); ++k) {
        if (r.phase2.coupling_source.values()[k] > 0.0) CHECK(r.phase2.constructed.values()[k].imag() == 0.0);
    }
}

TEST_CASE("even obstruction") {
    auto cfg = PowerSystemConfig::defaults(2);
    cfg.u0.assign(cfg.u0.size(), 0.0);
    cfg.v0 = rum::testing::sine_mode(cfg.grids.space);
    const auto rep = demo_even_obstruction(cfg, 50, 7);
    CHECK(rep.controls_tested == 52);
    CHECK(rep.violations == 0);
    CHECK(rep.min_gap >= 0.0);
    CHECK(rep.zero_control_exact);
    CHECK(rep.free_min > 0.0);
    CHECK(std::abs(rep.free_midpoint - std::exp(-std::numbers::pi * std::numbers::pi)) <= 2e-4);

    auto odd = cfg;
    odd.power = 3;
    CHECK_THROWS_AS(demo_even_obstruction(odd), ConfigError);
    auto neg = cfg;
    neg.v0[10] = -1.0;
    CHECK_THROWS_AS(demo_even_obstruction(neg), ConfigError);
    auto cn = cfg;
    cn.v_op.scheme = Scheme::crank_nicolson;
    CHECK_THROWS_AS(demo_even_obstruction(cn), ConfigError);
}
