#include <doctest.h>

#include <cmath>
#include <random>

#include "rum/carleman.hpp"
#include "rum/errors.hpp"
#include "support.hpp"

using namespace rum;
using rum::testing::unit_grids;

TEST_CASE("exponent table") {
    auto t = exponent_table(1, 1);
    CHECK(t.n0 == 0);
    CHECK(t.m == 1);
    CHECK(t.p[0] == 2.0);
    CHECK(t.p[1] == doctest::Approx(6.0));

    t = exponent_table(3, 1);
    CHECK(t.n0 == 1);
    CHECK(t.m == 5);
    CHECK(t.p[1] == doctest::Approx(10.0 / 3.0));
    CHECK(t.p[2] == doctest::Approx(10.0));

    t = exponent_table(1, 2);
    CHECK(t.n0 == 1);
    CHECK(t.m == 5);
    CHECK(std::isinf(t.p[2]));

    for (int n = 1; n <= 4; ++n) {
        for (int k = 1; k <= 5; ++k) {
            const auto e = exponent_table(n, k);
            CHECK(e.m == 4 * e.n0 + 1);
            const double target = 2.0 * k + 2.0;
            CHECK(e.p[e.n0 + 1] > target);
            CHECK(target >= e.p[e.n0]);
            for (std::size_t i = 1; i < e.p.size(); ++i) CHECK(e.p[i] > e.p[i - 1]);
        }
    }
    CHECK_THROWS_AS(exponent_table(0, 1), ConfigError);
}

TEST_CASE("weight system shape") {
    const auto g = unit_grids();
    const auto ws = build_weights(g, {0.4, 0.6}, 1, {});
    for (double r : ws.rho) CHECK(r > 0.0);
    CHECK(ws.rho_boundary > 0.0);
    CHECK(ws.rho_boundary == doctest::Approx(std::exp(0.2) - 1.0));
    // symmetric omega1: the peak of psi (minimum of rho) sits at x = 0.5, node 31
    std::size_t arg = 0;
    for (std::size_t i = 0; i < ws.rho.size(); ++i) {
        if (ws.rho[i] < ws.rho[arg]) arg = i;
    }
    CHECK(arg == 31);
    CHECK(ws.psi[31] == doctest::Approx(0.1));

    // off-center omega1: maximum still at its center
    const auto off = build_weights(unit_grids(99), {0.3, 0.5}, 1, {});
    double best = -1.0, xbest = 0.0;
    for (std::size_t i = 0; i < off.psi.size(); ++i) {
        if (off.psi[i] > best) {
            best = off.psi[i];
            xbest = off.grids.space.x(i);
        }
    }
    CHECK(std::abs(xbest - 0.4) <= off.grids.space.dx());
    // psi is monotone away from the peak, so its slope does not vanish outside omega1
    for (std::size_t i = 0; i + 1 < off.psi.size(); ++i) {
        const double x = off.grids.space.x(i);
        if (x + off.grids.space.dx() < 0.3) CHECK(off.psi[i + 1] > off.psi[i]);
        if (x > 0.5) CHECK(off.psi[i + 1] < off.psi[i]);
    }

    CHECK(std::isinf(ws.eta.front()));
    CHECK(std::isinf(ws.eta.back()));
    CHECK(ws.eta[64] == doctest::Approx(4.0));
}

TEST_CASE("log weights") {
    const auto g = unit_grids();
    const auto ws = build_weights(g, {0.4, 0.6}, 1, {2.0, 1.0, 0.2});
    const std::size_t mid = 64;
    for (std::size_t i = 0; i < ws.rho.size(); ++i) {
        CHECK(ws.log_weight(mid, i, 1.0, 0.0) == doctest::Approx(-2.0 * ws.rho[i] * 4.0));
    }
    // spot value s=2, T=1, rho=3 -> -24
    WeightSystem spot = ws;
    spot.rho.assign(spot.rho.size(), 3.0);
    CHECK(spot.log_weight(mid, 5, 1.0, 0.0) == doctest::Approx(-24.0));

    const auto f = ws.log_weight_field(1.0, 3.0);
    for (std::size_t i = 0; i < ws.rho.size(); ++i) {
        CHECK(clamped_exp(f(0, i)) == 0.0);
        CHECK(clamped_exp(f(g.time.steps(), i)) == 0.0);
    }
}

TEST_CASE("weight construction errors") {
    const auto g = unit_grids();
    CHECK_THROWS_AS(build_weights(g, {0.0, 0.5}, 1, {}), ConfigError);
    CHECK_THROWS_AS(build_weights(g, {0.5, 1.0}, 1, {}), ConfigError);
    CHECK_THROWS_AS(build_weights(g, {0.4, 0.6}, 1, {0.5, 1.0, 0.2}), ConfigError);
    CHECK_THROWS_AS(build_weights(g, {0.02, 0.06}, 1, {}), ConfigError);
}

TEST_CASE("rho spread shrinks as lambda grows") {
    const auto g = unit_grids();
    double prev = 0.0;
    for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto ws = build_weights(g, {0.4, 0.6}, 1, {1.0, lambda, 0.2});
        const auto [lo, hi] = std::minmax_element(ws.rho.begin(), ws.rho.end());
        const double ratio = *lo / *hi;
        if (lambda > 0.5) CHECK(ratio > prev);
        prev = ratio;
    }
}

TEST_CASE("carleman ratios") {
    const auto g = unit_grids();
    const auto ws = build_weights(g, {0.4, 0.6}, 1, {5.0, 1.0, 0.2});
    const auto cut = make_cutoff(g.space, {0.3, 0.7}, {0.4, 0.6}, 3);
    const std::vector<double> zero(g.space.size(), 0.0);
    CHECK(carleman_ratio_l2(ws, zero) == 0.0);
    CHECK(carleman_ratio_l2kp2(ws, zero) == 0.0);
    CHECK(observability_ratio(ws, cut.chi, zero) == 0.0);

    std::mt19937_64 rng(3);
    const auto phiT = rum::testing::random_vector(rng, g.space.size());
    const double a = carleman_ratio_l2(ws, phiT);
    const double b = carleman_ratio_l2kp2(ws, phiT);
    const double c = observability_ratio(ws, cut.chi, phiT);
    CHECK(std::isfinite(a));
    CHECK(std::isfinite(b));
    CHECK(std::isfinite(c));
    CHECK(a >= 1.0);  // the left side contains the right side

    // both sides homogeneous of the same degree
    auto scaled = phiT;
    for (auto& v : scaled) v *= -37.5;
    CHECK(carleman_ratio_l2(ws, scaled) == doctest::Approx(a).epsilon(1e-12));
    CHECK(carleman_ratio_l2kp2(ws, scaled) == doctest::Approx(b).epsilon(1e-12));
    CHECK(observability_ratio(ws, cut.chi, scaled) == doctest::Approx(c).epsilon(1e-12));

    // data concentrated in omega1 at large s
    const auto big = build_weights(g, {0.4, 0.6}, 1, {40.0, 1.0, 0.2});
    std::vector<double> local(g.space.size(), 0.0);
    for (std::size_t i = 0; i < local.size(); ++i) {
        const double x = g.space.x(i);
        if (x > 0.45 && x < 0.55) local[i] = std::cos(10.0 * std::numbers::pi * (x - 0.5));
    }
    CHECK(carleman_ratio_l2(big, local) <= 10.0);
}

TEST_CASE("backward dissipation of the adjoint") {
    const auto g = unit_grids();
    std::mt19937_64 rng(11);
    const auto phiT = rum::testing::random_vector(rng, g.space.size());
    const auto phi = adjoint_solve(ParabolicOperator::heat(), std::span<const double>(phiT), g);
    for (double p : {2.0, 4.0}) {
        double prev = space_lp_norm(phi.row(g.time.steps()), g.space, p);
        for (std::size_t j = g.time.steps(); j-- > 0;) {
            const double cur = space_lp_norm(phi.row(j), g.space, p);
            CHECK(cur <= prev * (1.0 + 1e-14));
            prev = cur;
        }
    }
}

TEST_CASE("sweep records") {
    const auto g = unit_grids();
    const std::vector<double> s{5.0, 10.0};
    const auto sw = carleman_sweep(g, {0.3, 0.7}, {0.4, 0.6}, 1, s, {}, 5, 1);
    REQUIRE(sw.records.size() == 2);
    for (const auto& r : sw.records) {
        CHECK(std::isfinite(r.l2));
        CHECK(std::isfinite(r.l2kp2));
        CHECK(r.observability > 0.0);
    }
    const auto again = carleman_sweep(g, {0.3, 0.7}, {0.4, 0.6}, 1, s, {}, 5, 1);
    CHECK(again.records[1].l2kp2 == sw.records[1].l2kp2);
}
