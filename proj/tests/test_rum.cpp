#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rum/power.hpp"
#include "rum/solver.hpp"
#include "support.hpp"

using namespace rum;
using rum::testing::unit_grids;

namespace {

const Interval kOmega{0.3, 0.7};
const Interval kOmega1{0.4, 0.6};

RumProblem make_problem(const Grids& g, int k, double eps, std::vector<double> zeta0) {
    const auto ws = build_weights(g, kOmega1, k, {});
    const auto cut = make_cutoff(g.space, kOmega, kOmega1, 2 * k + 1);
    return RumProblem::odd(g, k, eps, std::move(zeta0), ws, cut.chi);
}

double field_rel(const RealField& a, const RealField& b) {
    return rum::testing::rel_diff(a.values(), b.values());
}

// W from its definition, independent of the solver's log-space evaluation.
double direct_weight(const RumProblem& pb, std::size_t j, std::size_t i) {
    const std::size_t nt = pb.grids.time.steps();
    if (j == 0 || j >= nt) return 0.0;
    const double t = pb.grids.time.t(j), T = pb.grids.time.horizon();
    const double se = pb.weights.s / (t * (T - t));
    const double q = pb.q();
    return std::exp(-0.5 * q * se * pb.weights.rho[i]) * std::pow(se, 1.5 * q);
}

}  // namespace

TEST_CASE("exponent pair") {
    const auto g = unit_grids();
    for (int k = 0; k <= 4; ++k) {
        const auto pb = make_problem(g, k, 1e-2, std::vector<double>(g.space.size(), 0.0));
        CHECK(pb.q() > 1.0);
        CHECK(pb.q() <= 2.0);
        CHECK((pb.q() == 2.0) == (k == 0));
        CHECK(1.0 / pb.q() + 1.0 / (2.0 * k + 2.0) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("J basic values") {
    const auto g = unit_grids();
    const std::size_t nx = g.space.size();
    auto pb = make_problem(g, 1, 1e-3, std::vector<double>(nx, 0.0));
    CHECK(evaluate_J(pb, RealField(g)) == 0.0);

    pb.zeta0 = rum::testing::sine_mode(g.space);
    const auto free = forward_solve(ParabolicOperator::heat(), std::span<const double>(pb.zeta0), RealField(g), g);
    double expect = 0.0;
    for (std::size_t i = 0; i < nx; ++i) expect += std::pow(std::abs(free(g.time.steps(), i)), pb.q());
    expect *= g.space.dx() / (pb.q() * pb.eps);
    CHECK(evaluate_J(pb, RealField(g)) == doctest::Approx(expect).epsilon(1e-13));

    std::mt19937_64 rng(5);
    auto h = rum::testing::random_field(rng, g);
    // the control weight is infinite at t = 0
    for (std::size_t i = 0; i < nx; ++i) h(0, i) = 0.0;
    const double j1 = evaluate_J(pb, h);
    auto scaled = pb;
    for (auto& z : scaled.zeta0) z *= 2.0;
    h *= 2.0;
    CHECK(evaluate_J(scaled, h) == doctest::Approx(std::pow(2.0, pb.q()) * j1).epsilon(1e-14));
}

TEST_CASE("weights used by the solver") {
    const auto g = unit_grids();
    const auto pb = make_problem(g, 1, 1e-3, rum::testing::sine_mode(g.space));
    const auto lw = rum_log_weight(pb);
    for (std::size_t j : {std::size_t{0}, std::size_t{1}, std::size_t{40}, std::size_t{64}, std::size_t{127}, std::size_t{128}}) {
        for (std::size_t i = 0; i < g.space.size(); i += 7) {
            const double expect = direct_weight(pb, j, i);
            CHECK(clamped_exp(lw(j, i)) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero data") {
    const auto g = unit_grids();
    const auto pb = make_problem(g, 1, 1e-3, std::vector<double>(g.space.size(), 0.0));
    const auto it = make_iterate(pb, RealField(g));
    CHECK(it.residual == 0.0);
    CHECK(el_residual(pb, it) == 0.0);
    const auto res = solve_rum(pb);
    CHECK(res.converged);
    CHECK(res.final.iteration == 0);
    CHECK(max_abs(std::span<const double>(res.final.h.values())) == 0.0);
}

TEST_CASE("first step at k = 0 is a Richardson step") {
    const auto g = unit_grids();
    auto pb = make_problem(g, 0, 1e4, rum::testing::sine_mode(g.space));
    const auto start = make_iterate(pb, RealField(g));
    double used = 0.0;
    const auto next = fixed_point_step(pb, start, 1.0, &used);
    REQUIRE(used == 1.0);

    const auto free = forward_solve(ParabolicOperator::heat(), std::span<const double>(pb.zeta0), RealField(g), g);
    std::vector<double> phiT(g.space.size());
    for (std::size_t i = 0; i < phiT.size(); ++i) phiT[i] = -free(g.time.steps(), i) / pb.eps;
    const auto phi = adjoint_solve(ParabolicOperator::heat(), std::span<const double>(phiT), g);
    RealField expect(g);
    for (std::size_t j = 0; j < g.time.steps(); ++j) {
        for (std::size_t i = 0; i < phiT.size(); ++i) expect(j, i) = direct_weight(pb, j, i) * pb.chi[i] * phi(j, i);
    }
    CHECK(field_rel(next.h, expect) <= 1e-12);
}

TEST_CASE("descent from zero") {
    const auto g = unit_grids();
    for (int k : {0, 1, 2}) {
        for (double eps : {1.0, 0.1}) {
            const auto pb = make_problem(g, k, eps, rum::testing::sine_mode(g.space));
            const auto start = make_iterate(pb, RealField(g));
            const auto next = fixed_point_step(pb, start, 0.5);
            CHECK(next.J < start.J);
        }
    }
    const auto pb = make_problem(g, 1, 1e-3, rum::testing::sine_mode(g.space));
    CHECK_THROWS_AS(fixed_point_step(pb, make_iterate(pb, RealField(g)), 0.0), ConfigError);
    CHECK_THROWS_AS(fixed_point_step(pb, make_iterate(pb, RealField(g)), 1.5), ConfigError);
}

TEST_CASE("stagnation carries the last iterate") {
    // at small eps the first EL image overshoots by ~eps^{-n}, beyond 30 halvings
    const auto g = unit_grids();
    const auto pb = make_problem(g, 2, 1e-3, rum::testing::sine_mode(g.space));
    const auto start = make_iterate(pb, RealField(g));
    try {
        fixed_point_step(pb, start, 0.5);
        FAIL("expected stagnation");
    } catch (const StagnationError& e) {
        CHECK(e.last_iterate.J == start.J);
        CHECK(max_abs(std::span<const double>(e.last_iterate.h.values())) == 0.0);
    }
    // the full solver still converges on the same problem
    CHECK(solve_rum(pb).converged);
}

TEST_CASE("linear oracle") {
    const auto g = unit_grids();
    std::mt19937_64 rng(17);
    auto pb = make_problem(g, 0, 1e-2, rum::testing::random_vector(rng, g.space.size()));

    // Lambda is symmetric in the dx inner product
    for (int n = 0; n < 5; ++n) {
        const auto a = rum::testing::random_vector(rng, g.space.size());
        const auto b = rum::testing::random_vector(rng, g.space.size());
        const double ab = inner(gramian_apply(pb, a), b, g.space.dx());
        const double ba = inner(a, gramian_apply(pb, b), g.space.dx());
        CHECK(std::abs(ab - ba) <= 1e-11 * std::max(std::abs(ab), 1e-300));
    }

    const auto oracle = linear_hum_oracle(pb);
    CHECK(oracle.final.residual <= 1e-10);
    // the oracle solution is a fixed point of the EL map
    const auto again = fixed_point_step(pb, oracle.final, 1.0);
    CHECK(field_rel(again.h, oracle.final.h) <= 1e-9);

    auto zero = pb;
    zero.zeta0.assign(g.space.size(), 0.0);
    CHECK(max_abs(std::span<const double>(linear_hum_oracle(zero).final.h.values())) == 0.0);

    // weak penalty: no control, free terminal state
    auto weak = pb;
    weak.eps = 1e12;
    const auto w = linear_hum_oracle(weak);
    const auto free = forward_solve(ParabolicOperator::heat(), std::span<const double>(pb.zeta0), RealField(g), g);
    CHECK(max_abs(std::span<const double>(w.final.h.values())) <= 1e-9 * max_abs(std::span<const double>(oracle.final.h.values())));
    std::vector<double> zT(w.final.zeta.row(g.time.steps()).begin(), w.final.zeta.row(g.time.steps()).end());
    std::vector<double> fT(free.row(g.time.steps()).begin(), free.row(g.time.steps()).end());
    CHECK(rum::testing::rel_diff(zT, fT) <= 1e-9);

    pb.power = 3;
    CHECK_THROWS_AS(linear_hum_oracle(pb), ConfigError);
}

TEST_CASE("solve_rum matches the oracle at k = 0") {
    const auto g = unit_grids(63, 128);
    std::mt19937_64 rng(23);
    const auto pb = make_problem(g, 0, 1e-4, rum::testing::random_vector(rng, g.space.size()));
    const auto a = solve_rum(pb);
    const auto b = linear_hum_oracle(pb);
    CHECK(a.converged);
    CHECK(a.final.residual <= 1e-8);
    const auto lw = control_norm_log_weight(pb.weights);
    auto d = a.final.h;
    d -= b.final.h;
    CHECK(weighted_lq_norm(d, lw, g, 2.0) <= 1e-6 * weighted_lq_norm(b.final.h, lw, g, 2.0));
    const auto nt = g.time.steps();
    std::vector<double> za(a.final.zeta.row(nt).begin(), a.final.zeta.row(nt).end());
    std::vector<double> zb(b.final.zeta.row(nt).begin(), b.final.zeta.row(nt).end());
    CHECK(rum::testing::rel_diff(za, zb) <= 1e-6);
}

TEST_CASE("solution structure at k = 1") {
    const auto g = unit_grids(63, 256);
    const auto pb = make_problem(g, 1, 1e-4, rum::testing::sine_mode(g.space));
    const auto res = solve_rum(pb);
    CHECK(res.converged);
    CHECK(res.duality_gap <= 1e-8);
    for (std::size_t n = 1; n < res.history.size(); ++n) CHECK(res.history[n].J <= res.history[n - 1].J);
    const auto cut = make_cutoff(g.space, kOmega, kOmega1, 3);
    const auto& h = res.final.h;
    for (std::size_t i = 0; i < g.space.size(); ++i) {
        CHECK(h(0, i) == 0.0);
        CHECK(h(g.time.steps(), i) == 0.0);
        if (!cut.in_support(i)) {
            for (std::size_t j = 0; j < h.time_nodes(); ++j) CHECK(h(j, i) == 0.0);
        }
    }
    // the control is an exact odd power of the EL root
    for (std::size_t n = 0; n < h.size(); ++n) CHECK(h.values()[n] == ipow(res.final.root.values()[n], 3));
    // state consistent with the control
    RealField src(g);
    for (std::size_t j = 0; j < h.time_nodes(); ++j) {
        for (std::size_t i = 0; i < g.space.size(); ++i) src(j, i) = h(j, i) * pb.chi[i];
    }
    const auto zeta = forward_solve(ParabolicOperator::heat(), std::span<const double>(pb.zeta0), src, g);
    CHECK(field_rel(zeta, res.final.zeta) <= 1e-13);
}

TEST_CASE("homogeneity") {
    const auto g = unit_grids(63, 128);
    for (int k : {1, 2}) {
        auto pb = make_problem(g, k, 1e-3, rum::testing::sine_mode(g.space));
        const auto a = solve_rum(pb);
        const double c = std::ldexp(1.0, 2 * k + 1);
        for (auto& z : pb.zeta0) z *= c;
        const auto b = solve_rum(pb);
        auto scaled = a.final.h;
        scaled *= c;
        CHECK(field_rel(b.final.h, scaled) <= 1e-9);
        const double xa = xp_norm_diagnostic(a.final.h, g, 2 * k + 1, 4.0);
        const double xb = xp_norm_diagnostic(b.final.h, g, 2 * k + 1, 4.0);
        CHECK(xb == doctest::Approx(2.0 * xa).epsilon(1e-12));
    }
}

TEST_CASE("xp diagnostic") {
    const auto g = unit_grids();
    CHECK(xp_norm_diagnostic(RealField(g), g, 3, 2.0) == 0.0);
    CHECK_THROWS_AS(xp_norm_diagnostic(RealField(g), g, 3, 1.5), DomainError);

    // r = t sin(pi x): ||r||_2 = sqrt(1/6), ||r_t||_2 = sqrt(1/2), ||r_xx||_2 = pi^2 sqrt(1/6)
    RealField h(g);
    for (std::size_t j = 0; j < h.time_nodes(); ++j) {
        for (std::size_t i = 0; i < g.space.size(); ++i) {
            h(j, i) = ipow(g.time.t(j) * std::sin(std::numbers::pi * g.space.x(i)), 3);
        }
    }
    const double expect = std::sqrt(1.0 / 6.0) * (1.0 + std::numbers::pi * std::numbers::pi) + std::sqrt(0.5);
    CHECK(xp_norm_diagnostic(h, g, 3, 2.0) == doctest::Approx(expect).epsilon(2e-3));
}

TEST_CASE("epsilon sweep") {
    const auto g = unit_grids(63, 128);
    const auto pb = make_problem(g, 1, 1e-3, rum::testing::sine_mode(g.space));
    CHECK_THROWS_AS(epsilon_sweep(pb, {1e-2, 1e-1}), ConfigError);
    const auto t = epsilon_sweep(pb, {1e-1, 1e-2, 1e-3});
    REQUIRE(t.rows.size() == 3);
    for (std::size_t n = 1; n < t.rows.size(); ++n) {
        CHECK(t.rows[n].terminal_q_norm < t.rows[n - 1].terminal_q_norm);
        CHECK(t.rows[n].J >= t.rows[n - 1].J);
    }
    for (const auto& r : t.rows) CHECK(r.converged);
    CHECK(t.slope > 0.0);
}
