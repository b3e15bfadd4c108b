#include "rum/strategy.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "rum/errors.hpp"
#include "rum/power.hpp"

namespace rum {

namespace {

double couple(double u, int n, Coupling c) { return c == Coupling::monomial ? ipow(u, n) : phi_power(u, n); }

Complex couple(Complex u, int n, Coupling c) {
    if (c != Coupling::monomial) throw ConfigError("coupling: complex states need the monomial coupling");
    Complex r = 1.0;
    for (int m = 0; m < n; ++m) r *= u;
    return r;
}

template <class T>
Field<T> coupling_field(const Field<T>& u, int n, Coupling c) {
    Field<T> g(u.time_nodes(), u.space_nodes());
    for (std::size_t k = 0; k < u.size(); ++k) g.values()[k] = couple(u.values()[k], n, c);
    return g;
}

template <class T>
double terminal_max(const Field<T>& f) {
    return max_abs(f.row(f.time_nodes() - 1));
}

template <class T>
void fill_norms(PhaseReport<T>& rep) {
    rep.norm_2 = lp_norm(rep.control, rep.grids, 2.0);
    rep.norm_4 = lp_norm(rep.control, rep.grids, 4.0);
    rep.norm_8 = lp_norm(rep.control, rep.grids, 8.0);
    rep.norm_inf = max_abs(rep.control);
}

Complex to_scalar(double x, Complex) { return {x, 0.0}; }
double to_scalar(double x, double) { return x; }

template <class T>
Field<T> promote(const RealField& f) {
    Field<T> out(f.time_nodes(), f.space_nodes());
    for (std::size_t k = 0; k < f.size(); ++k) out.values()[k] = to_scalar(f.values()[k], T{});
    return out;
}

template <class T>
std::vector<T> promote(const std::vector<double>& v) {
    std::vector<T> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = to_scalar(v[k], T{});
    return out;
}

/// Phase 2 for the real (n-th root) and complex (alpha) constructions.
template <class T>
PhaseReport<T> phase2_impl(const PowerSystemConfig& cfg, const std::vector<double>& v_mid,
                           const std::vector<double>& u_mid, double* identity_error,
                           double* reconstruction_error) {
    constexpr bool complex_kind = std::is_same_v<T, Complex>;
    if (v_mid.size() != cfg.grids.space.size() || u_mid.size() != cfg.grids.space.size()) {
        throw ConfigError("phase 2: midpoint data has wrong length");
    }
    PhaseReport<T> rep(2, Grids{cfg.grids.space, cfg.grids.time.second_half()});
    const Grids& g = rep.grids;
    const int n = cfg.power;
    const int n_rum = complex_kind ? 2 * n : n;

    const auto cut = make_cutoff(g.space, cfg.omega, cfg.omega1, n_rum);
    const auto ws = build_weights(g, cfg.omega1, (n_rum - 1) / 2, cfg.weights);
    const RumProblem pb{g, n_rum, cfg.eps2, cfg.v_op, v_mid, ws, cut.chi};
    const auto res = solve_rum(pb, cfg.rum);
    rep.rum_converged = res.converged;
    if (!res.converged) rep.flags.push_back("phase 2: RUM did not converge (" + res.note + ")");

    // r = root * sigma gives Phi(r) = Phi(root) chi, the RUM source, with r stored exactly.
    RealField r(g);
    for (std::size_t j = 0; j < r.time_nodes(); ++j) {
        for (std::size_t i = 0; i < r.space_nodes(); ++i) r(j, i) = res.final.root(j, i) * cut.sigma[i];
    }
    Field<T> u2(g);
    rep.coupling_source = RealField(g);
    double worst = 0.0;
    if constexpr (complex_kind) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            const double x = r.values()[k];
            u2.values()[k] = alpha_square(x, n);
            rep.coupling_source.values()[k] = phi_power(x, n_rum);
        }
        const double top = max_abs(rep.coupling_source);
        for (std::size_t k = 0; k < r.size(); ++k) {
            const Complex p = couple(u2.values()[k], n, Coupling::monomial);
            worst = std::max(worst, std::abs(p - rep.coupling_source.values()[k]));
        }
        worst = top > 0.0 ? worst / top : worst;
        if (worst > 1e-10) rep.flags.push_back("phase 2: complex coupling identity failed");
    } else {
        u2 = r;
        for (std::size_t k = 0; k < r.size(); ++k) rep.coupling_source.values()[k] = couple(r.values()[k], n, cfg.coupling);
        for (std::size_t k = 0; k < r.size(); ++k) {
            worst = std::max(worst, std::abs(couple(u2.values()[k], n, cfg.coupling) - rep.coupling_source.values()[k]));
        }
    }
    rep.constructed = u2;
    if (identity_error) *identity_error = worst;

    rep.control = apply_heat_operator(cfg.u_op, u2, g);
    for (std::size_t j = 0; j < rep.control.time_nodes(); ++j) {
        for (std::size_t i = 0; i < g.space.size(); ++i) {
            if (rep.control(j, i) != T{} && !cfg.omega.contains(g.space.x(i))) {
                throw ConfigError("phase 2: control leaks outside omega (cutoff margin too small)");
            }
        }
    }

    const TimeStepper ustep(cfg.u_op, g);
    if (reconstruction_error) {
        const std::vector<T> zero(g.space.size());
        auto diff = ustep.forward(std::span<const T>(zero), rep.control);
        diff -= u2;
        const double top = max_abs(u2);
        *reconstruction_error = top > 0.0 ? max_abs(diff) / top : max_abs(diff);
    }
    // u2 plus the free evolution of the phase-1 residual, v driven by the actual u.
    const auto um = promote<T>(u_mid);
    const auto vm = promote<T>(v_mid);
    rep.u = ustep.forward(std::span<const T>(um), rep.control);
    rep.v = TimeStepper(cfg.v_op, g).forward(std::span<const T>(vm), coupling_field(rep.u, n, cfg.coupling));
    rep.terminal = std::max(terminal_max(rep.u), terminal_max(rep.v));
    fill_norms(rep);
    return rep;
}

template <class T>
StrategyReport<T> run_two_phase(const PowerSystemConfig& cfg) {
    cfg.validate();
    auto p1 = phase1_steer_u(cfg);
    const std::size_t half = p1.u.time_nodes() - 1;
    const auto um = p1.u.row(half);
    const auto vm = p1.v.row(half);
    double identity = 0.0, reconstruction = 0.0;
    auto p2 = phase2_impl<T>(cfg, {vm.begin(), vm.end()}, {um.begin(), um.end()}, &identity, &reconstruction);
    StrategyReport<T> rep(std::move(p1), std::move(p2), cfg.grids);
    rep.power = cfg.power;
    rep.u0 = cfg.u0;
    rep.v0 = cfg.v0;
    rep.coupling_identity_error = identity;
    rep.reconstruction_error = reconstruction;

    const Grids& g = cfg.grids;
    const std::size_t nt = g.time.steps();
    rep.control = Field<T>(g);
    rep.u = Field<T>(g);
    rep.v = Field<T>(g);
    const auto c1 = promote<T>(rep.phase1.control);
    const auto u1 = promote<T>(rep.phase1.u);
    const auto v1 = promote<T>(rep.phase1.v);
    for (std::size_t j = 0; j < half; ++j) {
        rep.control.set_row(j, c1.row(j));
        rep.u.set_row(j, u1.row(j));
        rep.v.set_row(j, v1.row(j));
    }
    for (std::size_t j = half; j <= nt; ++j) {
        rep.control.set_row(j, rep.phase2.control.row(j - half));
        rep.u.set_row(j, rep.phase2.u.row(j - half));
        rep.v.set_row(j, rep.phase2.v.row(j - half));
    }
    for (std::size_t i = 0; i < g.space.size(); ++i) {
        if (u1(half, i) != rep.phase2.u(0, i) || v1(half, i) != rep.phase2.v(0, i)) {
            rep.flags.push_back("concatenation is not continuous at T/2");
            break;
        }
    }
    rep.final_u = terminal_max(rep.u);
    rep.final_v = terminal_max(rep.v);

    const auto u0 = promote<T>(cfg.u0);
    const auto v0 = promote<T>(cfg.v0);
    const auto again = simulate_coupled<T>(cfg.u_op, cfg.v_op, cfg.power, cfg.coupling, g, u0, v0, rep.control);
    auto du = again.u;
    du -= rep.u;
    auto dv = again.v;
    dv -= rep.v;
    const double scale = std::max({max_abs(rep.u), max_abs(rep.v), 1e-300});
    rep.resimulation_error = std::max(max_abs(du), max_abs(dv)) / scale;
    if (rep.resimulation_error > 1e-10) rep.flags.push_back("coupled re-simulation does not reproduce the trajectory");
    return rep;
}

}  // namespace

Complex alpha_square(double r, int n) {
    if (n < 2 || n % 2 != 0) throw DomainError("alpha_square: n must be even and >= 2");
    if (r >= 0.0) return {r * r, 0.0};
    return std::polar(1.0, std::numbers::pi / n) * (r * r);
}

Complex complex_even_root(double H, int n) { return alpha_square(phi_root(H, 2 * n), n); }

PowerSystemConfig PowerSystemConfig::defaults(int power) {
    PowerSystemConfig c;
    c.power = power;
    const auto& s = c.grids.space;
    c.u0.resize(s.size());
    c.v0.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = s.x(i) / s.length();
        c.u0[i] = std::sin(std::numbers::pi * x);
        c.v0[i] = x * (1.0 - x);
    }
    return c;
}

void PowerSystemConfig::validate() const {
    const std::size_t nx = grids.space.size();
    if (power < 2) throw ConfigError("power: must be >= 2");
    if (grids.time.steps() % 2 != 0) throw ConfigError("nt: must be even");
    if (u0.size() != nx) throw ConfigError("u0: wrong length");
    if (v0.size() != nx) throw ConfigError("v0: wrong length");
    for (double x : u0) {
        if (!std::isfinite(x)) throw ConfigError("u0: not finite");
    }
    for (double x : v0) {
        if (!std::isfinite(x)) throw ConfigError("v0: not finite");
    }
    if (!(eps1 > 0.0)) throw ConfigError("eps1: must be positive");
    if (!(eps2 > 0.0)) throw ConfigError("eps2: must be positive");
    if (!(phase1_tol > 0.0)) throw ConfigError("phase1_tol: must be positive");
    make_cutoff(grids.space, omega, omega1, 1);
}

template <class T>
CoupledState<T> simulate_coupled(const ParabolicOperator& u_op, const ParabolicOperator& v_op, int power,
                                 Coupling coupling, const Grids& grids, std::span<const T> u0,
                                 std::span<const T> v0, const Field<T>& control) {
    CoupledState<T> s;
    s.u = forward_solve(u_op, u0, control, grids);
    s.v = forward_solve(v_op, v0, coupling_field(s.u, power, coupling), grids);
    return s;
}

template CoupledState<double> simulate_coupled(const ParabolicOperator&, const ParabolicOperator&, int, Coupling,
                                               const Grids&, std::span<const double>, std::span<const double>,
                                               const RealField&);
template CoupledState<Complex> simulate_coupled(const ParabolicOperator&, const ParabolicOperator&, int, Coupling,
                                                const Grids&, std::span<const Complex>, std::span<const Complex>,
                                                const ComplexField&);

PhaseReport<double> phase1_steer_u(const PowerSystemConfig& cfg) {
    cfg.validate();
    PhaseReport<double> rep(1, Grids{cfg.grids.space, cfg.grids.time.first_half()});
    const Grids& g = rep.grids;
    const auto cut = make_cutoff(g.space, cfg.omega, cfg.omega1, 1);
    const auto ws = build_weights(g, cfg.omega1, 0, cfg.weights);
    const RumProblem pb{g, 1, cfg.eps1, cfg.u_op, cfg.u0, ws, cut.chi};
    const auto res = solve_rum(pb, cfg.rum);
    rep.rum_converged = res.converged;
    if (!res.converged) rep.flags.push_back("phase 1: RUM did not converge (" + res.note + ")");

    rep.control = RealField(g);
    for (std::size_t j = 0; j < g.time.steps(); ++j) {
        for (std::size_t i = 0; i < g.space.size(); ++i) rep.control(j, i) = res.final.h(j, i) * cut.chi[i];
    }
    auto s = simulate_coupled<double>(cfg.u_op, cfg.v_op, cfg.power, cfg.coupling, g, cfg.u0, cfg.v0, rep.control);
    rep.u = std::move(s.u);
    rep.v = std::move(s.v);
    rep.terminal = terminal_max(rep.u);
    if (rep.terminal > cfg.phase1_tol * max_abs(cfg.u0)) {
        rep.flags.push_back("phase 1: ||u(T/2)|| above tolerance (eps1 too large or grid too coarse)");
    }
    fill_norms(rep);
    return rep;
}

PhaseReport<double> phase2_odd(const PowerSystemConfig& cfg, const std::vector<double>& v_mid,
                               const std::vector<double>& u_mid_residual) {
    cfg.validate();
    if (cfg.power % 2 == 0) throw ConfigError("power: phase2_odd needs an odd power");
    return phase2_impl<double>(cfg, v_mid, u_mid_residual, nullptr, nullptr);
}

RealStrategyReport run_odd_strategy(const PowerSystemConfig& cfg) {
    if (cfg.power % 2 == 0) throw ConfigError("power: run_odd_strategy needs an odd power");
    return run_general_power(cfg);
}

RealStrategyReport run_general_power(const PowerSystemConfig& cfg) {
    auto c = cfg;
    c.coupling = Coupling::signed_power;
    return run_two_phase<double>(c);
}

ComplexStrategyReport run_even_complex(const PowerSystemConfig& cfg) {
    if (cfg.power % 2 != 0) throw ConfigError("power: run_even_complex needs an even power");
    auto c = cfg;
    c.coupling = Coupling::monomial;
    return run_two_phase<Complex>(c);
}

ObstructionReport demo_even_obstruction(const PowerSystemConfig& cfg, int random_controls, std::uint64_t seed) {
    cfg.validate();
    if (cfg.power % 2 != 0) throw ConfigError("power: the obstruction needs an even power");
    if (cfg.u_op.scheme != Scheme::implicit_euler || cfg.v_op.scheme != Scheme::implicit_euler) {
        throw ConfigError("scheme: the comparison principle is checked for implicit Euler only");
    }
    if (std::any_of(cfg.v0.begin(), cfg.v0.end(), [](double x) { return x < 0.0; }) ||
        std::all_of(cfg.v0.begin(), cfg.v0.end(), [](double x) { return x == 0.0; })) {
        throw ConfigError("v0: must be nonnegative and nonzero");
    }
    const Grids& g = cfg.grids;
    const std::size_t nx = g.space.size();
    const std::size_t nt = g.time.steps();

    ObstructionReport rep;
    const auto free = forward_solve(cfg.v_op, std::span<const double>(cfg.v0), RealField(g), g);
    rep.free_terminal.assign(free.row(nt).begin(), free.row(nt).end());
    rep.free_min = *std::min_element(rep.free_terminal.begin(), rep.free_terminal.end());
    const auto mid = static_cast<std::size_t>(std::lround(0.5 * g.space.length() / g.space.dx())) - 1;
    rep.free_midpoint = rep.free_terminal[std::min(mid, nx - 1)];
    rep.min_gap = std::numeric_limits<double>::infinity();

    auto check = [&](const RealField& h) {
        const auto s = simulate_coupled<double>(cfg.u_op, cfg.v_op, cfg.power, Coupling::monomial, g, cfg.u0,
                                                cfg.v0, h);
        ++rep.controls_tested;
        bool exact = true;
        for (std::size_t i = 0; i < nx; ++i) {
            const double d = s.v(nt, i) - rep.free_terminal[i];
            if (d < 0.0) ++rep.violations;
            if (d != 0.0) exact = false;
            rep.min_gap = std::min(rep.min_gap, d);
        }
        return exact;
    };

    rep.zero_control_exact = check(RealField(g));

    auto odd = cfg;
    odd.power = cfg.power + 1;
    check(run_odd_strategy(odd).control);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto on_omega = indicator(g.space, cfg.omega);
    for (int m = 0; m < random_controls; ++m) {
        const double amp = random_controls > 1 ? std::pow(10.0, -2.0 + 4.0 * m / (random_controls - 1)) : 1.0;
        RealField h(g);
        for (std::size_t j = 0; j < nt; ++j) {
            for (std::size_t i = 0; i < nx; ++i) h(j, i) = on_omega[i] * amp * unit(rng);
        }
        check(h);
    }
    return rep;
}

template <class T>
std::vector<ScalingRow> scaling_certificate(const StrategyReport<T>& report, const std::vector<double>& p_list) {
    const double data = max_abs(std::span<const double>(report.u0)) +
                        std::pow(max_abs(std::span<const double>(report.v0)), 1.0 / report.power);
    std::vector<ScalingRow> rows;
    for (double p : p_list) {
        ScalingRow r{p, lp_norm(report.control, report.grids, p), data, 0.0};
        if (data > 0.0) r.ratio = r.control_norm / data;
        rows.push_back(r);
    }
    return rows;
}

template std::vector<ScalingRow> scaling_certificate(const RealStrategyReport&, const std::vector<double>&);
template std::vector<ScalingRow> scaling_certificate(const ComplexStrategyReport&, const std::vector<double>&);

}  // namespace rum
