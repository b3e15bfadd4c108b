#include "rum/trajectory.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>

#include "rum/errors.hpp"
#include "rum/power.hpp"

namespace rum {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int m = 2; m <= n; ++m) f *= m;
    return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

/// m-th central difference quotient with step h (points at x + (m/2 - i) h).
double central_difference(const std::function<double(double)>& f, double x, int m, double h) {
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        s += sign * binomial(m, i) * f(x + (0.5 * m - i) * h);
    }
    return s / std::pow(h, m);
}

double polyval(const std::vector<double>& c, double x) {
    double r = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
    return r;
}

/// Coefficients of the d-th derivative.
std::vector<double> polyder(const std::vector<double>& c, int d) {
    std::vector<double> out;
    for (std::size_t i = static_cast<std::size_t>(d); i < c.size(); ++i) {
        double f = 1.0;
        for (int m = 0; m < d; ++m) f *= static_cast<double>(i - m);
        out.push_back(f * c[i]);
    }
    return out;
}

std::vector<double> monomial(int n, double c = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    v.back() = c;
    return v;
}

std::vector<double> rows_of(const RealField& f, std::size_t j) {
    const auto r = f.row(j);
    return {r.begin(), r.end()};
}

}  // namespace

double richardson_derivative(const std::function<double(double)>& f, double x, int m, double h) {
    if (m < 0) throw DomainError("richardson_derivative: order must be >= 0");
    if (m == 0) return f(x);
    const double d0 = central_difference(f, x, m, h);
    const double d1 = central_difference(f, x, m, 0.5 * h);
    const double d2 = central_difference(f, x, m, 0.25 * h);
    const double r0 = (4.0 * d1 - d0) / 3.0;
    const double r1 = (4.0 * d2 - d1) / 3.0;
    return (16.0 * r1 - r0) / 15.0;
}

double NonlinearitySpec::derivative(double y) const {
    if (g1_derivative) return g1_derivative(y);
    return richardson_derivative(g1, y, 2 * k + 1);
}

NonlinearitySpec polynomial_nonlinearity(const std::string& name, int k, const std::vector<double>& g1_coefs,
                                         const std::vector<double>& g2_coefs, const std::vector<MixedTerm>& f1_terms) {
    if (k < 1) throw ConfigError("nonlinearity: k must be >= 1");
    if (g1_coefs.empty() || g2_coefs.empty()) throw ConfigError("nonlinearity: empty coefficient table");
    for (const auto& t : f1_terms) {
        if (t.u_power < 1 || t.v_power < 0) throw ConfigError("nonlinearity: f1 terms need u power >= 1");
    }
    NonlinearitySpec s;
    s.name = name;
    s.k = k;
    s.g1 = [g1_coefs](double u) { return polyval(g1_coefs, u); };
    s.g2 = [g2_coefs](double v) { return polyval(g2_coefs, v); };
    s.g1_derivative = [d = polyder(g1_coefs, 2 * k + 1)](double y) { return polyval(d, y); };
    s.f1 = [f1_terms](double u, double v) {
        double r = 0.0;
        for (const auto& t : f1_terms) r += t.coef * ipow(u, t.u_power) * ipow(v, t.v_power);
        return r;
    };
    return s;
}

NonlinearitySpec NonlinearitySpec::catalog(const std::string& name, int k) {
    if (name == "cubic") return polynomial_nonlinearity(name, 1, monomial(3), {1.0}, {});
    if (name == "cubic-plus-quintic") {
        return polynomial_nonlinearity(name, 1, {0.0, 0.0, 0.0, 1.0, 0.0, 1.0}, {1.0, 1.0}, {});
    }
    if (name == "reaction-2k1") {
        if (k < 1) throw ConfigError("nonlinearity: k must be >= 1");
        return polynomial_nonlinearity(name, k, monomial(2 * k + 1), {1.0}, {{2 * k + 1, 0, -1.0}});
    }
    throw ConfigError("nonlinearity: unknown catalog entry '" + name + "'");
}

Neighborhood certify_nonlinearity(const NonlinearitySpec& spec) {
    if (!spec.f1 || !spec.g1 || !spec.g2) throw ConfigError("nonlinearity: f1, g1 and g2 are required");
    if (spec.k < 1) throw ConfigError("nonlinearity: k must be >= 1");
    const double g20 = spec.g2(0.0);
    if (!(std::abs(g20) > 0.0)) throw ConfigError("g2: g2(0) must be nonzero");
    for (int m = 0; m <= 40; ++m) {
        const double v = -1.0 + m / 20.0;
        if (std::abs(spec.f1(0.0, v)) > 1e-14) throw ConfigError("f1: f1(0, v) must vanish");
    }
    Neighborhood nb;
    nb.g1_derivative_at_0 = spec.derivative(0.0);
    const double scale = std::max(1.0, std::abs(nb.g1_derivative_at_0));
    if (!(std::abs(nb.g1_derivative_at_0) > 1e-6 * scale)) {
        throw ConfigError("g1: derivative of order 2k+1 must be nonzero at 0");
    }
    for (int m = 0; m <= 2 * spec.k; ++m) {
        if (std::abs(richardson_derivative(spec.g1, 0.0, m)) > 1e-6 * scale) {
            throw ConfigError("g1: g1 and its first 2k derivatives must vanish at 0");
        }
    }
    const bool positive = nb.g1_derivative_at_0 > 0.0;
    auto sign_ok = [&](double a) {
        for (int m = 0; m <= 200; ++m) {
            const double d = spec.derivative(-a + a * m / 100.0);
            if (!(positive ? d > 0.0 : d < 0.0)) return false;
        }
        return true;
    };
    auto g2_ok = [&](double b) {
        for (int m = 0; m <= 200; ++m) {
            if (!(std::abs(spec.g2(-b + b * m / 100.0)) >= 0.5 * std::abs(g20))) return false;
        }
        return true;
    };
    nb.a = 1.0;
    for (int m = 0; m < 40 && !sign_ok(nb.a); ++m) nb.a *= 0.5;
    nb.b = 1.0;
    for (int m = 0; m < 40 && !g2_ok(nb.b); ++m) nb.b *= 0.5;
    if (!sign_ok(nb.a) || !g2_ok(nb.b)) throw ConfigError("nonlinearity: no validated neighborhood found");
    return nb;
}

double g1_tilde(const NonlinearitySpec& spec, const Neighborhood& nb, double x) {
    if (!(std::abs(x) < nb.a)) throw DomainError("g1_tilde: x outside the validated neighborhood");
    if (x == 0.0) return 0.0;
    const int k2 = 2 * spec.k;
    const double norm = factorial(k2);
    auto integrand = [&](double u) { return ipow(1.0 - u, k2) / norm * spec.derivative(u * x); };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, 1.0, 10, 1e-12);
    if (!(integral != 0.0) || std::signbit(integral) != std::signbit(nb.g1_derivative_at_0)) {
        throw DomainError("g1_tilde: remainder integral changes sign");
    }
    return odd_root(integral, k2 + 1) * x;
}

double g1_tilde(const NonlinearitySpec& spec, double x) { return g1_tilde(spec, certify_nonlinearity(spec), x); }

double g1_tilde_inverse(const NonlinearitySpec& spec, const Neighborhood& nb, double y) {
    if (y == 0.0) return 0.0;
    const double edge = nb.a * (1.0 - 1e-9);
    double lo = -edge, hi = edge;
    double flo = g1_tilde(spec, nb, lo) - y;
    double fhi = g1_tilde(spec, nb, hi) - y;
    if (flo * fhi > 0.0) throw DomainError("g1_tilde_inverse: y outside the range of g1_tilde");
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        [&](double x) { return g1_tilde(spec, nb, x) - y; }, lo, hi, flo, fhi,
        boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1), iters);
    // pick the bracket end with the smaller residual
    const double r0 = std::abs(g1_tilde(spec, nb, bracket.first) - y);
    const double r1 = std::abs(g1_tilde(spec, nb, bracket.second) - y);
    const double x = r0 <= r1 ? bracket.first : bracket.second;
    if (std::min(r0, r1) > 1e-12 * std::max(1.0, std::abs(y))) {
        throw SolverError("g1_tilde_inverse: root finder did not reach the residual tolerance");
    }
    return x;
}

double g1_tilde_inverse(const NonlinearitySpec& spec, double y) {
    return g1_tilde_inverse(spec, certify_nonlinearity(spec), y);
}

RealField build_bump(const Grids& grids, Interval omega, Interval omega0, double eps) {
    if (!(eps > 0.0)) throw ConfigError("build_bump: eps must be positive");
    const auto b = make_cutoff(grids.space, omega, omega0, 1).sigma;
    const double T = grids.time.horizon();
    RealField u(grids);
    for (std::size_t j = 0; j < u.time_nodes(); ++j) {
        const double tau = (grids.time.t(j) - grids.time.start()) / T;
        double theta = 0.0;
        if (tau >= 0.125 && tau <= 0.375) {
            theta = 1.0;
        } else if (tau > 1.0 / 32.0 && tau < 0.125) {
            theta = smoothstep((tau - 1.0 / 32.0) / (3.0 / 32.0));
        } else if (tau > 0.375 && tau < 15.0 / 32.0) {
            theta = smoothstep((15.0 / 32.0 - tau) / (3.0 / 32.0));
        }
        if (theta == 0.0) continue;
        for (std::size_t i = 0; i < u.space_nodes(); ++i) u(j, i) = eps * theta * b[i];
    }
    return u;
}

PicardResult picard_solve_v1(const NonlinearitySpec& spec, const RealField& u_bar, const Grids& grids, double tol,
                             const ParabolicOperator& v_op) {
    if (!matches(u_bar, grids)) throw ConfigError("picard_solve_v1: u_bar shape does not match the grids");
    if (!(tol >= 0.0)) throw ConfigError("picard_solve_v1: tol must be >= 0");
    const TimeStepper stepper(v_op, grids);
    const std::vector<double> zero(grids.space.size(), 0.0);
    PicardResult res{RealField(grids), 0};
    RealField src(grids);
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= 50; ++it) {
        for (std::size_t k = 0; k < src.size(); ++k) src.values()[k] = spec.f2(u_bar.values()[k], res.v.values()[k]);
        auto next = stepper.forward(std::span<const double>(zero), src);
        auto d = next;
        d -= res.v;
        const double diff = max_abs(d);
        res.v = std::move(next);
        res.iterations = it;
        if (!std::isfinite(diff) || (it > 3 && diff > 2.0 * previous)) break;
        if (diff <= tol) return res;
        previous = diff;
    }
    throw SolverError("picard_solve_v1: no contraction; use a smaller eps");
}

NonlinearState simulate_nonlinear(const NonlinearitySpec& spec, const Grids& grids, const ParabolicOperator& u_op,
                                  const ParabolicOperator& v_op, std::span<const double> u0,
                                  std::span<const double> v0, const RealField& h) {
    if (u_op.scheme != Scheme::implicit_euler || v_op.scheme != Scheme::implicit_euler) {
        throw ConfigError("scheme: nonlinear simulation uses implicit Euler");
    }
    if (!matches(h, grids)) throw ConfigError("simulate_nonlinear: control shape does not match the grids");
    const std::size_t nx = grids.space.size();
    if (u0.size() != nx || v0.size() != nx) throw ConfigError("simulate_nonlinear: initial data has wrong length");
    const TimeStepper us(u_op, grids), vs(v_op, grids);
    NonlinearState s{RealField(grids), RealField(grids)};
    s.u.set_row(0, u0);
    s.v.set_row(0, v0);
    std::vector<double> gu(nx), gv(nx);
    for (std::size_t j = 0; j < grids.time.steps(); ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            gu[i] = spec.f1(s.u(j, i), s.v(j, i)) + h(j, i);
            gv[i] = spec.f2(s.u(j, i), s.v(j, i));
        }
        us.step<double>(std::as_const(s.u).row(j), gu, gu, s.u.row(j + 1));
        vs.step<double>(std::as_const(s.v).row(j), gv, gv, s.v.row(j + 1));
    }
    return s;
}

TrajectoryResult build_reference_trajectory(const NonlinearitySpec& spec, double eps, const TrajectoryConfig& cfg) {
    const auto nb = certify_nonlinearity(spec);
    const Grids& g = cfg.grids;
    if (g.time.steps() % 2 != 0) throw ConfigError("nt: must be even");
    if (cfg.u_op.scheme != Scheme::implicit_euler || cfg.v_op.scheme != Scheme::implicit_euler) {
        throw ConfigError("scheme: the trajectory uses implicit Euler");
    }
    const int n = 2 * spec.k + 1;
    const std::size_t nx = g.space.size();
    const std::size_t half = g.time.steps() / 2;
    TrajectoryResult res(g);
    res.eps = eps;

    // Phase 1: bump and Picard on (0, T/2).
    const Grids g1{g.space, g.time.first_half()};
    const RealField bump = build_bump(g, cfg.omega, cfg.omega0, eps);
    RealField u1(g1);
    for (std::size_t j = 0; j <= half; ++j) u1.set_row(j, bump.row(j));
    const auto picard = picard_solve_v1(spec, u1, g1, cfg.picard_tol, cfg.v_op);
    res.picard_iterations = picard.iterations;
    const RealField& v1 = picard.v;
    res.v_mid = max_abs(v1.row(half));
    RealField h1 = apply_heat_operator(cfg.u_op, u1, g1);
    for (std::size_t j = 0; j < half; ++j) {
        for (std::size_t i = 0; i < nx; ++i) h1(j, i) -= spec.f1(u1(j, i), v1(j, i));
    }

    // Phase 2: RUM on the v-equation from v1(T/2), then invert the coupling.
    const Grids g2{g.space, g.time.second_half()};
    const auto cut = make_cutoff(g.space, cfg.omega, cfg.omega1, n);
    const auto ws = build_weights(g2, cfg.omega1, spec.k, cfg.weights);
    const RumProblem pb{g2, n, cfg.eps_rum, cfg.v_op, rows_of(v1, half), ws, cut.chi};
    const auto rum = solve_rum(pb, cfg.rum);
    res.rum_converged = rum.converged;
    if (!rum.converged) res.flags.push_back("phase 2: RUM did not converge (" + rum.note + ")");
    RealField r(g2), H(g2);
    for (std::size_t j = 0; j <= half; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            r(j, i) = rum.final.root(j, i) * cut.sigma[i];
            H(j, i) = phi_power(r(j, i), n);
        }
    }
    const RealField v2 = forward_solve(cfg.v_op, std::span<const double>(pb.zeta0), H, g2);
    RealField u2(g2);
    for (std::size_t j = 0; j <= half; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (r(j, i) == 0.0) continue;
            if (!(std::abs(v2(j, i)) < nb.b)) {
                throw DomainError("trajectory: v leaves the neighborhood where g2 is invertible; use a smaller eps");
            }
            const double y = r(j, i) / odd_root(spec.g2(v2(j, i)), n);
            try {
                u2(j, i) = g1_tilde_inverse(spec, nb, y);
            } catch (const DomainError&) {
                throw DomainError("trajectory: g1_tilde inversion left the validated neighborhood; use a smaller eps");
            }
        }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < H.size(); ++k) {
        worst = std::max(worst, std::abs(spec.f2(u2.values()[k], v2.values()[k]) - H.values()[k]));
    }
    const double top = max_abs(H);
    res.consistency_error = top > 0.0 ? worst / top : worst;
    if (res.consistency_error > cfg.consistency_tol) res.flags.push_back("phase 2: f2(u2, v2) does not match H");
    RealField h2 = apply_heat_operator(cfg.u_op, u2, g2);
    for (std::size_t j = 0; j < half; ++j) {
        for (std::size_t i = 0; i < nx; ++i) h2(j, i) -= spec.f1(u2(j, i), v2(j, i));
    }

    res.u = RealField(g);
    res.v = RealField(g);
    res.h = RealField(g);
    for (std::size_t j = 0; j < half; ++j) {
        res.u.set_row(j, u1.row(j));
        res.v.set_row(j, v1.row(j));
        res.h.set_row(j, h1.row(j));
    }
    for (std::size_t j = half; j <= g.time.steps(); ++j) {
        res.u.set_row(j, u2.row(j - half));
        res.v.set_row(j, v2.row(j - half));
        res.h.set_row(j, h2.row(j - half));
    }
    for (std::size_t j = 0; j < res.h.time_nodes(); ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (res.h(j, i) != 0.0 && !cfg.omega.contains(g.space.x(i))) {
                res.flags.push_back("control leaks outside omega");
                j = res.h.time_nodes() - 1;
                break;
            }
        }
    }
    res.terminal_u = max_abs(res.u.row(g.time.steps()));
    res.terminal_v = max_abs(res.v.row(g.time.steps()));

    // Coupling certificate on (T/8, 3T/8) x omega0.
    res.certificate = std::numeric_limits<double>::infinity();
    const double T = g.time.horizon();
    bool below = false;
    for (std::size_t j = 0; j <= g.time.steps(); ++j) {
        const double tau = (g.time.t(j) - g.time.start()) / T;
        if (!(tau > 0.125 && tau < 0.375)) continue;
        for (std::size_t i = 0; i < nx; ++i) {
            if (!cfg.omega0.contains(g.space.x(i))) continue;
            const double u = res.u(j, i), v = res.v(j, i);
            const double d = 1e-6 * std::max(1.0, std::abs(u));
            res.certificate = std::min(res.certificate, (spec.f2(u + d, v) - spec.f2(u - d, v)) / (2.0 * d));
            if (u < eps) below = true;
        }
    }
    if (below) res.flags.push_back("bump below eps on the certified region");

    const std::vector<double> zero(nx, 0.0);
    const auto again = simulate_nonlinear(spec, g, cfg.u_op, cfg.v_op, zero, zero, res.h);
    auto du = again.u;
    du -= res.u;
    auto dv = again.v;
    dv -= res.v;
    const double scale = std::max({max_abs(res.u), max_abs(res.v), 1e-300});
    res.resimulation_error = std::max(max_abs(du), max_abs(dv)) / scale;
    if (res.resimulation_error > 1e-8) res.flags.push_back("nonlinear re-simulation does not reproduce the trajectory");
    return res;
}

}  // namespace rum
