#include "rum/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rum/power.hpp"

namespace rum {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double euclid(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Precomputed per-problem data shared by every evaluation.
struct Context {
    const RumProblem& pb;
    TimeStepper stepper;
    RealField log_w;  // log W
    RealField w;      // W, clamped
    std::size_t nt, nx;
    double dt, dx;

    explicit Context(const RumProblem& problem)
        : pb(problem),
          stepper(problem.op, problem.grids),
          log_w(rum_log_weight(problem)),
          w(problem.grids),
          nt(problem.grids.time.steps()),
          nx(problem.grids.space.size()),
          dt(problem.grids.time.dt()),
          dx(problem.grids.space.dx()) {
        for (std::size_t n = 0; n < w.size(); ++n) w.values()[n] = clamped_exp(log_w.values()[n]);
    }

    RealField source(const RealField& h) const {
        RealField g(pb.grids);
        for (std::size_t j = 0; j < nt; ++j) {
            for (std::size_t i = 0; i < nx; ++i) g(j, i) = h(j, i) * pb.chi[i];
        }
        return g;
    }

    /// W chi sigma on pairing nodes.
    RealField el_root(const RealField& sigma) const {
        RealField r(pb.grids);
        for (std::size_t j = 0; j < nt; ++j) {
            for (std::size_t i = 0; i < nx; ++i) r(j, i) = w(j, i) * pb.chi[i] * sigma(j, i);
        }
        return r;
    }

    RealField power_of(const RealField& r) const {
        RealField h(pb.grids);
        for (std::size_t n = 0; n < r.size(); ++n) h.values()[n] = phi_power(r.values()[n], pb.power);
        return h;
    }

    double J(const RealField& h, std::span<const double> zetaT) const {
        const double q = pb.q();
        double control = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const double a = std::abs(h(j, i));
                if (a == 0.0) continue;
                const double e = q * std::log(a) - log_w(j, i);
                if (e > 709.0) return kInf;
                control += std::exp(e);
            }
        }
        double terminal = 0.0;
        for (double z : zetaT) terminal += std::pow(std::abs(z), q);
        return dt * dx * control / q + dx * terminal / (q * pb.eps);
    }

    std::vector<double> adjoint_terminal(std::span<const double> zetaT) const {
        std::vector<double> phiT(nx);
        for (std::size_t i = 0; i < nx; ++i) phiT[i] = -phi_root(zetaT[i], pb.power) / pb.eps;
        return phiT;
    }

    RumIterate iterate(const RealField& h, const RealField* root) const {
        RumIterate it;
        it.h = h;
        if (root) {
            it.root = *root;
        } else {
            it.root = RealField(pb.grids);
            for (std::size_t n = 0; n < h.size(); ++n) it.root.values()[n] = phi_root(h.values()[n], pb.power);
        }
        it.zeta = stepper.forward(std::span<const double>(pb.zeta0), source(h));
        const auto zetaT = it.zeta.row(nt);
        it.J = J(h, zetaT);
        const auto phiT = adjoint_terminal(zetaT);
        it.phi = stepper.adjoint(std::span<const double>(phiT), &it.sigma);
        it.residual = residual(it);
        return it;
    }

    double residual(const RumIterate& it) const {
        double diff = 0.0, a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const double lhs = it.root(j, i);
                const double rhs = w(j, i) * pb.chi[i] * it.sigma(j, i);
                diff += (lhs - rhs) * (lhs - rhs);
                a += lhs * lhs;
                b += rhs * rhs;
            }
        }
        const double den = std::sqrt(std::max(a, b));
        return den == 0.0 ? 0.0 : std::sqrt(diff) / den;
    }
};

RumProblem scaled_problem(const RumProblem& pb, double factor) {
    RumProblem out = pb;
    for (auto& z : out.zeta0) z *= factor;
    return out;
}

void scale_iterate(RumIterate& it, double c, double croot, double cJ) {
    it.h *= c;
    it.root *= croot;
    it.zeta *= c;
    it.phi *= croot;
    it.sigma *= croot;
    it.J *= cJ;
}

// ---------------------------------------------------------------------------
// Convex dual in phi_T:
//   D(phi) = 1/p sum_{j<nt} dt dx W^n |chi sigma|^p + eps^n/p dx sum |phi|^p + <zeta0, phi(0)>
// minimized by Newton's method; the control is h = Phi_n(W chi sigma).

struct DualPoint {
    std::vector<double> phiT;
    double D = 0.0;
    double homogeneous = 0.0;  // part of D of degree p in phi
    double linear = 0.0;       // part of degree 1
    double grad_scale = 0.0;   // dx max(||zeta(T)||, ||eps^n Phi_n(phi)||)
    double primal = 0.0;       // J of the control generated by phi; J + D >= 0
    std::vector<double> grad;
    RealField root;  // W chi sigma
};

DualPoint dual_eval(const Context& c, std::vector<double> phiT) {
    const auto& pb = c.pb;
    const double p = pb.p();
    DualPoint out;
    RealField sigma;
    const auto phi = c.stepper.adjoint(std::span<const double>(phiT), &sigma);
    out.root = c.el_root(sigma);
    const auto h = c.power_of(out.root);
    // W^n |chi sigma|^p = chi sigma h
    double fstar = 0.0;
    for (std::size_t j = 0; j < c.nt; ++j) {
        for (std::size_t i = 0; i < c.nx; ++i) fstar += pb.chi[i] * sigma(j, i) * h(j, i);
    }
    fstar *= c.dt * c.dx / p;
    const auto zetaT = c.stepper.terminal(std::span<const double>(pb.zeta0), c.source(h));
    const double epsn = std::pow(pb.eps, pb.power);
    double g = 0.0, lin = 0.0;
    double za = 0.0, zb = 0.0;
    out.grad.resize(c.nx);
    for (std::size_t i = 0; i < c.nx; ++i) {
        g += std::pow(std::abs(phiT[i]), p);
        lin += pb.zeta0[i] * phi(0, i);
        const double pen = epsn * phi_power(phiT[i], pb.power);
        out.grad[i] = c.dx * (zetaT[i] + pen);
        za += zetaT[i] * zetaT[i];
        zb += pen * pen;
    }
    out.grad_scale = c.dx * std::sqrt(std::max(za, zb));
    double terminal = 0.0;
    for (double z : zetaT) terminal += std::pow(std::abs(z), pb.q());
    out.primal = fstar * p / pb.q() + c.dx * terminal / (pb.q() * pb.eps);
    out.homogeneous = fstar + c.dx * epsn * g / p;
    out.linear = c.dx * lin;
    out.D = out.homogeneous + out.linear;
    out.phiT = std::move(phiT);
    return out;
}

Eigen::MatrixXd dual_hessian(const Context& c, const DualPoint& at) {
    const auto& pb = c.pb;
    const int n = pb.power;
    const double epsn = std::pow(pb.eps, n);
    Eigen::MatrixXd H(c.nx, c.nx);
    RealField d(pb.grids);
    std::vector<double> e(c.nx, 0.0);
    const std::vector<double> zero(c.nx, 0.0);
    for (std::size_t m = 0; m < c.nx; ++m) {
        e[m] = 1.0;
        RealField sigma;
        c.stepper.adjoint(std::span<const double>(e), &sigma);
        e[m] = 0.0;
        for (std::size_t j = 0; j < c.nt; ++j) {
            for (std::size_t i = 0; i < c.nx; ++i) {
                const double r = at.root(j, i);
                const double slope = n == 1 ? 1.0 : n * ipow(std::abs(r), n - 1);
                d(j, i) = slope * c.w(j, i) * pb.chi[i] * sigma(j, i) * pb.chi[i];
            }
        }
        const auto dz = c.stepper.terminal(std::span<const double>(zero), d);
        for (std::size_t l = 0; l < c.nx; ++l) H(l, m) = c.dx * dz[l];
        const double a = std::abs(at.phiT[m]);
        H(m, m) += c.dx * epsn * (n == 1 ? 1.0 : n * ipow(a, n - 1));
    }
    return 0.5 * (H + H.transpose());
}

struct DualOutcome {
    DualPoint point;
    double gap = 0.0;
    int steps = 0;
    bool converged = false;
};

double grad_norm(const DualPoint& pt) {
    double s = 0.0;
    for (double g : pt.grad) s += g * g;
    return std::sqrt(s);
}

/// ||grad D|| relative to the size of its two competing parts.
double relative_gradient(const DualPoint& pt) {
    return pt.grad_scale == 0.0 ? 0.0 : grad_norm(pt) / pt.grad_scale;
}

/// (J + D) / J, nonnegative up to rounding.
double relative_gap(const DualPoint& pt) {
    return pt.primal == 0.0 ? 0.0 : std::abs(pt.primal + pt.D) / std::abs(pt.primal);
}

DualOutcome dual_newton(const Context& c, std::vector<double> start, int max_steps, double tol) {
    DualOutcome out;
    out.point = dual_eval(c, std::move(start));
    // D(t phi) = t^p A + t B is minimized at t = (-B / (p A))^{1/(p-1)}.
    if (out.point.linear < 0.0 && out.point.homogeneous > 0.0) {
        const double p = c.pb.p();
        const double t = std::pow(-out.point.linear / (p * out.point.homogeneous), 1.0 / (p - 1.0));
        auto phi = out.point.phiT;
        for (auto& v : phi) v *= t;
        auto scaled = dual_eval(c, std::move(phi));
        if (scaled.D < out.point.D) out.point = std::move(scaled);
    }
    const std::size_t nx = c.nx;
    const auto n = static_cast<Eigen::Index>(nx);
    int stalled = 0;
    for (int it = 0; it < max_steps; ++it) {
        auto& cur = out.point;
        const double before = grad_norm(cur);
        const double before_D = cur.D;
        if (relative_gradient(cur) <= 1e-3 * tol) {
            out.converged = true;
            return out;
        }
        const Eigen::Map<const Eigen::VectorXd> g(cur.grad.data(), n);
        const Eigen::MatrixXd H = dual_hessian(c, cur);
        const double diag = H.diagonal().cwiseAbs().maxCoeff();
        double mu = 0.0;
        Eigen::VectorXd dir;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd A = H;
            if (mu > 0.0) A.diagonal().array() += mu;
            Eigen::LLT<Eigen::MatrixXd> llt(A);
            if (llt.info() == Eigen::Success) {
                dir = -llt.solve(g);
                if (dir.allFinite() && g.dot(dir) < 0.0) break;
            }
            mu = mu == 0.0 ? std::max(diag, 1e-300) * 1e-12 : mu * 10.0;
            dir.resize(0);
        }
        if (dir.size() == 0) dir = -g;
        const double decrement = -g.dot(dir);
        auto trial_at = [&](double alpha) {
            std::vector<double> trial(nx);
            for (std::size_t i = 0; i < nx; ++i) trial[i] = cur.phiT[i] + alpha * dir[static_cast<Eigen::Index>(i)];
            return dual_eval(c, std::move(trial));
        };
        bool moved = false;
        // Close to the minimum the change in D drowns in rounding; a full Newton
        // step that shrinks the gradient is then accepted on that ground alone.
        auto full = trial_at(1.0);
        const bool flat = std::abs(full.D - cur.D) <= 1e-12 * std::abs(cur.D);
        if (full.D <= cur.D - 1e-4 * decrement || (flat && grad_norm(full) < grad_norm(cur))) {
            out.point = std::move(full);
            moved = true;
        } else {
            double alpha = 0.5;
            for (int ls = 0; ls < 60 && !moved; ++ls, alpha *= 0.5) {
                auto cand = trial_at(alpha);
                if (cand.D <= cur.D - 1e-4 * alpha * decrement) {
                    out.point = std::move(cand);
                    moved = true;
                }
            }
        }
        out.steps = it + 1;
        if (!moved) break;
        const bool progress = before_D - out.point.D > 1e-13 * std::abs(before_D) ||
                              grad_norm(out.point) < 0.9 * before;
        stalled = progress ? 0 : stalled + 1;
        if (stalled >= 3) break;
    }
    // For small eps the terminal state is a tiny difference of O(1) terms and the
    // gradient stalls at that rounding floor; the duality gap still certifies optimality.
    out.gap = relative_gap(out.point);
    out.converged = relative_gradient(out.point) <= tol || out.gap <= tol;
    return out;
}

void finish(const RumProblem& pb, RumResult& res) {
    const std::span<const double> zetaT = res.final.zeta.row(pb.grids.time.steps());
    res.terminal_q_norm = space_lp_norm(zetaT, pb.grids.space, pb.q());
    res.weighted_control_norm =
        weighted_lq_norm(res.final.h, control_norm_log_weight(pb.weights), pb.grids, pb.q());
}

RumResult solve_normalized(const RumProblem& pb, const RumOptions& opt) {
    const Context c(pb);
    RumResult res;
    RumIterate it = c.iterate(RealField(pb.grids), nullptr);
    res.history.push_back({it.J, it.residual});
    if (all_zero(pb.zeta0)) {
        res.final = std::move(it);
        res.converged = true;
        res.note = "zero data";
        return res;
    }

    double relax = opt.relax0;
    int slow = 0;
    const int budget = std::min(opt.fixed_point_budget, opt.max_iter);
    for (int n = 0; n < budget; ++n) {
        if (it.residual <= opt.tol) {
            res.converged = true;
            res.note = "fixed point";
            break;
        }
        RumIterate next;
        try {
            next = fixed_point_step(pb, it, relax, &relax);
        } catch (const StagnationError&) {
            break;
        }
        const double change = std::abs(it.J - next.J) / std::max(std::abs(it.J), 1e-300);
        const bool slow_step = next.residual > 0.5 * it.residual;
        it = std::move(next);
        res.history.push_back({it.J, it.residual});
        ++res.fixed_point_steps;
        if (change <= opt.tol * opt.tol || it.residual <= opt.tol) {
            res.converged = true;
            res.note = "fixed point";
            break;
        }
        slow = slow_step ? slow + 1 : 0;
        if (slow >= 3) break;
    }

    if (!res.converged) {
        const auto zetaT = it.zeta.row(pb.grids.time.steps());
        const auto outcome =
            dual_newton(c, c.adjoint_terminal(zetaT), std::max(opt.max_iter - res.fixed_point_steps, 1), opt.tol);
        res.dual_steps = outcome.steps;
        res.duality_gap = outcome.gap;
        const auto h = c.power_of(outcome.point.root);
        RumIterate cand = c.iterate(h, &outcome.point.root);
        cand.iteration = it.iteration + outcome.steps;
        if (cand.J <= it.J + 1e-12 * std::abs(it.J)) {
            it = std::move(cand);
            res.history.push_back({it.J, it.residual});
            res.converged = outcome.converged || it.residual <= opt.tol;
            res.note = "dual newton";
        } else {
            res.note = "dual candidate rejected";
        }
    }
    res.final = std::move(it);
    return res;
}

}  // namespace

RumProblem RumProblem::odd(const Grids& grids, int k, double eps, std::vector<double> zeta0,
                           const WeightSystem& weights, std::vector<double> chi) {
    return RumProblem{grids, 2 * k + 1, eps, ParabolicOperator::heat(), std::move(zeta0), weights,
                      std::move(chi)};
}

void RumProblem::validate() const {
    const std::size_t nx = grids.space.size();
    if (power < 1) throw ConfigError("rum: power must be >= 1");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("rum: eps must be positive");
    if (zeta0.size() != nx) throw ConfigError("rum: zeta0 has wrong length");
    if (chi.size() != nx) throw ConfigError("rum: chi has wrong length");
    if (weights.rho.size() != nx || weights.eta.size() != grids.time.nodes()) {
        throw ConfigError("rum: weight system does not match the grids");
    }
    for (double z : zeta0) {
        if (!std::isfinite(z)) throw ConfigError("rum: zeta0 is not finite");
    }
}

RealField rum_log_weight(const RumProblem& problem) {
    const double q = problem.q();
    const auto& ws = problem.weights;
    RealField f(problem.grids, -kInf);
    for (std::size_t j = 1; j < problem.grids.time.steps(); ++j) {
        for (std::size_t i = 0; i < f.space_nodes(); ++i) f(j, i) = ws.log_weight(j, i, 0.5 * q, 1.5 * q);
    }
    return f;
}

RealField control_norm_log_weight(const WeightSystem& ws) { return ws.log_weight_field(-0.5, -1.5); }

double evaluate_J(const RumProblem& problem, const RealField& h) {
    problem.validate();
    if (!matches(h, problem.grids)) throw ConfigError("evaluate_J: control shape does not match the grids");
    const Context c(problem);
    const auto zeta = c.stepper.forward(std::span<const double>(problem.zeta0), c.source(h));
    return c.J(h, zeta.row(c.nt));
}

RumIterate make_iterate(const RumProblem& problem, const RealField& h) {
    problem.validate();
    if (!matches(h, problem.grids)) throw ConfigError("rum: control shape does not match the grids");
    return Context(problem).iterate(h, nullptr);
}

double el_residual(const RumProblem& problem, const RumIterate& iterate) {
    return Context(problem).residual(iterate);
}

RumIterate fixed_point_step(const RumProblem& problem, const RumIterate& iterate, double relax,
                            double* used_relax) {
    if (!(relax > 0.0 && relax <= 1.0)) throw ConfigError("fixed_point_step: relax must lie in (0, 1]");
    const Context c(problem);
    const RealField target_root = c.el_root(iterate.sigma);
    const RealField target = c.power_of(target_root);
    for (int halving = 0; halving <= 30; ++halving) {
        RumIterate next;
        if (relax == 1.0) {
            next = c.iterate(target, &target_root);
        } else {
            RealField h = iterate.h;
            h *= 1.0 - relax;
            RealField t = target;
            t *= relax;
            h += t;
            next = c.iterate(h, nullptr);
        }
        next.iteration = iterate.iteration + 1;
        if (next.J <= iterate.J + 1e-14 * std::abs(iterate.J)) {
            if (used_relax) *used_relax = relax;
            return next;
        }
        relax *= 0.5;
    }
    throw StagnationError("fixed_point_step: J did not decrease after 30 halvings", iterate);
}

RumResult solve_rum(const RumProblem& problem, const RumOptions& options) {
    problem.validate();
    if (!(options.tol > 0.0)) throw ConfigError("solve_rum: tol must be positive");
    if (!(options.relax0 > 0.0 && options.relax0 <= 1.0)) throw ConfigError("solve_rum: relax0 must lie in (0, 1]");

    // Solve at a power-of-two normalization of zeta0 so that rescaling the data by
    // 2^{n m} rescales every output exactly.
    const double top = max_abs(problem.zeta0);
    int m = 0;
    if (top > 0.0) {
        const int e = std::ilogb(top);
        m = e >= 0 ? e / problem.power : -((-e + problem.power - 1) / problem.power);
    }
    const double c = std::ldexp(1.0, problem.power * m);
    const RumProblem normalized = scaled_problem(problem, 1.0 / c);
    RumResult res = solve_normalized(normalized, options);
    const double croot = std::ldexp(1.0, m);
    const double cJ = std::ldexp(1.0, m * (problem.power + 1));
    scale_iterate(res.final, c, croot, cJ);
    for (auto& h : res.history) h.J *= cJ;
    finish(problem, res);
    return res;
}

std::vector<double> gramian_apply(const RumProblem& problem, const std::vector<double>& phiT) {
    const Context c(problem);
    RealField sigma;
    c.stepper.adjoint(std::span<const double>(phiT), &sigma);
    const RealField h = c.el_root(sigma);
    const std::vector<double> zero(c.nx, 0.0);
    return c.stepper.terminal(std::span<const double>(zero), c.source(h));
}

RumResult linear_hum_oracle(const RumProblem& problem) {
    problem.validate();
    if (problem.power != 1) throw ConfigError("linear_hum_oracle: requires k = 0");
    const Context c(problem);
    const std::size_t nx = c.nx;
    const RealField none(problem.grids);
    const auto free_T = c.stepper.terminal(std::span<const double>(problem.zeta0), none);

    // CG in the dx-weighted inner product, for which eps I + Lambda is symmetric.
    std::vector<double> x(nx, 0.0), r(nx), d(nx);
    for (std::size_t i = 0; i < nx; ++i) r[i] = -free_T[i];
    d = r;
    const double rhs_norm = euclid(r);
    double rr = 0.0;
    for (double v : r) rr += v * v;
    bool done = rhs_norm == 0.0;
    const std::size_t cap = 10 * nx;
    for (std::size_t it = 0; it < cap && !done; ++it) {
        auto Ad = gramian_apply(problem, d);
        double dAd = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            Ad[i] += problem.eps * d[i];
            dAd += d[i] * Ad[i];
        }
        const double alpha = rr / dAd;
        double rr_new = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            x[i] += alpha * d[i];
            r[i] -= alpha * Ad[i];
            rr_new += r[i] * r[i];
        }
        if (std::sqrt(rr_new) <= 1e-13 * rhs_norm) {
            done = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < nx; ++i) d[i] = r[i] + beta * d[i];
    }
    if (!done) throw SolverError("linear_hum_oracle: conjugate gradients did not converge");

    RealField sigma;
    c.stepper.adjoint(std::span<const double>(x), &sigma);
    const RealField h = c.el_root(sigma);
    RumResult res;
    res.final = c.iterate(h, &h);
    res.history.push_back({res.final.J, res.final.residual});
    res.converged = true;
    res.note = "linear oracle";
    finish(problem, res);
    return res;
}

SweepTable epsilon_sweep(const RumProblem& base, const std::vector<double>& eps_list,
                         const RumOptions& options) {
    if (eps_list.empty()) throw ConfigError("epsilon_sweep: empty ladder");
    for (std::size_t n = 1; n < eps_list.size(); ++n) {
        if (!(eps_list[n] < eps_list[n - 1])) throw ConfigError("epsilon_sweep: eps ladder must be decreasing");
    }
    SweepTable table;
    for (double eps : eps_list) {
        RumProblem pb = base;
        pb.eps = eps;
        auto res = solve_rum(pb, options);
        table.rows.push_back({eps, res.terminal_q_norm, res.weighted_control_norm, res.final.J, res.converged});
        table.results.push_back(std::move(res));
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (const auto& r : table.rows) {
        if (!(r.terminal_q_norm > 0.0)) continue;
        const double x = std::log(r.eps), y = std::log(r.terminal_q_norm);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) table.slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    return table;
}

double xp_norm_diagnostic(const RealField& h, const Grids& grids, int power, double p) {
    if (!(p >= 2.0) || std::isinf(p)) throw DomainError("xp_norm_diagnostic: p must lie in [2, inf)");
    if (!matches(h, grids)) throw ConfigError("xp_norm_diagnostic: field shape does not match the grids");
    RealField r(grids);
    for (std::size_t n = 0; n < h.size(); ++n) r.values()[n] = phi_root(h.values()[n], power);
    const std::size_t nt = grids.time.steps();
    const std::size_t nx = grids.space.size();
    const double dt = grids.time.dt(), dx = grids.space.dx();
    const auto& wx = grids.space.norm_weights();
    const auto wt = grids.time.norm_weights();

    // Differences relative to max |r| keep the p-th powers representable.
    const double scale = max_abs(std::span<const double>(r.values()));
    if (scale == 0.0) return 0.0;
    double time_sum = 0.0, space_sum = 0.0;
    for (std::size_t j = 0; j <= nt; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (j < nt) {
                const double d = (r(j + 1, i) - r(j, i)) / dt / scale;
                time_sum += dt * wx[i] * std::pow(std::abs(d), p);
            }
            const double left = i == 0 ? 0.0 : r(j, i - 1);
            const double right = i + 1 == nx ? 0.0 : r(j, i + 1);
            const double lap = (right - 2.0 * r(j, i) + left) / (dx * dx) / scale;
            space_sum += wt[j] * wx[i] * std::pow(std::abs(lap), p);
        }
    }
    return lp_norm(r, grids, p) + scale * (std::pow(time_sum, 1.0 / p) + std::pow(space_sum, 1.0 / p));
}

}  // namespace rum
