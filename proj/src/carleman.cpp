#include "rum/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rum/errors.hpp"

namespace rum {

ExponentTable exponent_table(int dimension, int k) {
    if (dimension < 1 || k < 1) throw ConfigError("exponent_table: need N >= 1 and k >= 1");
    ExponentTable t;
    t.dimension = dimension;
    t.k = k;
    const double target = 2.0 * k + 2.0;
    const double crit = dimension + 2.0;
    t.p.push_back(2.0);
    int n = 0;
    while (true) {
        const double prev = t.p.back();
        double next;
        if (std::abs(prev - crit) <= 1e-12 * crit) {
            next = 2.0 * prev;
        } else if (prev < crit) {
            next = crit * prev / (crit - prev);
        } else {
            next = std::numeric_limits<double>::infinity();
        }
        t.p.push_back(next);
        if (next > target && target >= prev) break;
        ++n;
    }
    t.n0 = n;
    t.m = 4 * n + 1;
    return t;
}

double WeightSystem::log_weight(std::size_t j, std::size_t i, double a, double b) const {
    const double e = eta[j];
    if (std::isinf(e)) return a > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    const double se = s * e;
    return -a * se * rho[i] + b * std::log(se);
}

RealField WeightSystem::log_weight_field(double a, double b) const {
    RealField f(grids);
    for (std::size_t j = 0; j < f.time_nodes(); ++j) {
        for (std::size_t i = 0; i < f.space_nodes(); ++i) f(j, i) = log_weight(j, i, a, b);
    }
    return f;
}

WeightSystem build_weights(const Grids& grids, Interval omega1, int k, const WeightOptions& opts) {
    const double L = grids.space.length();
    if (!(omega1.lo > 0.0 && omega1.hi < L && omega1.lo < omega1.hi)) {
        throw ConfigError("build_weights: omega1 must lie strictly inside (0, L)");
    }
    if (!(opts.s >= 1.0)) throw ConfigError("build_weights: s must be >= 1");
    if (!(opts.lambda > 0.0)) throw ConfigError("build_weights: lambda must be positive");
    if (!(opts.profile_height > 0.0)) throw ConfigError("build_weights: profile height must be positive");
    if (k < 0) throw ConfigError("build_weights: k must be >= 0");

    WeightSystem ws(grids);
    ws.s = opts.s;
    ws.lambda = opts.lambda;
    ws.k = k;
    ws.m = k >= 1 ? exponent_table(1, k).m : 1;
    ws.omega1 = omega1;

    // xi is a monotone quadratic reparametrization of [0, L] with xi(c) = L/2,
    // so psi = xi (L - xi) is quartic with its only critical point at c.
    const double c = omega1.center();
    const double kappa = (0.5 * L - c) / (c * (L - c));
    if (std::abs(kappa) * L >= 1.0) {
        throw ConfigError("build_weights: omega1 center too close to the boundary for the profile");
    }
    const std::size_t nx = grids.space.size();
    ws.psi.resize(nx);
    ws.rho.resize(nx);
    const double norm = opts.profile_height / (0.25 * L * L);
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = grids.space.x(i);
        const double xi = x + kappa * x * (L - x);
        ws.psi[i] = norm * xi * (L - xi);
    }
    const double top = std::exp(2.0 * opts.lambda * opts.profile_height);
    for (std::size_t i = 0; i < nx; ++i) ws.rho[i] = top - std::exp(opts.lambda * ws.psi[i]);
    ws.rho_boundary = top - 1.0;

    const std::size_t nodes = grids.time.nodes();
    ws.eta.assign(nodes, std::numeric_limits<double>::infinity());
    for (std::size_t j = 1; j + 1 < nodes; ++j) {
        const double a = grids.time.t(j) - grids.time.start();
        const double b = grids.time.end() - grids.time.t(j);
        ws.eta[j] = 1.0 / (a * b);
    }
    ws.omega1_indicator = indicator(grids.space, omega1);
    return ws;
}

namespace {

/// Streaming log-sum-exp accumulator.
class LogSum {
public:
    void add(double log_term) {
        if (log_term == -std::numeric_limits<double>::infinity()) return;
        if (empty_) {
            max_ = log_term;
            sum_ = 1.0;
            empty_ = false;
        } else if (log_term > max_) {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        } else {
            sum_ += std::exp(log_term - max_);
        }
    }
    bool empty() const { return empty_; }
    double log_value() const {
        return empty_ ? -std::numeric_limits<double>::infinity() : max_ + std::log(sum_);
    }

private:
    bool empty_ = true;
    double max_ = 0.0;
    double sum_ = 0.0;
};

double log_abs(double v) {
    return v == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(v));
}

double quotient(const LogSum& num, const LogSum& den) {
    if (num.empty()) return 0.0;
    if (den.empty()) return std::numeric_limits<double>::infinity();
    const double d = num.log_value() - den.log_value();
    return d > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(d);
}

bool all_zero(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

/// Shared body of the two Carleman quotients:
///   LHS = sum e^{-a s rho eta} ((s eta)^{b_val} |phi|^p + (s eta)^{b_grad} |phi_x|^p) over Q
///   RHS = sum e^{-a s rho eta} (s eta)^{b_obs} |phi|^p over omega1
double carleman_quotient(const WeightSystem& ws, std::span<const double> phiT,
                         const ParabolicOperator& op, double a, double p, double b_val,
                         double b_grad, double b_obs) {
    if (all_zero(phiT)) return 0.0;
    const auto phi = adjoint_solve(op, phiT, ws.grids);
    const std::size_t nt = ws.grids.time.steps();
    const std::size_t nx = ws.grids.space.size();
    const double dx = ws.grids.space.dx();
    LogSum lhs, rhs;
    for (std::size_t j = 1; j < nt; ++j) {
        const double se = ws.s * ws.eta[j];
        const double lse = std::log(se);
        for (std::size_t i = 0; i < nx; ++i) {
            const double base = -a * se * ws.rho[i] + p * log_abs(phi(j, i));
            lhs.add(base + b_val * lse);
            if (ws.omega1_indicator[i] != 0.0) rhs.add(base + b_obs * lse);
        }
        // Gradient on the nx+1 cell faces, with zero Dirichlet values outside.
        for (std::size_t f = 0; f <= nx; ++f) {
            const double left = f == 0 ? 0.0 : phi(j, f - 1);
            const double right = f == nx ? 0.0 : phi(j, f);
            const double rl = f == 0 ? ws.rho_boundary : ws.rho[f - 1];
            const double rr = f == nx ? ws.rho_boundary : ws.rho[f];
            const double grad = (right - left) / dx;
            lhs.add(-a * se * 0.5 * (rl + rr) + p * log_abs(grad) + b_grad * lse);
        }
    }
    return quotient(lhs, rhs);
}

}  // namespace

double carleman_ratio_l2(const WeightSystem& ws, std::span<const double> phiT,
                         const ParabolicOperator& op) {
    return carleman_quotient(ws, phiT, op, 1.0, 2.0, 3.0, 1.0, 3.0);
}

double carleman_ratio_l2kp2(const WeightSystem& ws, std::span<const double> phiT,
                            const ParabolicOperator& op) {
    const double k1 = ws.k + 1.0;
    const double m = ws.m;
    return carleman_quotient(ws, phiT, op, k1, 2.0 * k1, -k1 * m, -k1 * (m + 2.0), 3.0 * k1);
}

double observability_ratio(const WeightSystem& ws, std::span<const double> chi,
                           std::span<const double> phiT, const ParabolicOperator& op) {
    if (all_zero(phiT)) return 0.0;
    const auto phi = adjoint_solve(op, phiT, ws.grids);
    const double k1 = ws.k + 1.0;
    const double p = 2.0 * k1;
    const std::size_t nt = ws.grids.time.steps();
    const std::size_t nx = ws.grids.space.size();
    const double dt = ws.grids.time.dt();
    LogSum num, den;
    for (std::size_t i = 0; i < nx; ++i) num.add(p * log_abs(phi(0, i)));
    for (std::size_t j = 1; j < nt; ++j) {
        const double se = ws.s * ws.eta[j];
        for (std::size_t i = 0; i < nx; ++i) {
            den.add(std::log(dt) + p * log_abs(chi[i]) - k1 * se * ws.rho[i] + 3.0 * k1 * std::log(se) +
                    p * log_abs(phi(j, i)));
        }
    }
    return quotient(num, den);
}

CarlemanSweep carleman_sweep(const Grids& grids, Interval omega, Interval omega1, int k,
                             std::span<const double> s_values, const WeightOptions& base,
                             int draws, std::uint64_t seed) {
    const auto cutoff = make_cutoff(grids.space, omega, omega1, 2 * k + 1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::vector<double>> data(static_cast<std::size_t>(draws),
                                          std::vector<double>(grids.space.size()));
    for (auto& d : data) {
        for (auto& v : d) v = dist(rng);
    }
    CarlemanSweep out;
    for (double s : s_values) {
        WeightOptions opts = base;
        opts.s = s;
        const auto ws = build_weights(grids, omega1, k, opts);
        CarlemanRecord rec;
        rec.s = s;
        for (const auto& d : data) {
            rec.l2 = std::max(rec.l2, carleman_ratio_l2(ws, d));
            rec.l2kp2 = std::max(rec.l2kp2, carleman_ratio_l2kp2(ws, d));
            rec.observability = std::max(rec.observability, observability_ratio(ws, cutoff.chi, d));
        }
        out.records.push_back(rec);
    }
    for (std::size_t n = 1; n < out.records.size(); ++n) {
        if (out.records[n].observability < out.records[out.best].observability) out.best = n;
    }
    return out;
}

}  // namespace rum
