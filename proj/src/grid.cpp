#include "rum/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rum/errors.hpp"
#include "rum/power.hpp"

namespace rum {

SpatialGrid::SpatialGrid(double length, std::size_t nx)
    : length_(length), nx_(nx), dx_(length / static_cast<double>(nx + 1)) {
    if (!(length > 0.0)) throw ConfigError("spatial grid: length must be positive");
    if (nx < 3) throw ConfigError("spatial grid: nx must be at least 3");
    weights_.assign(nx_, dx_);
    weights_.front() += 0.5 * dx_;
    weights_.back() += 0.5 * dx_;
}

std::vector<double> SpatialGrid::nodes() const {
    std::vector<double> xs(nx_);
    for (std::size_t i = 0; i < nx_; ++i) xs[i] = x(i);
    return xs;
}

TimeGrid::TimeGrid(double horizon, std::size_t nt, double t0)
    : horizon_(horizon), nt_(nt), t0_(t0), dt_(horizon / static_cast<double>(nt)) {
    if (!(horizon > 0.0)) throw ConfigError("time grid: horizon must be positive");
    if (nt < 4 || nt % 2 != 0) throw ConfigError("time grid: nt must be even and at least 4");
}

std::vector<double> TimeGrid::norm_weights() const {
    std::vector<double> w(nt_ + 1, dt_);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

TimeGrid TimeGrid::first_half() const { return TimeGrid(0.5 * horizon_, nt_ / 2, t0_); }

TimeGrid TimeGrid::second_half() const {
    return TimeGrid(0.5 * horizon_, nt_ / 2, t0_ + 0.5 * horizon_);
}

template <class T>
void Field<T>::set_row(std::size_t j, std::span<const T> v) {
    std::copy(v.begin(), v.end(), row(j).begin());
}

template <class T>
Field<T>& Field<T>::operator+=(const Field& o) {
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
    return *this;
}

template <class T>
Field<T>& Field<T>::operator-=(const Field& o) {
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
    return *this;
}

template <class T>
Field<T>& Field<T>::operator*=(T c) {
    for (auto& v : values_) v *= c;
    return *this;
}

template class Field<double>;
template class Field<Complex>;

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_abs(std::span<const Complex> v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

double clamped_exp(double x) { return x < -700.0 ? 0.0 : std::exp(x); }

namespace {

void check_exponent(double p) {
    if (std::isnan(p) || p < 1.0) {
        std::ostringstream os;
        os << "norm exponent must satisfy p >= 1 (got " << p << ")";
        throw DomainError(os.str());
    }
}

}  // namespace

template <class T>
double lp_norm(const Field<T>& field, const Grids& grids, double p) {
    check_exponent(p);
    if (std::isinf(p)) return max_abs(field);
    const auto& wx = grids.space.norm_weights();
    const auto wt = grids.time.norm_weights();
    // Scale by the max to keep |f|^p representable for large p.
    const double scale = max_abs(field);
    if (scale == 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < field.time_nodes(); ++j) {
        double inner = 0.0;
        for (std::size_t i = 0; i < field.space_nodes(); ++i) {
            inner += wx[i] * std::pow(std::abs(field(j, i)) / scale, p);
        }
        sum += wt[j] * inner;
    }
    return scale * std::pow(sum, 1.0 / p);
}

template <class T>
double space_lp_norm(std::span<const T> f, const SpatialGrid& grid, double p) {
    check_exponent(p);
    if (std::isinf(p)) return max_abs(f);
    const double scale = max_abs(f);
    if (scale == 0.0) return 0.0;
    const auto& wx = grid.norm_weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += wx[i] * std::pow(std::abs(f[i]) / scale, p);
    return scale * std::pow(sum, 1.0 / p);
}

template <class T>
double weighted_lq_norm(const Field<T>& field, const RealField& weight_log, const Grids& grids,
                        double q) {
    check_exponent(q);
    if (std::isinf(q)) throw DomainError("weighted norm requires a finite exponent");
    const auto& wx = grids.space.norm_weights();
    const auto wt = grids.time.norm_weights();
    // Work relative to the largest log-integrand so the sum stays representable.
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < field.size(); ++n) {
        const double a = std::abs(field.values()[n]);
        if (a == 0.0) continue;
        peak = std::max(peak, q * (weight_log.values()[n] + std::log(a)));
    }
    if (!std::isfinite(peak)) return peak > 0 ? peak : 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < field.time_nodes(); ++j) {
        for (std::size_t i = 0; i < field.space_nodes(); ++i) {
            const double a = std::abs(field(j, i));
            if (a == 0.0) continue;
            const double e = q * (weight_log(j, i) + std::log(a));
            if (e < -700.0) continue;
            sum += wt[j] * wx[i] * std::exp(e - peak);
        }
    }
    return std::exp((peak + std::log(sum)) / q);
}

template double lp_norm(const Field<double>&, const Grids&, double);
template double lp_norm(const Field<Complex>&, const Grids&, double);
template double space_lp_norm(std::span<const double>, const SpatialGrid&, double);
template double space_lp_norm(std::span<const Complex>, const SpatialGrid&, double);
template double weighted_lq_norm(const Field<double>&, const RealField&, const Grids&, double);
template double weighted_lq_norm(const Field<Complex>&, const RealField&, const Grids&, double);

double smoothstep(double tau) {
    if (tau <= 0.0) return 0.0;
    if (tau >= 1.0) return 1.0;
    const double t4 = tau * tau * tau * tau;
    return t4 * (35.0 + tau * (-84.0 + tau * (70.0 - 20.0 * tau)));
}

Cutoff make_cutoff(const SpatialGrid& grid, Interval omega, Interval omega1, int r) {
    if (r < 1) throw ConfigError("cutoff: power r must be a positive integer");
    const double dx = grid.dx();
    if (!(omega.lo > 0.0 && omega.hi < grid.length() && omega.lo < omega.hi)) {
        throw ConfigError("cutoff: omega must lie strictly inside (0, L)");
    }
    if (!(omega1.lo < omega1.hi)) throw ConfigError("cutoff: omega1 is empty");
    // Two cells of zeros inside omega, then at least one cell of transition.
    const double zero_band = 2.0 * dx;
    const double min_margin = 3.0 * dx * (1.0 - 1e-12);
    if (omega1.lo - omega.lo < min_margin) {
        throw ConfigError("cutoff: omega1 left end too close to omega left end (margin < 3 cells)");
    }
    if (omega.hi - omega1.hi < min_margin) {
        throw ConfigError("cutoff: omega1 right end too close to omega right end (margin < 3 cells)");
    }

    Cutoff c;
    c.power = r;
    c.omega = omega;
    c.omega1 = omega1;
    const std::size_t nx = grid.size();
    c.sigma.assign(nx, 0.0);
    c.chi.assign(nx, 0.0);
    const double left0 = omega.lo + zero_band;
    const double right0 = omega.hi - zero_band;
    bool seen = false;
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = grid.x(i);
        double s = 0.0;
        if (x >= omega1.lo && x <= omega1.hi) {
            s = 1.0;
        } else if (x > left0 && x < omega1.lo) {
            s = smoothstep((x - left0) / (omega1.lo - left0));
        } else if (x > omega1.hi && x < right0) {
            s = smoothstep((right0 - x) / (right0 - omega1.hi));
        }
        c.sigma[i] = s;
        c.chi[i] = ipow(s, r);
        if (s > 0.0) {
            if (!seen) c.support_first = i;
            c.support_last = i;
            seen = true;
        }
    }
    if (!seen) throw ConfigError("cutoff: omega1 contains no grid node");
    return c;
}

std::vector<double> indicator(const SpatialGrid& grid, Interval w) {
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = w.contains(grid.x(i)) ? 1.0 : 0.0;
    return v;
}

}  // namespace rum
