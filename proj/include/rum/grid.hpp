#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rum {

using Complex = std::complex<double>;

/// Open interval (lo, hi) of the spatial domain.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x > lo && x < hi; }
    double center() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

/// Uniform grid of the interior nodes x_i = i*dx, i = 1..nx, of (0, L).
/// Homogeneous Dirichlet values at x = 0 and x = L are implicit.
class SpatialGrid {
public:
    SpatialGrid(double length, std::size_t nx);

    double length() const { return length_; }
    std::size_t size() const { return nx_; }
    double dx() const { return dx_; }
    /// Coordinate of storage index i (node i+1).
    double x(std::size_t i) const { return static_cast<double>(i + 1) * dx_; }
    std::vector<double> nodes() const;

    /// Quadrature weights for norms: composite trapezoid on [0, L] with the
    /// edge values taken from the adjacent interior node. Sums to L.
    const std::vector<double>& norm_weights() const { return weights_; }

private:
    double length_;
    std::size_t nx_;
    double dx_;
    std::vector<double> weights_;
};

/// Uniform time grid t_j = t0 + j*dt, j = 0..nt, over (t0, t0 + horizon).
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t nt, double t0 = 0.0);

    double horizon() const { return horizon_; }
    double start() const { return t0_; }
    double end() const { return t0_ + horizon_; }
    std::size_t steps() const { return nt_; }
    std::size_t nodes() const { return nt_ + 1; }
    double dt() const { return dt_; }
    double t(std::size_t j) const { return t0_ + static_cast<double>(j) * dt_; }

    /// Composite trapezoid weights over the nt+1 nodes.
    std::vector<double> norm_weights() const;

    /// The two halves (t0, t0+T/2) and (t0+T/2, t0+T); nt must be even.
    TimeGrid first_half() const;
    TimeGrid second_half() const;

private:
    double horizon_;
    std::size_t nt_;
    double t0_;
    double dt_;
};

struct Grids {
    SpatialGrid space;
    TimeGrid time;
};

/// Space field: values at the interior nodes.
template <class T>
using SpaceVector = std::vector<T>;

/// Grid function on (time nodes) x (interior space nodes), row-major in time.
template <class T>
class Field {
public:
    using value_type = T;

    Field() = default;
    Field(std::size_t time_nodes, std::size_t space_nodes, T fill = T{})
        : nt1_(time_nodes), nx_(space_nodes), values_(time_nodes * space_nodes, fill) {}
    explicit Field(const Grids& g, T fill = T{}) : Field(g.time.nodes(), g.space.size(), fill) {}

    std::size_t time_nodes() const { return nt1_; }
    std::size_t space_nodes() const { return nx_; }
    std::size_t size() const { return values_.size(); }

    T& operator()(std::size_t j, std::size_t i) { return values_[j * nx_ + i]; }
    const T& operator()(std::size_t j, std::size_t i) const { return values_[j * nx_ + i]; }

    std::span<T> row(std::size_t j) { return {values_.data() + j * nx_, nx_}; }
    std::span<const T> row(std::size_t j) const { return {values_.data() + j * nx_, nx_}; }
    void set_row(std::size_t j, std::span<const T> v);

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    bool same_shape(const Field& o) const { return nt1_ == o.nt1_ && nx_ == o.nx_; }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(T c);

private:
    std::size_t nt1_ = 0;
    std::size_t nx_ = 0;
    std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

template <class T>
Field<T> operator+(Field<T> a, const Field<T>& b) { return a += b; }
template <class T>
Field<T> operator-(Field<T> a, const Field<T>& b) { return a -= b; }
template <class T>
Field<T> operator*(T c, Field<T> a) { return a *= c; }

/// Validate a SpatialGrid x TimeGrid pair against a field's shape.
template <class T>
bool matches(const Field<T>& f, const Grids& g) {
    return f.time_nodes() == g.time.nodes() && f.space_nodes() == g.space.size();
}

/// Discrete ||f||_{L^p(Q)} by space-time trapezoid quadrature; p = +inf gives max |f|.
template <class T>
double lp_norm(const Field<T>& field, const Grids& grids, double p);

/// Discrete ||f||_{L^p(Omega)} of a space field.
template <class T>
double space_lp_norm(std::span<const T> f, const SpatialGrid& grid, double p);

/// ( quad exp(q*weight_log) |f|^q )^{1/q}; combined exponents below -700 contribute 0.
template <class T>
double weighted_lq_norm(const Field<T>& field, const RealField& weight_log, const Grids& grids,
                        double q);

double max_abs(std::span<const double> v);
double max_abs(std::span<const Complex> v);
template <class T>
double max_abs(const Field<T>& f) { return max_abs(std::span<const T>(f.values())); }

/// exp(x), or exactly 0 when x < -700.
double clamped_exp(double x);

/// Smooth cutoff chi = sigma^r, with sigma = 0 outside omega (2-cell margin), 1 on omega1.
struct Cutoff {
    std::vector<double> sigma;
    std::vector<double> chi;
    int power = 1;
    Interval omega;
    Interval omega1;
    /// First and last storage index where sigma > 0.
    std::size_t support_first = 0;
    std::size_t support_last = 0;

    bool in_support(std::size_t i) const { return i >= support_first && i <= support_last; }
};

/// Septic smoothstep: 0 at 0, 1 at 1, three vanishing derivatives at both ends.
double smoothstep(double tau);

/// Build a cutoff on omega/omega1. Throws ConfigError naming the offending side
/// when omega1 is not nested in omega with a margin of at least 3 cells
/// (2 zero cells plus one transition cell), or omega is not inside (0, L).
Cutoff make_cutoff(const SpatialGrid& grid, Interval omega, Interval omega1, int r);

/// Indicator of an open interval on the nodes.
std::vector<double> indicator(const SpatialGrid& grid, Interval w);

}  // namespace rum
