#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rum/grid.hpp"
#include "rum/heat.hpp"

namespace rum {

/// Sobolev exponent ladder p_{-1} = 2, p_n = (N+2) p_{n-1} / (N+2 - p_{n-1}) (or 2 p_{n-1}
/// at equality, +inf beyond), stopped at the first index n0 with p_{n0} > 2k+2.
struct ExponentTable {
    int dimension = 1;
    int k = 1;
    std::vector<double> p;  // p[0] = p_{-1}, ..., p[n0+1] = p_{n0}
    int n0 = 0;
    int m = 1;  // 4 n0 + 1
};

ExponentTable exponent_table(int dimension, int k);

/// Carleman data on one space-time cylinder. All weights are exposed in log space.
///   psi(x) = quartic, zero at 0 and L, single maximum at the center of omega1
///   rho(x) = exp(2 lambda max psi) - exp(lambda psi(x))
///   eta(t) = 1 / ((t - t0)(t1 - t)), +inf at the two end nodes
struct WeightSystem {
    explicit WeightSystem(const Grids& g) : grids(g) {}

    Grids grids;
    double s = 1.0;
    double lambda = 1.0;
    int k = 1;
    int m = 1;
    Interval omega1;
    std::vector<double> psi;
    std::vector<double> rho;
    double rho_boundary = 0.0;  // rho where psi = 0
    std::vector<double> eta;    // per time node
    std::vector<double> omega1_indicator;

    /// log( exp(-a s rho eta) (s eta)^b ) at (j, i); -inf at the end nodes when a > 0.
    double log_weight(std::size_t j, std::size_t i, double a, double b) const;
    /// Same, sampled on the whole grid.
    RealField log_weight_field(double a, double b) const;
};

/// Defaults: s = 5 is the argmin of the empirical observability constant over
/// s in {5, 10, 20, 40} on the default geometry (see carleman_sweep).
struct WeightOptions {
    double s = 5.0;
    double lambda = 1.0;
    /// max psi; the scale of rho is roughly lambda * profile_height.
    double profile_height = 0.1;
};

/// Throws ConfigError when omega1 touches the boundary, s < 1, or the quartic
/// profile cannot peak at the center of omega1.
WeightSystem build_weights(const Grids& grids, Interval omega1, int k, const WeightOptions& opts);

/// Weighted L^2 Carleman quotient
///   int_Q e^{-s rho eta} ((s eta)^3 |phi|^2 + s eta |phi_x|^2)  /  int_{omega1} e^{-s rho eta} (s eta)^3 |phi|^2
/// for the adjoint solution with terminal data phiT. Zero data gives 0; an
/// underflowing denominator gives +inf.
double carleman_ratio_l2(const WeightSystem& ws, std::span<const double> phiT,
                         const ParabolicOperator& op = ParabolicOperator::heat());

/// L^{2k+2} version with powers -(k+1)m, -(k+1)(m+2) on the left and 3(k+1) on the right.
double carleman_ratio_l2kp2(const WeightSystem& ws, std::span<const double> phiT,
                            const ParabolicOperator& op = ParabolicOperator::heat());

/// ||phi(0)||_{2k+2}^{2k+2} / int chi^{2k+2} e^{-(k+1) s rho eta} (s eta)^{3(k+1)} |phi|^{2k+2}.
double observability_ratio(const WeightSystem& ws, std::span<const double> chi,
                           std::span<const double> phiT,
                           const ParabolicOperator& op = ParabolicOperator::heat());

/// Empirical constants (max over random draws) at one value of s.
struct CarlemanRecord {
    double s = 0.0;
    double l2 = 0.0;
    double l2kp2 = 0.0;
    double observability = 0.0;
};

struct CarlemanSweep {
    std::vector<CarlemanRecord> records;
    /// Index of the s with the smallest empirical observability constant.
    std::size_t best = 0;
};

/// Monte-Carlo recording over `draws` terminal data with entries uniform in [-1, 1].
CarlemanSweep carleman_sweep(const Grids& grids, Interval omega, Interval omega1, int k,
                             std::span<const double> s_values, const WeightOptions& base,
                             int draws, std::uint64_t seed);

}  // namespace rum
