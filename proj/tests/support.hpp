#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rum/grid.hpp"

namespace rum::testing {

inline Grids unit_grids(std::size_t nx = 63, std::size_t nt = 128, double T = 1.0) {
    return Grids{SpatialGrid(1.0, nx), TimeGrid(T, nt)};
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

inline RealField random_field(std::mt19937_64& rng, const Grids& g, double scale = 1.0) {
    RealField f(g);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& x : f.values()) x = u(rng);
    return f;
}

inline std::vector<double> sine_mode(const SpatialGrid& g, int mode = 1) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        v[i] = std::sin(mode * std::numbers::pi * g.x(i) / g.length());
    }
    return v;
}

inline double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max({den, std::abs(a[i]), std::abs(b[i])});
    }
    return den == 0.0 ? num : num / den;
}

}  // namespace rum::testing
