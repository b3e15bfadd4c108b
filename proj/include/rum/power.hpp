#pragma once

#include <cmath>
#include <complex>

namespace rum {

/// x^n by repeated multiplication, left to right.
inline double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

/// Phi_n(x) = |x|^{n-1} x. For odd n this is x^n.
inline double phi_power(double x, int n) {
    return ipow(std::abs(x), n - 1) * x;
}

/// Inverse of Phi_n on the real line: sign(x) |x|^{1/n}.
/// For odd n this is the odd root, the global inverse of x -> x^n.
inline double phi_root(double x, int n) {
    if (n == 1 || x == 0.0) return x;
    const double a = std::abs(x);
    const double r = (n == 3) ? std::cbrt(a) : std::pow(a, 1.0 / n);
    return std::signbit(x) ? -r : r;
}

/// sign(x) |x|^{1/n} for odd n.
inline double odd_root(double x, int n) { return phi_root(x, n); }

}  // namespace rum
