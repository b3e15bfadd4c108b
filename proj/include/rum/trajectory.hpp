#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rum/carleman.hpp"
#include "rum/grid.hpp"
#include "rum/heat.hpp"
#include "rum/solver.hpp"

namespace rum {

/// Nonlinearities of
///   u' - u_xx = f1(u, v) + h 1_omega,   v' - v_xx = f2(u, v) = g1(u) g2(v),
/// with f1(0, v) = 0, g1 vanishing to order 2k at 0 and g2(0) != 0.
struct NonlinearitySpec {
    std::string name;
    int k = 1;
    std::function<double(double, double)> f1;
    std::function<double(double)> g1;
    std::function<double(double)> g2;
    /// g1^{(2k+1)}; when empty it is estimated by Richardson-extrapolated central differences.
    std::function<double(double)> g1_derivative;

    double f2(double u, double v) const { return g1(u) * g2(v); }
    /// Supplied derivative, or the finite-difference estimate.
    double derivative(double y) const;

    /// Built-ins: "cubic" (g1 = u^3, g2 = 1, f1 = 0), "cubic-plus-quintic"
    /// (g1 = u^3 + u^5, g2 = 1 + v, f1 = 0), "reaction-2k1" (g1 = u^{2k+1}, g2 = 1,
    /// f1 = -u^{2k+1}). ConfigError on an unknown name.
    static NonlinearitySpec catalog(const std::string& name, int k = 1);
};

/// One term c u^i v^j of f1.
struct MixedTerm {
    int u_power = 1;
    int v_power = 0;
    double coef = 0.0;
};

/// Polynomial nonlinearities from coefficient tables (index = power).
/// The derivative of g1 is taken exactly.
NonlinearitySpec polynomial_nonlinearity(const std::string& name, int k, const std::vector<double>& g1_coefs,
                                         const std::vector<double>& g2_coefs, const std::vector<MixedTerm>& f1_terms);

/// m-th derivative by central differences with steps h, h/2, h/4 and two Richardson levels.
double richardson_derivative(const std::function<double(double)>& f, double x, int m, double h = 1e-2);

/// Validated neighborhoods: the remainder integrand of g1 keeps one sign for |x| < a,
/// and |g2(v)| >= |g2(0)|/2 for |v| < b.
struct Neighborhood {
    double a = 0.0;
    double b = 0.0;
    double g1_derivative_at_0 = 0.0;
};

/// Checks f1(0, v) = 0 on a v-grid, g2(0) != 0, and that g1 and its first 2k derivatives
/// vanish at 0; shrinks a and b from 1 by halving. Throws ConfigError naming the failure.
Neighborhood certify_nonlinearity(const NonlinearitySpec& spec);

/// g~1(x) = (int_0^1 (1-u)^{2k}/(2k)! g1^{(2k+1)}(ux) du)^{1/(2k+1)} x, so that g~1^{2k+1} = g1.
/// DomainError outside the validated neighborhood.
double g1_tilde(const NonlinearitySpec& spec, double x);
double g1_tilde(const NonlinearitySpec& spec, const Neighborhood& nb, double x);

/// Solution of g~1(x) = y on (-a, a); DomainError when y is outside the range.
double g1_tilde_inverse(const NonlinearitySpec& spec, double y);
double g1_tilde_inverse(const NonlinearitySpec& spec, const Neighborhood& nb, double y);

/// eps theta(t) b(x): theta is a smooth plateau equal to 1 on [T/8, 3T/8] and 0 outside
/// (T/32, 15T/32); b is the cutoff of (omega, omega0). ConfigError when omega0 is not
/// nested in omega with the cutoff margin.
RealField build_bump(const Grids& grids, Interval omega, Interval omega0, double eps);

struct PicardResult {
    RealField v;
    int iterations = 0;
};

/// v <- forward(v-op, 0, f2(u_bar, v)) until successive iterates differ by <= tol in max norm.
/// SolverError after 50 iterations or on divergence.
PicardResult picard_solve_v1(const NonlinearitySpec& spec, const RealField& u_bar, const Grids& grids, double tol,
                             const ParabolicOperator& v_op = ParabolicOperator::heat());

struct TrajectoryConfig {
    Grids grids{SpatialGrid(1.0, 63), TimeGrid(1.0, 256)};
    Interval omega{0.3, 0.7};
    Interval omega0{0.4, 0.6};
    Interval omega1{0.4, 0.6};
    ParabolicOperator u_op = ParabolicOperator::heat();
    ParabolicOperator v_op = ParabolicOperator::heat();
    double eps_rum = 1e-6;
    double picard_tol = 1e-15;
    /// ||f2(u2, v2) - H||_inf <= consistency_tol * ||H||_inf.
    double consistency_tol = 1e-10;
    WeightOptions weights;
    RumOptions rum;
};

struct TrajectoryResult {
    explicit TrajectoryResult(const Grids& g) : grids(g) {}

    Grids grids;
    double eps = 0.0;
    RealField u, v, h;
    int picard_iterations = 0;
    double v_mid = 0.0;  // ||v1(T/2)||_inf
    bool rum_converged = false;
    double consistency_error = 0.0;
    /// min of d f2 / du (u, v) over (T/8, 3T/8) x omega0, central differences.
    double certificate = 0.0;
    double terminal_u = 0.0, terminal_v = 0.0;
    /// Nonlinear re-simulation from (0, 0) with h against (u, v), relative to their size.
    double resimulation_error = 0.0;
    std::vector<std::string> flags;

    bool ok() const { return flags.empty(); }
};

/// Coupled nonlinear forward simulation with sources at the old time level.
struct NonlinearState {
    RealField u, v;
};
NonlinearState simulate_nonlinear(const NonlinearitySpec& spec, const Grids& grids, const ParabolicOperator& u_op,
                                  const ParabolicOperator& v_op, std::span<const double> u0,
                                  std::span<const double> v0, const RealField& h);

/// Reference trajectory from (0, 0) to (0, 0): bump and Picard on (0, T/2), RUM on the
/// v-equation and g~1 inversion on (T/2, T). DomainError (advising a smaller eps) when
/// the inversion leaves the validated neighborhood.
TrajectoryResult build_reference_trajectory(const NonlinearitySpec& spec, double eps,
                                            const TrajectoryConfig& config = {});

}  // namespace rum
