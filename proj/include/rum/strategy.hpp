#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rum/carleman.hpp"
#include "rum/grid.hpp"
#include "rum/heat.hpp"
#include "rum/solver.hpp"

namespace rum {

/// How u enters the v-equation.
enum class Coupling {
    signed_power,  // Phi_n(u) = |u|^{n-1} u
    monomial,      // u^n
};

/// Coupled system
///   u' + K_u u = h 1_omega,   v' + K_v v = coupling(u),   (u, v)(0) = (u0, v0)
/// on (0, T), discretized by the same implicit Euler stepping as the heat module
/// (sources taken at the old time level).
struct PowerSystemConfig {
    int power = 3;
    Coupling coupling = Coupling::signed_power;
    ParabolicOperator u_op = ParabolicOperator::heat();
    ParabolicOperator v_op = ParabolicOperator::heat();
    Interval omega{0.3, 0.7};
    Interval omega1{0.4, 0.6};
    Grids grids{SpatialGrid(1.0, 63), TimeGrid(1.0, 256)};
    std::vector<double> u0;
    std::vector<double> v0;
    double eps1 = 1e-8;  // phase-1 penalty (linear)
    double eps2 = 1e-6;  // phase-2 penalty
    /// Phase 1 is flagged when ||u1(T/2)||_inf > phase1_tol * ||u0||_inf.
    double phase1_tol = 1e-6;
    WeightOptions weights;
    RumOptions rum;

    /// nx = 63, nt = 256, T = 1, u0 = sin(pi x), v0 = x(1 - x).
    static PowerSystemConfig defaults(int power);
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// One half-interval of the two-phase strategy.
template <class T>
struct PhaseReport {
    PhaseReport(int phase_tag, const Grids& g) : phase(phase_tag), grids(g) {}

    int phase = 1;
    Grids grids;
    Field<T> control;  // physical control, already localized to omega
    Field<T> u;
    Field<T> v;
    /// Phase 2 only: the source H fed to the v-equation by the construction and
    /// the constructed u2 (before the free phase-1 residual is added).
    RealField coupling_source;
    Field<T> constructed;
    double norm_2 = 0.0, norm_4 = 0.0, norm_8 = 0.0, norm_inf = 0.0;  // of the control
    /// Phase 1: ||u(T/2)||_inf. Phase 2: max(||u(T)||_inf, ||v(T)||_inf).
    double terminal = 0.0;
    bool rum_converged = false;
    std::vector<std::string> flags;
};

template <class T>
struct StrategyReport {
    StrategyReport(PhaseReport<double> p1, PhaseReport<T> p2, const Grids& g)
        : phase1(std::move(p1)), phase2(std::move(p2)), grids(g) {}

    PhaseReport<double> phase1;
    PhaseReport<T> phase2;
    Grids grids;
    int power = 3;
    Field<T> control;  // concatenated over (0, T)
    Field<T> u;
    Field<T> v;
    std::vector<double> u0, v0;
    double final_u = 0.0;  // ||u(T)||_inf
    double final_v = 0.0;  // ||v(T)||_inf
    /// max |H - coupling(u2)| / ||H||_inf over phase 2 (0 when H = 0).
    double coupling_identity_error = 0.0;
    /// max |forward(u-op, u2(T/2), h2) - u2-part| / max |u|.
    double reconstruction_error = 0.0;
    /// max difference between a full coupled re-simulation from (u0, v0) with
    /// `control` and the recorded trajectory, relative to the trajectory size.
    double resimulation_error = 0.0;
    std::vector<std::string> flags;

    bool ok() const { return flags.empty() && phase1.flags.empty() && phase2.flags.empty(); }
    double final_residual() const { return std::max(final_u, final_v); }
};

using RealStrategyReport = StrategyReport<double>;
using ComplexStrategyReport = StrategyReport<Complex>;

/// Coupled forward simulation with explicit coupling source.
template <class T>
struct CoupledState {
    Field<T> u;
    Field<T> v;
};

template <class T>
CoupledState<T> simulate_coupled(const ParabolicOperator& u_op, const ParabolicOperator& v_op, int power,
                                 Coupling coupling, const Grids& grids, std::span<const T> u0,
                                 std::span<const T> v0, const Field<T>& control);

/// Penalized HUM (k = 0) on the u-equation over (0, T/2), then v forward with the coupling.
PhaseReport<double> phase1_steer_u(const PowerSystemConfig& config);

/// RUM on the v-equation over (T/2, T) from v_mid; u2 is the n-th root of the RUM
/// source, h2 = apply_heat_operator(u2). The phase-1 residual evolves freely in u
/// and its effect on v is kept in the reported state.
PhaseReport<double> phase2_odd(const PowerSystemConfig& config, const std::vector<double>& v_mid,
                               const std::vector<double>& u_mid_residual);

/// Both phases for an odd power n; ConfigError for even n.
RealStrategyReport run_odd_strategy(const PowerSystemConfig& config);

/// Both phases for the coupling Phi_n(u), any n >= 2.
RealStrategyReport run_general_power(const PowerSystemConfig& config);

/// Even coupling u^n (n = 2k) with a complex control: phase 2 runs RUM at power 2n and
/// sets u2 = (r+)^2 + alpha (r-)^2, alpha = exp(i pi / n), so that u2^n = Phi_{2n}(r).
ComplexStrategyReport run_even_complex(const PowerSystemConfig& config);

/// (r+)^2 + alpha (r-)^2 with alpha = exp(i pi / n), n even; its n-th power is Phi_{2n}(r).
Complex alpha_square(double r, int n);

/// alpha_square of Phi_{2n}^{-1}(H): a complex u with u^n = H.
Complex complex_even_root(double H, int n);

struct ObstructionReport {
    std::vector<double> free_terminal;  // v~(T), the free evolution of v0
    double free_min = 0.0;              // min over interior nodes of v~(T)
    double free_midpoint = 0.0;
    int controls_tested = 0;
    int violations = 0;                 // nodes with v(T) < v~(T), summed over controls
    double min_gap = 0.0;               // min over controls and nodes of v(T) - v~(T)
    bool zero_control_exact = false;    // h = 0 reproduces v~(T) bit for bit
};

/// Even coupling u^n with real controls: v(T) >= v~(T) for every control tried.
/// The batch is h = 0, the control of the odd pipeline at the same data, and
/// `random_controls` fields uniform on omega with amplitudes spread over 1e-2..1e2.
ObstructionReport demo_even_obstruction(const PowerSystemConfig& config, int random_controls = 50,
                                        std::uint64_t seed = 1);

struct ScalingRow {
    double p;
    double control_norm;
    double data_size;  // ||u0||_inf + ||v0||_inf^{1/n}
    double ratio;      // 0 when data_size is 0
};

template <class T>
std::vector<ScalingRow> scaling_certificate(const StrategyReport<T>& report, const std::vector<double>& p_list);

}  // namespace rum
