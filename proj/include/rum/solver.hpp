#pragma once

#include <string>
#include <vector>

#include "rum/carleman.hpp"
#include "rum/errors.hpp"
#include "rum/grid.hpp"
#include "rum/heat.hpp"

namespace rum {

/// One penalized minimization
///   J(h) = 1/q sum_{j<nt} dt dx w |h|^q + 1/(q eps) dx sum |zeta(T)|^q,
///   zeta' + K zeta = h chi,  zeta(0) = zeta0,
/// with w = exp((q/2) s rho eta) (s eta)^{-3q/2}, q = (n+1)/n.
/// Odd powers n = 2k+1 give the L^{(2k+2)/(2k+1)} setting; n = 1 is penalized HUM.
struct RumProblem {
    Grids grids;
    int power = 3;  // n >= 1
    double eps = 1e-6;
    ParabolicOperator op = ParabolicOperator::heat();
    std::vector<double> zeta0;
    WeightSystem weights;
    std::vector<double> chi;

    /// Convenience constructor for the odd case n = 2k+1.
    static RumProblem odd(const Grids& grids, int k, double eps, std::vector<double> zeta0,
                          const WeightSystem& weights, std::vector<double> chi);

    int k() const { return (power - 1) / 2; }
    double q() const { return (power + 1.0) / power; }
    /// Conjugate exponent of q.
    double p() const { return power + 1.0; }
    /// Throws ConfigError on inconsistent shapes or parameters.
    void validate() const;
};

/// State consistent with a control h. `root` satisfies h = Phi_n(root) nodewise;
/// for iterates built from the Euler-Lagrange map this holds bit for bit.
struct RumIterate {
    RealField h;
    RealField root;
    RealField zeta;
    RealField phi;
    RealField sigma;  // pairing field of phi, see TimeStepper::adjoint
    double J = 0.0;
    double residual = 0.0;
    int iteration = 0;
};

struct RumOptions {
    double relax0 = 0.5;
    double tol = 1e-8;
    int max_iter = 200;
    /// Fixed-point steps tried before switching to the dual Newton solver.
    int fixed_point_budget = 40;
};

struct RumHistoryEntry {
    double J;
    double residual;
};

struct RumResult {
    RumIterate final;
    bool converged = false;
    std::vector<RumHistoryEntry> history;
    double terminal_q_norm = 0.0;
    double weighted_control_norm = 0.0;
    int fixed_point_steps = 0;
    int dual_steps = 0;
    /// |J + D| / J at the dual solution (0 when the dual solver was not used).
    double duality_gap = 0.0;
    std::string note;
};

/// 30 halvings of the relaxation did not decrease J.
class StagnationError : public SolverError {
public:
    StagnationError(const std::string& what, RumIterate last)
        : SolverError(what), last_iterate(std::move(last)) {}
    RumIterate last_iterate;
};

/// log of W = exp(-(q/2) s rho eta) (s eta)^{3q/2} on the pairing nodes j < nt; -inf elsewhere.
RealField rum_log_weight(const RumProblem& problem);

/// log of exp(s rho eta / 2) (s eta)^{-3/2}, the weight of the control norm.
RealField control_norm_log_weight(const WeightSystem& ws);

double evaluate_J(const RumProblem& problem, const RealField& h);

/// Forward state, adjoint, J and Euler-Lagrange residual for the control h.
RumIterate make_iterate(const RumProblem& problem, const RealField& h);

/// || Phi_n^{-1}(h) - W phi chi || / max(both norms), with phi_T = -(1/eps) Phi_n^{-1}(zeta(T)).
double el_residual(const RumProblem& problem, const RumIterate& iterate);

/// h <- (1-relax) h + relax Phi_n(W chi sigma), halving relax while J increases.
/// Throws StagnationError after 30 halvings. `used_relax` receives the accepted relaxation.
RumIterate fixed_point_step(const RumProblem& problem, const RumIterate& iterate, double relax,
                            double* used_relax = nullptr);

/// Minimizer of J: damped fixed point first, then Newton's method on the convex dual
/// in phi_T when the fixed point stalls. Converged means EL residual <= tol, relative
/// J change <= tol^2, or a dual solution with relative gradient or duality gap <= tol.
/// Non-convergence is reported through the flag, never thrown.
RumResult solve_rum(const RumProblem& problem, const RumOptions& options = {});

/// Penalized HUM at n = 1 by conjugate gradients on (eps I + Lambda) phi_T = -zeta_free(T).
RumResult linear_hum_oracle(const RumProblem& problem);

/// phi_T -> terminal state driven from rest by the control W chi^2 sigma(phi_T).
std::vector<double> gramian_apply(const RumProblem& problem, const std::vector<double>& phiT);

struct SweepRow {
    double eps;
    double terminal_q_norm;
    double weighted_control_norm;
    double J;
    bool converged;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    /// Least-squares slope of log terminal_q_norm against log eps.
    double slope = 0.0;
    std::vector<RumResult> results;
};

/// eps_list must be strictly decreasing.
SweepTable epsilon_sweep(const RumProblem& base, const std::vector<double>& eps_list,
                         const RumOptions& options = {});

/// Discrete X_{T,p} norm of Phi_n^{-1}(h): L^p norms of the field, of its forward time
/// difference quotient and of its second space difference quotient.
double xp_norm_diagnostic(const RealField& h, const Grids& grids, int power, double p);

}  // namespace rum
