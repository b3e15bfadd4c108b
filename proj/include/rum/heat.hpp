#pragma once

#include <span>
#include <vector>

#include "rum/grid.hpp"

namespace rum {

enum class Scheme { implicit_euler, crank_nicolson };

/// d_t y - d y_xx + b y_x + a y with homogeneous Dirichlet conditions.
/// Drift and reaction are time-independent node samples; empty means zero.
struct ParabolicOperator {
    double diffusion = 1.0;
    std::vector<double> drift;
    std::vector<double> reaction;
    Scheme scheme = Scheme::implicit_euler;

    static ParabolicOperator heat(Scheme s = Scheme::implicit_euler) {
        ParabolicOperator op;
        op.scheme = s;
        return op;
    }
};

/// Tridiagonal matrix stored by diagonals; sub[0] and sup[n-1] are unused.
struct Tridiagonal {
    std::vector<double> sub, diag, sup;

    std::size_t size() const { return diag.size(); }
    Tridiagonal transposed() const;
    template <class T>
    void multiply(std::span<const T> x, std::span<T> y) const;
};

/// LU factorization of a tridiagonal matrix (Thomas algorithm without pivoting).
class TridiagonalLU {
public:
    TridiagonalLU() = default;
    /// Throws SolverError on a zero pivot.
    explicit TridiagonalLU(const Tridiagonal& m);

    /// In-place solve.
    template <class T>
    void solve(std::span<T> rhs) const;

private:
    std::vector<double> lower_;  // multipliers l_i
    std::vector<double> pivot_;  // u_ii
    std::vector<double> upper_;  // u_{i,i+1}
};

/// Spatial operator K = -d D2 + b D1 + a on the interior nodes.
Tridiagonal assemble_spatial(const ParabolicOperator& op, const SpatialGrid& grid);

/// One-step maps of the chosen scheme on a fixed grid pair.
///  implicit Euler:  (I + dt K) y_{j+1} = y_j + dt g_j
///  Crank-Nicolson:  (I + dt/2 K) y_{j+1} = (I - dt/2 K) y_j + dt/2 (g_j + g_{j+1})
class TimeStepper {
public:
    TimeStepper(const ParabolicOperator& op, const Grids& grids);

    Scheme scheme() const { return scheme_; }
    const Grids& grids() const { return grids_; }

    /// Trajectory from y0 driven by source g (shape nodes x nx).
    template <class T>
    Field<T> forward(std::span<const T> y0, const Field<T>& source) const;

    /// One step from `prev` with the source at the old (g0) and new (g1) level;
    /// implicit Euler ignores g1. `next` may not alias `prev`.
    template <class T>
    void step(std::span<const T> prev, std::span<const T> g0, std::span<const T> g1, std::span<T> next) const;

    /// Terminal state only.
    template <class T>
    std::vector<T> terminal(std::span<const T> y0, const Field<T>& source) const;

    /// Exact transpose of the forward map. Returns the adjoint state phi
    /// (phi(t_nt) = phiT) and fills `pairing` with the field sigma such that
    ///   <y(T), phiT> = <y0, phi(t_0)> + sum_j dt <g_j, sigma_j>,
    /// where <a,b> = dx sum_i a_i b_i.
    template <class T>
    Field<T> adjoint(std::span<const T> phiT, Field<T>* pairing) const;

    /// Source g with forward(u(t_0), g) == u at every node.
    template <class T>
    Field<T> source_of(const Field<T>& u) const;

private:
    Scheme scheme_;
    Grids grids_;
    Tridiagonal lhs_, rhs_, rhs_t_;  // implicit part, (CN) explicit part and its transpose
    TridiagonalLU lu_, lu_t_;        // factorizations of lhs_ and lhs_^T
};

/// Forward solve of the parabolic problem.
template <class T>
Field<T> forward_solve(const ParabolicOperator& op, std::span<const T> y0, const Field<T>& source,
                       const Grids& grids) {
    return TimeStepper(op, grids).forward(y0, source);
}

/// Backward adjoint solve from phiT; see TimeStepper::adjoint.
template <class T>
Field<T> adjoint_solve(const ParabolicOperator& op, std::span<const T> phiT, const Grids& grids,
                       Field<T>* pairing = nullptr) {
    return TimeStepper(op, grids).adjoint(phiT, pairing);
}

/// Discrete d_t u + K u, inverted from the stepping relation.
template <class T>
Field<T> apply_heat_operator(const ParabolicOperator& op, const Field<T>& u, const Grids& grids) {
    return TimeStepper(op, grids).source_of(u);
}

/// dx-weighted inner product matching the duality identity.
double inner(std::span<const double> a, std::span<const double> b, double dx);

}  // namespace rum
