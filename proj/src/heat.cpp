#include "rum/heat.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "rum/errors.hpp"

namespace rum {

Tridiagonal Tridiagonal::transposed() const {
    const std::size_t n = size();
    Tridiagonal t;
    t.diag = diag;
    t.sub.assign(n, 0.0);
    t.sup.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        t.sup[i] = sub[i + 1];
        t.sub[i + 1] = sup[i];
    }
    return t;
}

template <class T>
void Tridiagonal::multiply(std::span<const T> x, std::span<T> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        T acc = diag[i] * x[i];
        if (i > 0) acc += sub[i] * x[i - 1];
        if (i + 1 < n) acc += sup[i] * x[i + 1];
        y[i] = acc;
    }
}

TridiagonalLU::TridiagonalLU(const Tridiagonal& m) {
    const std::size_t n = m.size();
    lower_.assign(n, 0.0);
    pivot_.assign(n, 0.0);
    upper_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double p = m.diag[i];
        if (i > 0) {
            lower_[i] = m.sub[i] / pivot_[i - 1];
            p -= lower_[i] * upper_[i - 1];
        }
        const double scale = std::abs(m.diag[i]) + std::abs(m.sub[i]) + std::abs(m.sup[i]);
        if (!std::isfinite(p) || std::abs(p) <= 1e-13 * scale) {
            std::ostringstream os;
            os << "singular step matrix (zero pivot at row " << i << ")";
            throw SolverError(os.str());
        }
        pivot_[i] = p;
        if (i + 1 < n) upper_[i] = m.sup[i];
    }
}

template <class T>
void TridiagonalLU::solve(std::span<T> rhs) const {
    const std::size_t n = pivot_.size();
    for (std::size_t i = 1; i < n; ++i) rhs[i] -= lower_[i] * rhs[i - 1];
    rhs[n - 1] /= pivot_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper_[i] * rhs[i + 1]) / pivot_[i];
}

Tridiagonal assemble_spatial(const ParabolicOperator& op, const SpatialGrid& grid) {
    const std::size_t n = grid.size();
    if (!(op.diffusion > 0.0)) throw ConfigError("parabolic operator: diffusion must be positive");
    auto check = [n](const std::vector<double>& v, const char* name) {
        if (!v.empty() && v.size() != n) {
            throw ConfigError(std::string("parabolic operator: ") + name + " has wrong length");
        }
        for (double x : v) {
            if (!std::isfinite(x)) {
                throw ConfigError(std::string("parabolic operator: ") + name + " is not finite");
            }
        }
    };
    check(op.drift, "drift");
    check(op.reaction, "reaction");

    const double dx = grid.dx();
    const double c2 = op.diffusion / (dx * dx);
    Tridiagonal k;
    k.sub.assign(n, -c2);
    k.diag.assign(n, 2.0 * c2);
    k.sup.assign(n, -c2);
    k.sub[0] = 0.0;
    k.sup[n - 1] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!op.drift.empty()) {
            const double c1 = op.drift[i] / (2.0 * dx);
            if (i > 0) k.sub[i] -= c1;
            if (i + 1 < n) k.sup[i] += c1;
        }
        if (!op.reaction.empty()) k.diag[i] += op.reaction[i];
    }
    return k;
}

namespace {

Tridiagonal identity_plus(const Tridiagonal& k, double c) {
    Tridiagonal m;
    const std::size_t n = k.size();
    m.sub.resize(n);
    m.diag.resize(n);
    m.sup.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.sub[i] = c * k.sub[i];
        m.diag[i] = 1.0 + c * k.diag[i];
        m.sup[i] = c * k.sup[i];
    }
    return m;
}

template <class T>
void check_shape(const Field<T>& f, const Grids& g, const char* what) {
    if (!matches(f, g)) {
        throw ConfigError(std::string(what) + ": field shape does not match the grids");
    }
}

}  // namespace

TimeStepper::TimeStepper(const ParabolicOperator& op, const Grids& grids)
    : scheme_(op.scheme), grids_(grids) {
    const Tridiagonal k = assemble_spatial(op, grids.space);
    const double dt = grids.time.dt();
    if (scheme_ == Scheme::implicit_euler) {
        lhs_ = identity_plus(k, dt);
    } else {
        lhs_ = identity_plus(k, 0.5 * dt);
        rhs_ = identity_plus(k, -0.5 * dt);
        rhs_t_ = rhs_.transposed();
    }
    try {
        lu_ = TridiagonalLU(lhs_);
        lu_t_ = TridiagonalLU(lhs_.transposed());
    } catch (const SolverError& e) {
        throw SolverError(std::string("forward step 1: ") + e.what());
    }
}

template <class T>
void TimeStepper::step(std::span<const T> prev, std::span<const T> g0, std::span<const T> g1,
                       std::span<T> next) const {
    const std::size_t nx = grids_.space.size();
    const double dt = grids_.time.dt();
    if (scheme_ == Scheme::implicit_euler) {
        for (std::size_t i = 0; i < nx; ++i) next[i] = prev[i] + dt * g0[i];
    } else {
        rhs_.multiply<T>(prev, next);
        for (std::size_t i = 0; i < nx; ++i) next[i] += 0.5 * dt * (g0[i] + g1[i]);
    }
    lu_.solve(next);
}

template <class T>
Field<T> TimeStepper::forward(std::span<const T> y0, const Field<T>& source) const {
    check_shape(source, grids_, "forward_solve");
    if (y0.size() != grids_.space.size()) throw ConfigError("forward_solve: y0 has wrong length");
    const std::size_t nt = grids_.time.steps();
    Field<T> y(grids_);
    y.set_row(0, y0);
    for (std::size_t j = 0; j < nt; ++j) {
        step<T>(std::as_const(y).row(j), source.row(j), source.row(j + 1), y.row(j + 1));
    }
    return y;
}

template <class T>
std::vector<T> TimeStepper::terminal(std::span<const T> y0, const Field<T>& source) const {
    const auto y = forward(y0, source);
    const auto last = y.row(grids_.time.steps());
    return {last.begin(), last.end()};
}

template <class T>
Field<T> TimeStepper::adjoint(std::span<const T> phiT, Field<T>* pairing) const {
    if (phiT.size() != grids_.space.size()) throw ConfigError("adjoint_solve: phiT has wrong length");
    const std::size_t nt = grids_.time.steps();
    const std::size_t nx = grids_.space.size();
    Field<T> phi(grids_);
    phi.set_row(nt, phiT);
    if (pairing) *pairing = Field<T>(grids_);
    std::vector<T> z(nx);
    for (std::size_t j = nt; j-- > 0;) {
        auto next = phi.row(j + 1);
        std::copy(next.begin(), next.end(), z.begin());
        lu_t_.solve(std::span<T>(z));  // z = lhs^{-T} phi_{j+1}
        if (scheme_ == Scheme::implicit_euler) {
            phi.set_row(j, z);
            if (pairing) pairing->set_row(j, z);
        } else {
            auto out = phi.row(j);
            rhs_t_.multiply<T>(std::span<const T>(z), out);
            if (pairing) {
                auto pj = pairing->row(j);
                auto pj1 = pairing->row(j + 1);
                for (std::size_t i = 0; i < nx; ++i) {
                    pj[i] += 0.5 * z[i];
                    pj1[i] += 0.5 * z[i];
                }
            }
        }
    }
    return phi;
}

template <class T>
Field<T> TimeStepper::source_of(const Field<T>& u) const {
    check_shape(u, grids_, "apply_heat_operator");
    const std::size_t nt = grids_.time.steps();
    const std::size_t nx = grids_.space.size();
    const double dt = grids_.time.dt();
    Field<T> g(grids_);
    std::vector<T> a(nx), c(nx);
    if (scheme_ == Scheme::implicit_euler) {
        for (std::size_t j = 0; j < nt; ++j) {
            lhs_.multiply<T>(u.row(j + 1), std::span<T>(a));
            auto uj = u.row(j);
            auto gj = g.row(j);
            for (std::size_t i = 0; i < nx; ++i) gj[i] = (a[i] - uj[i]) / dt;
        }
        return g;
    }
    // Crank-Nicolson: g_0 from the consistent first-order relation, then the
    // two-level recursion dt/2 (g_j + g_{j+1}) = lhs u_{j+1} - rhs u_j.
    {
        Tridiagonal ie = lhs_;
        for (std::size_t i = 0; i < nx; ++i) {
            ie.sub[i] = 2.0 * lhs_.sub[i];
            ie.diag[i] = 1.0 + 2.0 * (lhs_.diag[i] - 1.0);
            ie.sup[i] = 2.0 * lhs_.sup[i];
        }
        ie.multiply<T>(u.row(0), std::span<T>(a));
        auto u0 = u.row(0);
        auto u1 = u.row(1);
        auto g0 = g.row(0);
        for (std::size_t i = 0; i < nx; ++i) g0[i] = (u1[i] - u0[i]) / dt + (a[i] - u0[i]) / dt;
    }
    for (std::size_t j = 0; j < nt; ++j) {
        lhs_.multiply<T>(u.row(j + 1), std::span<T>(a));
        rhs_.multiply<T>(u.row(j), std::span<T>(c));
        auto gj = g.row(j);
        auto gj1 = g.row(j + 1);
        for (std::size_t i = 0; i < nx; ++i) gj1[i] = 2.0 * (a[i] - c[i]) / dt - gj[i];
    }
    return g;
}

template void Tridiagonal::multiply(std::span<const double>, std::span<double>) const;
template void Tridiagonal::multiply(std::span<const Complex>, std::span<Complex>) const;
template void TridiagonalLU::solve(std::span<double>) const;
template void TridiagonalLU::solve(std::span<Complex>) const;
template void TimeStepper::step(std::span<const double>, std::span<const double>, std::span<const double>,
                                 std::span<double>) const;
template void TimeStepper::step(std::span<const Complex>, std::span<const Complex>, std::span<const Complex>,
                                 std::span<Complex>) const;
template Field<double> TimeStepper::forward(std::span<const double>, const Field<double>&) const;
template Field<Complex> TimeStepper::forward(std::span<const Complex>, const Field<Complex>&) const;
template std::vector<double> TimeStepper::terminal(std::span<const double>,
                                                   const Field<double>&) const;
template std::vector<Complex> TimeStepper::terminal(std::span<const Complex>,
                                                    const Field<Complex>&) const;
template Field<double> TimeStepper::adjoint(std::span<const double>, Field<double>*) const;
template Field<Complex> TimeStepper::adjoint(std::span<const Complex>, Field<Complex>*) const;
template Field<double> TimeStepper::source_of(const Field<double>&) const;
template Field<Complex> TimeStepper::source_of(const Field<Complex>&) const;

double inner(std::span<const double> a, std::span<const double> b, double dx) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return dx * s;
}

}  // namespace rum
