#pragma once

#include <cmath>
#include <string>

#include "transport.hpp"

namespace umblt {

/**
 * The local collision operator
 *
 *   (A u)(x, theta_i) = -sigma(x) u(x, theta_i) + sum_j K_ij u(x, theta_j),
 *
 * where K_ij is the quadrature-weighted scattering matrix.
 */
inline AngularField apply_A(const AngularField& u, const OpticalMedium& medium) {
    if (u.grid() != medium.grid() || u.directions() != medium.directions())
        throw domain_mismatch_error("apply_A: field not on the medium's grid/directions");
    const int m = u.directions().size();
    AngularField out(u.grid(), u.directions());
    for (int n = 0; n < u.grid().num_nodes(); ++n) {
        const double* un = u.node_values(n);
        double* on = out.node_values(n);
        const double sig = medium.sigma()[n];
        for (int d = 0; d < m; ++d) {
            double scat = 0.0;
            const double* krow = medium.kernel().weighted_row(d);
            for (int dd = 0; dd < m; ++dd) scat += krow[dd] * un[dd];
            on[d] = -sig * un[d] + scat;
        }
    }
    return out;
}

/// A spatially resolved functional of the light field, weighted by an
/// adjoint solution v0.
struct InternalFunctional {
    ScalarField h;
    std::string v0_meta;
};

/**
 * The internal functional
 *
 *   H(x) = int v0(x, theta) [ (A u)(x, theta) + S(x) ] dtheta
 *
 * for a forward solution u with source S.
 */
inline InternalFunctional internal_functional(const AngularField& u, const AngularField& v0,
                                              const ScalarField& source,
                                              const OpticalMedium& medium,
                                              std::string v0_meta = "") {
    AngularField au = apply_A(u, medium);
    const int m = u.directions().size();
    const double dw = u.directions().weight();
    ScalarField h(u.grid());
    for (int n = 0; n < u.grid().num_nodes(); ++n) {
        const double* a = au.node_values(n);
        const double* v = v0.node_values(n);
        const double s = source[n];
        double acc = 0.0;
        for (int d = 0; d < m; ++d) acc += v[d] * (a[d] + s);
        h[n] = acc * dw;
    }
    return InternalFunctional{std::move(h), std::move(v0_meta)};
}

/**
 * The same functional evaluated through the transport term,
 * H(x) = int v0 (theta . grad_h u) dtheta, with the solver's upwind stencil.
 * At inflow nodes, where the upstream neighbor is outside the domain, the
 * difference falls back to the one-sided stencil into the domain. Agrees
 * with the collision form to first order in the mesh width.
 */
inline ScalarField internal_functional_gradient_form(const AngularField& u,
                                                     const AngularField& v0) {
    const Grid2D& grid = u.grid();
    const DirectionSet& dirs = u.directions();
    const int nx = grid.nx(), ny = grid.ny(), m = dirs.size();
    const double dw = dirs.weight();
    ScalarField h(grid);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double acc = 0.0;
            for (int d = 0; d < m; ++d) {
                const double cx = dirs.cosine(d), cy = dirs.sine(d);
                double ddx = 0.0, ddy = 0.0;
                if (cx > 0.0)
                    ddx = i > 0 ? u(i, j, d) - u(i - 1, j, d) : u(i + 1, j, d) - u(i, j, d);
                else if (cx < 0.0)
                    ddx = i < nx - 1 ? u(i + 1, j, d) - u(i, j, d) : u(i, j, d) - u(i - 1, j, d);
                if (cy > 0.0)
                    ddy = j > 0 ? u(i, j, d) - u(i, j - 1, d) : u(i, j + 1, d) - u(i, j, d);
                else if (cy < 0.0)
                    ddy = j < ny - 1 ? u(i, j + 1, d) - u(i, j, d) : u(i, j, d) - u(i, j - 1, d);
                acc += v0(i, j, d) * (cx * ddx / grid.dx1() + cy * ddy / grid.dx2());
            }
            h(i, j) = acc * dw;
        }
    return h;
}

/// Source-to-solution operator: solves the forward problem with zero inflow.
inline AngularField op_S(const ScalarField& source, const OpticalMedium& medium,
                         const SolverSettings& settings = {}) {
    return solve_forward(medium, source, 0.0, settings).field;
}

/// x |-> int (A u)(x, theta) v0(x, theta) dtheta.
inline ScalarField op_K(const AngularField& u, const AngularField& v0,
                        const OpticalMedium& medium) {
    AngularField au = apply_A(u, medium);
    const int m = u.directions().size();
    const double dw = u.directions().weight();
    ScalarField out(u.grid());
    for (int n = 0; n < u.grid().num_nodes(); ++n) {
        const double* a = au.node_values(n);
        const double* v = v0.node_values(n);
        double acc = 0.0;
        for (int d = 0; d < m; ++d) acc += a[d] * v[d];
        out[n] = acc * dw;
    }
    return out;
}

/// Division by the angular integral of v0, which must be positive everywhere.
inline ScalarField op_M(const ScalarField& f, const AngularField& v0) {
    if (f.grid() != v0.grid()) throw domain_mismatch_error("op_M: grids differ");
    ScalarField denom = angular_integrate(v0);
    if (min_value(denom) <= 0.0)
        throw positivity_error("op_M: angular integral of v0 must be positive everywhere");
    ScalarField out(f.grid());
    for (int n = 0; n < f.grid().num_nodes(); ++n) out[n] = f[n] / denom[n];
    return out;
}

/**
 * The forward map of the source reconstruction problem,
 *
 *   T[S] = S + M[ K[ S[S] ] ],
 *
 * i.e. the map taking a source to the normalized internal functional its
 * light field produces.
 */
inline ScalarField forward_map_T(const ScalarField& source, const AngularField& v0,
                                 const OpticalMedium& medium,
                                 const SolverSettings& settings = {}) {
    AngularField u = op_S(source, medium, settings);
    ScalarField corr = op_M(op_K(u, v0, medium), v0);
    ScalarField out = source;
    out += corr;
    return out;
}

/**
 * Signed flux pairing over the boundary:
 *
 *   sum_i dw  oint a(x, theta_i) b(x, theta_i) (n . theta_i) ds(x),
 *
 * with the trapezoidal rule on each of the four faces (corner weight 1/2
 * per face, each corner visited by both adjacent faces with that face's
 * outward normal).
 */
inline double boundary_flux_integral(const AngularField& a, const AngularField& b) {
    if (a.grid() != b.grid() || a.directions() != b.directions())
        throw domain_mismatch_error("boundary_flux_integral: fields incompatible");
    const Grid2D& grid = a.grid();
    const DirectionSet& dirs = a.directions();
    const int nx = grid.nx(), ny = grid.ny(), m = dirs.size();

    double total = 0.0;
    // faces x1 = min (n = (-1,0)) and x1 = max (n = (1,0))
    for (int side = 0; side < 2; ++side) {
        const int i = side == 0 ? 0 : nx - 1;
        const double n1 = side == 0 ? -1.0 : 1.0;
        for (int j = 0; j < ny; ++j) {
            const double w = grid.dx2() * ((j == 0 || j == ny - 1) ? 0.5 : 1.0);
            double acc = 0.0;
            for (int d = 0; d < m; ++d) acc += a(i, j, d) * b(i, j, d) * (n1 * dirs.cosine(d));
            total += w * acc;
        }
    }
    // faces x2 = min (n = (0,-1)) and x2 = max (n = (0,1))
    for (int side = 0; side < 2; ++side) {
        const int j = side == 0 ? 0 : ny - 1;
        const double n2 = side == 0 ? -1.0 : 1.0;
        for (int i = 0; i < nx; ++i) {
            const double w = grid.dx1() * ((i == 0 || i == nx - 1) ? 0.5 : 1.0);
            double acc = 0.0;
            for (int d = 0; d < m; ++d) acc += a(i, j, d) * b(i, j, d) * (n2 * dirs.sine(d));
            total += w * acc;
        }
    }
    return total * dirs.weight();
}

/**
 * The measured boundary response to acoustic modulation:
 *
 *   sum_i dw  oint (u_eps - u0) v (n . theta_i) ds.
 *
 * To leading order in the modulation amplitude eps this equals
 * eps * int cos(q . x + phase) H_v(x) dx.
 */
inline double modulated_boundary_functional(const AngularField& u_eps, const AngularField& u0,
                                            const AngularField& v) {
    if (u_eps.grid() != u0.grid() || u_eps.directions() != u0.directions())
        throw domain_mismatch_error("modulated_boundary_functional: fields incompatible");
    AngularField delta = u_eps;
    for (size_t n = 0; n < delta.size(); ++n) delta.values()[n] -= u0.values()[n];
    return boundary_flux_integral(delta, v);
}

} // namespace umblt
