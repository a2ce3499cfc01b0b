#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <vector>

#include "medium.hpp"

namespace umblt {

struct SolverSettings {
    double tolerance = 1e-10; // relative sup-norm change between sweeps
    int max_iterations = 50000;
    double damping = 1.0; // 1 = plain Jacobi
    bool warn_wellposedness = true;

    SolverSettings() = default;
    SolverSettings(double tol, int max_iter) : tolerance(tol), max_iterations(max_iter) {}
};

struct TransportSolution {
    AngularField field;
    int iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
};

/// Acoustic plane-wave modulation (1 + eps cos(q . x + phase)) applied
/// multiplicatively to attenuation, scattering kernel and source.
struct PlaneWaveModulation {
    double eps = 0.0;
    double q1 = 0.0, q2 = 0.0;
    double phase = 0.0;

    double factor(double x1, double x2) const {
        return 1.0 + eps * std::cos(q1 * x1 + q2 * x2 + phase);
    }
};

namespace detail {

/**
 * Jacobi iteration for the upwind discrete-ordinates system
 *
 *   a_d . grad_h u + sigma u - sum_j K_dj u(., theta_j) = S,    a_d = sign * theta_d,
 *
 * with u prescribed on the inflow boundary {x in faces : a_d . n < 0}.
 * The directional derivative uses one-sided differences against the
 * advection direction; components snapped to zero drop their term.
 * Corner nodes receive boundary data when either adjacent face is inflow.
 *
 * Every sweep reads only the previous iterate and writes only the next one.
 * Stops when the relative sup-norm change falls below settings.tolerance.
 */
inline TransportSolution solve_discrete_ordinates(const OpticalMedium& medium,
                                                  const ScalarField* source,
                                                  double boundary_value, int advect_sign,
                                                  const PlaneWaveModulation* mod,
                                                  const SolverSettings& settings) {
    const Grid2D& grid = medium.grid();
    const DirectionSet& dirs = medium.directions();
    const int nx = grid.nx(), ny = grid.ny(), m = dirs.size();
    const int num_nodes = grid.num_nodes();

    if (source && source->grid() != grid)
        throw domain_mismatch_error("transport: source not on the medium grid");
    if (source && !source->all_finite()) throw Error("transport: non-finite source");
    if (settings.tolerance <= 0.0 || settings.max_iterations < 1)
        throw config_error("transport: invalid solver settings");

    // Modulation factor per node (all ones when unmodulated).
    std::vector<double> modf(num_nodes, 1.0);
    if (mod)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) modf[grid.node(i, j)] = mod->factor(grid.x1(i), grid.x2(j));

    if (settings.warn_wellposedness) {
        double mod_max = 1.0, mod_min = 1.0;
        if (mod)
            for (double v : modf) {
                mod_max = std::max(mod_max, v);
                mod_min = std::min(mod_min, v);
            }
        const double rho = scattering_bound_rho(medium) * mod_max;
        double inf_sig = std::numeric_limits<double>::infinity();
        for (int n = 0; n < num_nodes; ++n)
            inf_sig = std::min(inf_sig, medium.sigma()[n] * modf[n]);
        if (!(inf_sig - rho > 0.0) && !(grid.diameter() * rho < 1.0))
            std::clog << "warning: transport solve on a medium satisfying neither "
                         "solvability condition (inf sigma - rho = "
                      << inf_sig - rho << ", diam * rho = " << grid.diameter() * rho
                      << "); proceeding anyway\n";
    }

    // Per-direction advection data.
    std::vector<int> sx(m), sy(m);
    std::vector<double> cx(m), cy(m);
    for (int d = 0; d < m; ++d) {
        const double ax = advect_sign * dirs.cosine(d);
        const double ay = advect_sign * dirs.sine(d);
        sx[d] = ax > 0.0 ? 1 : (ax < 0.0 ? -1 : 0);
        sy[d] = ay > 0.0 ? 1 : (ay < 0.0 ? -1 : 0);
        cx[d] = std::abs(ax) / grid.dx1();
        cy[d] = std::abs(ay) / grid.dx2();
    }

    // Inflow membership and fixed boundary values, set once in both buffers.
    std::vector<uint8_t> inflow(static_cast<size_t>(num_nodes) * m, 0);
    AngularField u(grid, dirs, 0.0), next(grid, dirs, 0.0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int node = grid.node(i, j);
            for (int d = 0; d < m; ++d) {
                const bool in = (i == 0 && sx[d] > 0) || (i == nx - 1 && sx[d] < 0) ||
                                (j == 0 && sy[d] > 0) || (j == ny - 1 && sy[d] < 0);
                if (in) {
                    inflow[static_cast<size_t>(node) * m + d] = 1;
                    u.values()[static_cast<size_t>(node) * m + d] = boundary_value;
                    next.values()[static_cast<size_t>(node) * m + d] = boundary_value;
                }
            }
        }

    const double* kw = medium.kernel().weighted_row(0);
    const double damping = settings.damping;
    const int row_stride = nx * m;

    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (iter = 1; iter <= settings.max_iterations; ++iter) {
        const double* old_v = u.values().data();
        double* new_v = next.values().data();
        double max_diff = 0.0, max_abs = 0.0;

        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const int node = j * nx + i;
                const size_t base = static_cast<size_t>(node) * m;
                const double* un = old_v + base;
                const double mf = modf[node];
                const double sig = medium.sigma()[node] * mf;
                const double src = source ? (*source)[node] * mf : 0.0;
                for (int d = 0; d < m; ++d) {
                    if (inflow[base + d]) continue;
                    const double* krow = kw + static_cast<size_t>(d) * m;
                    double scat = 0.0;
                    for (int dd = 0; dd < m; ++dd) scat += krow[dd] * un[dd];
                    double num = src + scat * mf;
                    double den = sig;
                    const ptrdiff_t idx = static_cast<ptrdiff_t>(base) + d;
                    if (sx[d] != 0) {
                        num += cx[d] * old_v[idx - sx[d] * m]; // upstream x1 neighbor
                        den += cx[d];
                    }
                    if (sy[d] != 0) {
                        num += cy[d] * old_v[idx - sy[d] * row_stride]; // upstream x2 neighbor
                        den += cy[d];
                    }
                    double val = num / den;
                    if (damping != 1.0) val = un[d] + damping * (val - un[d]);
                    new_v[base + d] = val;
                    max_diff = std::max(max_diff, std::abs(val - un[d]));
                    max_abs = std::max(max_abs, std::abs(val));
                }
            }
        }

        residual = max_abs > 0.0 ? max_diff / max_abs : (max_diff > 0.0 ? max_diff : 0.0);
        std::swap(u.values(), next.values());
        if (residual <= settings.tolerance) {
            return TransportSolution{std::move(u), iter, residual, true};
        }
    }
    throw divergence_error("transport: Jacobi iteration did not reach tolerance " +
                               std::to_string(settings.tolerance) + " within " +
                               std::to_string(settings.max_iterations) +
                               " sweeps (residual " + std::to_string(residual) + ")",
                           settings.max_iterations, residual);
}

} // namespace detail

/**
 * Solves the radiative transfer equation
 *
 *   theta . grad u + sigma u - int k(x, theta, theta') u(x, theta') dtheta' = S(x)
 *
 * with the given constant inflow value on the incoming boundary, by
 * upwind discrete ordinates and Jacobi sweeps.
 */
inline TransportSolution solve_forward(const OpticalMedium& medium, const ScalarField& source,
                                       double inflow = 0.0,
                                       const SolverSettings& settings = {}) {
    return detail::solve_discrete_ordinates(medium, &source, inflow, +1, nullptr, settings);
}

/**
 * Solves the adjoint transport equation
 *
 *   -theta . grad v + sigma v - int k(x, theta, theta') v(x, theta') dtheta' = 0
 *
 * with the given constant value prescribed on the outgoing boundary.
 * This is the forward solve with advection along -theta.
 */
inline TransportSolution solve_adjoint(const OpticalMedium& medium, double outflow = 1.0,
                                       const SolverSettings& settings = {}) {
    return detail::solve_discrete_ordinates(medium, nullptr, outflow, -1, nullptr, settings);
}

/**
 * Solves the acoustically modulated problem, where attenuation, kernel and
 * source are all multiplied by (1 + eps cos(q . x + phase)), with zero inflow.
 */
inline TransportSolution solve_modulated(const OpticalMedium& medium, const ScalarField& source,
                                         double eps, std::array<double, 2> q, double phase,
                                         const SolverSettings& settings = {}) {
    if (!(eps >= 0.0) || eps > 1.0)
        throw config_error("solve_modulated: modulation amplitude must lie in [0, 1]");
    PlaneWaveModulation mod{eps, q[0], q[1], phase};
    return detail::solve_discrete_ordinates(medium, &source, 0.0, +1, &mod, settings);
}

} // namespace umblt
