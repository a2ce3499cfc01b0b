#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"

namespace umblt {

/**
 * The Henyey-Greenstein phase function on the circle,
 *
 *   k(phi) = (1 / 2 pi) (1 - g^2) / (1 + g^2 - 2 g cos phi),
 *
 * where phi is the angle between incoming and outgoing directions and
 * g in (-1, 1) is the anisotropy parameter. Integrates to 1 over a full
 * turn for every admissible g. |g| = 1 is rejected: the kernel degenerates
 * to a delta distribution and cannot be sampled.
 */
inline double hg_kernel(double g, double phi) {
    if (std::abs(g) >= 1.0)
        throw singular_kernel_error("hg_kernel: |g| >= 1 gives a singular kernel");
    const double two_pi = 2.0 * DirectionSet::pi();
    return (1.0 - g * g) / (two_pi * (1.0 + g * g - 2.0 * g * std::cos(phi)));
}

/**
 * A rotation-invariant scattering kernel tabulated on a direction set.
 *
 * Stores both the raw values k(theta_i, theta_j) and the quadrature-weighted
 * matrix k(theta_i, theta_j) * dw used by the discrete scattering sum.
 */
class ScatteringKernel {
  public:
    static ScatteringKernel henyey_greenstein(double g, const DirectionSet& dirs) {
        const int m = dirs.size();
        std::vector<double> values(static_cast<size_t>(m) * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                values[static_cast<size_t>(i) * m + j] = hg_kernel(g, dirs.omega(i) - dirs.omega(j));
        ScatteringKernel k(dirs, std::move(values));
        k.anisotropy_ = g;
        return k;
    }

    static ScatteringKernel none(const DirectionSet& dirs) {
        return ScatteringKernel(dirs, std::vector<double>(static_cast<size_t>(dirs.size()) * dirs.size(), 0.0));
    }

    static ScatteringKernel tabulated(const DirectionSet& dirs, std::vector<double> values) {
        if (static_cast<int>(values.size()) != dirs.size() * dirs.size())
            throw config_error("ScatteringKernel: table size must be M x M");
        for (double v : values)
            if (!(v >= 0.0)) throw config_error("ScatteringKernel: kernel values must be >= 0");
        return ScatteringKernel(dirs, std::move(values));
    }

    const DirectionSet& directions() const { return dirs_; }
    int size() const { return dirs_.size(); }

    double value(int i, int j) const { return values_[static_cast<size_t>(i) * size() + j]; }
    double weighted(int i, int j) const { return weighted_[static_cast<size_t>(i) * size() + j]; }
    const double* weighted_row(int i) const { return weighted_.data() + static_cast<size_t>(i) * size(); }

    bool is_zero() const { return zero_; }
    std::optional<double> anisotropy() const { return anisotropy_; }

  private:
    ScatteringKernel(const DirectionSet& dirs, std::vector<double> values)
        : dirs_(dirs), values_(std::move(values)), weighted_(values_.size()) {
        const double dw = dirs_.weight();
        zero_ = true;
        for (size_t n = 0; n < values_.size(); ++n) {
            weighted_[n] = values_[n] * dw;
            if (values_[n] != 0.0) zero_ = false;
        }
    }

    DirectionSet dirs_;
    std::vector<double> values_;
    std::vector<double> weighted_;
    bool zero_ = true;
    std::optional<double> anisotropy_;
};

/// Attenuation field plus scattering kernel on a common grid / direction set.
class OpticalMedium {
  public:
    OpticalMedium(ScalarField sigma, ScatteringKernel kernel)
        : sigma_(std::move(sigma)), kernel_(std::move(kernel)) {
        for (double v : sigma_.values())
            if (!(v >= 0.0) || !std::isfinite(v))
                throw config_error("OpticalMedium: attenuation must be finite and >= 0");
    }

    const ScalarField& sigma() const { return sigma_; }
    const ScatteringKernel& kernel() const { return kernel_; }
    const Grid2D& grid() const { return sigma_.grid(); }
    const DirectionSet& directions() const { return kernel_.directions(); }

  private:
    ScalarField sigma_;
    ScatteringKernel kernel_;
};

/**
 * Discrete bound on total scattering: the largest quadrature row sum
 * sup_i sum_j k(theta_i, theta_j) dw. For the Henyey-Greenstein kernel this
 * approaches 1 from above as M grows (equal-weight quadrature aliases the
 * g^|n| Fourier tail onto the mean).
 */
inline double scattering_bound_rho(const OpticalMedium& medium) {
    const ScatteringKernel& k = medium.kernel();
    double rho = 0.0;
    for (int i = 0; i < k.size(); ++i) {
        double row = 0.0;
        for (int j = 0; j < k.size(); ++j) row += k.weighted(i, j);
        rho = std::max(rho, row);
    }
    return rho;
}

/**
 * Sufficient conditions for solvability of the transport problem:
 * either attenuation dominates scattering (inf sigma - rho > 0) or the
 * domain is optically small (diam(X) * rho < 1).
 */
struct WellPosednessReport {
    double rho = 0.0;
    double inf_sigma = 0.0;
    double alpha = 0.0;    // inf_sigma - rho
    bool x1_holds = false; // alpha > 0
    double diam_rho = 0.0; // diameter * rho
    bool x2_holds = false; // diam_rho < 1
};

inline WellPosednessReport check_wellposedness(const OpticalMedium& medium) {
    WellPosednessReport r;
    r.rho = scattering_bound_rho(medium);
    r.inf_sigma = min_value(medium.sigma());
    r.alpha = r.inf_sigma - r.rho;
    r.x1_holds = r.alpha > 0.0;
    r.diam_rho = medium.grid().diameter() * r.rho;
    r.x2_holds = r.diam_rho < 1.0;
    return r;
}

/**
 * Audit of the Neumann-series contraction estimate for a given positive
 * adjoint weight v0. Two candidate operator-norm bounds are evaluated:
 *
 *   bound_x1 = ||v0|| (||sigma|| + rho) Vol(S^1) / (alpha * inf_x int v0)
 *   bound_x2 = ||v0|| (||sigma|| + rho) diam(X) Vol(S^1)
 *              / ((1 - diam(X) rho) * inf_x int v0)
 *
 * each valid only when the corresponding well-posedness condition holds
 * (+inf otherwise). bound_x1 can be shown to never fall below 1, so the
 * series is certified convergent only through bound_x2 < 1.
 */
struct ContractionAudit {
    WellPosednessReport wellposedness;
    double v0_sup = 0.0;         // sup over (node, direction) of v0
    double inf_angular_v0 = 0.0; // inf over nodes of int v0 dtheta
    double sigma_sup = 0.0;
    double diameter = 0.0;
    double bound_x1 = std::numeric_limits<double>::infinity();
    double bound_x2 = std::numeric_limits<double>::infinity();
    bool neumann_guaranteed = false;
};

inline ContractionAudit contraction_audit(const OpticalMedium& medium, const AngularField& v0) {
    if (v0.grid() != medium.grid() || v0.directions() != medium.directions())
        throw domain_mismatch_error("contraction_audit: v0 not on the medium's grid/directions");
    if (min_value(v0) <= 0.0)
        throw positivity_error("contraction_audit: v0 must be strictly positive");

    ContractionAudit a;
    a.wellposedness = check_wellposedness(medium);
    a.v0_sup = sup_norm(v0);
    a.inf_angular_v0 = min_value(angular_integrate(v0));
    if (a.inf_angular_v0 <= 0.0)
        throw positivity_error("contraction_audit: angular integral of v0 must be positive");
    a.sigma_sup = max_value(medium.sigma());
    a.diameter = medium.grid().diameter();

    const double vol = 2.0 * DirectionSet::pi();
    const double common = a.v0_sup * (a.sigma_sup + a.wellposedness.rho) * vol / a.inf_angular_v0;
    if (a.wellposedness.x1_holds) a.bound_x1 = common / a.wellposedness.alpha;
    if (a.wellposedness.x2_holds)
        a.bound_x2 = common * a.diameter / (1.0 - a.wellposedness.diam_rho);
    a.neumann_guaranteed = a.wellposedness.x2_holds && a.bound_x2 < 1.0;
    return a;
}

} // namespace umblt
