#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace umblt {

/**
 * A uniform node-centered grid on a rectangle [x1_min, x1_max] x [x2_min, x2_max].
 *
 * Nodes include the boundary: node (i, j) sits at
 * (x1_min + i dx1, x2_min + j dx2) with i in [0, nx) and j in [0, ny).
 */
class Grid2D {
  public:
    Grid2D(int nx, int ny, double x1_min, double x1_max, double x2_min, double x2_max)
        : nx_(nx), ny_(ny), x1_min_(x1_min), x1_max_(x1_max), x2_min_(x2_min), x2_max_(x2_max) {
        if (nx < 2 || ny < 2)
            throw config_error("Grid2D: need at least 2 nodes per axis");
        if (!(x1_min < x1_max) || !(x2_min < x2_max))
            throw config_error("Grid2D: domain bounds must be strictly ordered");
        dx1_ = (x1_max_ - x1_min_) / (nx_ - 1);
        dx2_ = (x2_max_ - x2_min_) / (ny_ - 1);
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int num_nodes() const { return nx_ * ny_; }

    double x1_min() const { return x1_min_; }
    double x1_max() const { return x1_max_; }
    double x2_min() const { return x2_min_; }
    double x2_max() const { return x2_max_; }

    double dx1() const { return dx1_; }
    double dx2() const { return dx2_; }

    double x1(int i) const { return x1_min_ + i * dx1_; }
    double x2(int j) const { return x2_min_ + j * dx2_; }

    /// Flat node index, x1 fastest.
    int node(int i, int j) const { return j * nx_ + i; }

    double diameter() const { return std::hypot(x1_max_ - x1_min_, x2_max_ - x2_min_); }

    /// Trapezoidal quadrature weight of node (i, j): dx1 dx2 with factor
    /// 1/2 on each boundary face (so 1/4 at corners).
    double cell_weight(int i, int j) const {
        double w = dx1_ * dx2_;
        if (i == 0 || i == nx_ - 1) w *= 0.5;
        if (j == 0 || j == ny_ - 1) w *= 0.5;
        return w;
    }

    /// True if `inner` lies inside this grid's rectangle (up to a relative slack).
    bool covers(const Grid2D& inner) const {
        const double s1 = 1e-12 * (x1_max_ - x1_min_);
        const double s2 = 1e-12 * (x2_max_ - x2_min_);
        return inner.x1_min_ >= x1_min_ - s1 && inner.x1_max_ <= x1_max_ + s1 &&
               inner.x2_min_ >= x2_min_ - s2 && inner.x2_max_ <= x2_max_ + s2;
    }

    bool operator==(const Grid2D& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && x1_min_ == o.x1_min_ && x1_max_ == o.x1_max_ &&
               x2_min_ == o.x2_min_ && x2_max_ == o.x2_max_;
    }
    bool operator!=(const Grid2D& o) const { return !(*this == o); }

  private:
    int nx_, ny_;
    double x1_min_, x1_max_, x2_min_, x2_max_;
    double dx1_, dx2_;
};

/**
 * A uniform discretization of the unit circle into M directions.
 *
 * Angles are omega_i = i * 2 pi / M for i in [0, M); every direction carries
 * the equal quadrature weight 2 pi / M. Components that vanish analytically
 * (e.g. cos(pi/2)) are snapped to exact zeros so that axis-aligned directions
 * drop the corresponding difference term in upwind stencils.
 */
class DirectionSet {
  public:
    explicit DirectionSet(int m) : m_(m) {
        if (m < 2) throw config_error("DirectionSet: need at least 2 directions");
        omega_.resize(m);
        cos_.resize(m);
        sin_.resize(m);
        const double dw = 2.0 * pi() / m;
        for (int i = 0; i < m; ++i) {
            omega_[i] = i * dw;
            cos_[i] = snap(std::cos(omega_[i]));
            sin_[i] = snap(std::sin(omega_[i]));
        }
    }

    int size() const { return m_; }
    double weight() const { return 2.0 * pi() / m_; }
    double omega(int i) const { return omega_[i]; }
    double cosine(int i) const { return cos_[i]; }
    double sine(int i) const { return sin_[i]; }

    bool operator==(const DirectionSet& o) const { return m_ == o.m_; }
    bool operator!=(const DirectionSet& o) const { return !(*this == o); }

    static constexpr double pi() { return 3.141592653589793238462643383279502884; }

  private:
    static double snap(double c) { return std::abs(c) < 1e-12 ? 0.0 : c; }

    int m_;
    std::vector<double> omega_, cos_, sin_;
};

/// Values of a function of x sampled at every node of a Grid2D.
class ScalarField {
  public:
    explicit ScalarField(const Grid2D& grid, double fill = 0.0)
        : grid_(grid), values_(static_cast<size_t>(grid.num_nodes()), fill) {}

    template <typename F>
    static ScalarField from_function(const Grid2D& grid, F&& f) {
        ScalarField out(grid);
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i)
                out(i, j) = f(grid.x1(i), grid.x2(j));
        return out;
    }

    const Grid2D& grid() const { return grid_; }

    double& operator()(int i, int j) { return values_[grid_.node(i, j)]; }
    double operator()(int i, int j) const { return values_[grid_.node(i, j)]; }
    double& operator[](int n) { return values_[n]; }
    double operator[](int n) const { return values_[n]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    int size() const { return static_cast<int>(values_.size()); }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_grid(o);
        for (size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require_same_grid(o);
        for (size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
        return *this;
    }
    ScalarField& operator*=(double a) {
        for (double& v : values_) v *= a;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double a, ScalarField f) { return f *= a; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void require_same_grid(const ScalarField& o) const {
        if (grid_ != o.grid_) throw domain_mismatch_error("ScalarField: grids differ");
    }

  private:
    Grid2D grid_;
    std::vector<double> values_;
};

/// Values of a function of (x, theta) on a Grid2D x DirectionSet product.
/// Storage is node-major with the direction index fastest.
class AngularField {
  public:
    AngularField(const Grid2D& grid, const DirectionSet& directions, double fill = 0.0)
        : grid_(grid), directions_(directions),
          values_(static_cast<size_t>(grid.num_nodes()) * directions.size(), fill) {}

    const Grid2D& grid() const { return grid_; }
    const DirectionSet& directions() const { return directions_; }

    double& operator()(int i, int j, int d) {
        return values_[static_cast<size_t>(grid_.node(i, j)) * directions_.size() + d];
    }
    double operator()(int i, int j, int d) const {
        return values_[static_cast<size_t>(grid_.node(i, j)) * directions_.size() + d];
    }

    /// Direct access to the M contiguous values at one node.
    double* node_values(int node) { return values_.data() + static_cast<size_t>(node) * directions_.size(); }
    const double* node_values(int node) const {
        return values_.data() + static_cast<size_t>(node) * directions_.size();
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    size_t size() const { return values_.size(); }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    Grid2D grid_;
    DirectionSet directions_;
    std::vector<double> values_;
};

/**
 * Quadrature over the direction set: x |-> sum_i f(x, theta_i) * (2 pi / M).
 *
 * On the periodic circle this equal-weight rule coincides with the
 * trapezoidal rule and is spectrally accurate for smooth integrands.
 */
inline ScalarField angular_integrate(const AngularField& f) {
    if (!f.all_finite()) throw Error("angular_integrate: non-finite input");
    const int m = f.directions().size();
    const double dw = f.directions().weight();
    ScalarField out(f.grid());
    for (int n = 0; n < f.grid().num_nodes(); ++n) {
        const double* v = f.node_values(n);
        double s = 0.0;
        for (int d = 0; d < m; ++d) s += v[d];
        out[n] = s * dw;
    }
    return out;
}

/**
 * Bilinear interpolation of a field onto another grid.
 *
 * The target rectangle must be contained in the source rectangle. Values at
 * coinciding nodes are reproduced, so transfers between nested grids
 * (e.g. 121x121 -> 61x61 over the same domain) act as exact subsampling up to
 * rounding of the node coordinates.
 */
inline ScalarField interpolate(const ScalarField& f, const Grid2D& target) {
    const Grid2D& src = f.grid();
    if (!src.covers(target))
        throw domain_mismatch_error("interpolate: target grid extends outside the source domain");

    ScalarField out(target);
    for (int j = 0; j < target.ny(); ++j) {
        const double y = target.x2(j);
        int cj = static_cast<int>(std::floor((y - src.x2_min()) / src.dx2()));
        cj = std::min(std::max(cj, 0), src.ny() - 2);
        const double ty = (y - src.x2(cj)) / src.dx2();
        for (int i = 0; i < target.nx(); ++i) {
            const double x = target.x1(i);
            int ci = static_cast<int>(std::floor((x - src.x1_min()) / src.dx1()));
            ci = std::min(std::max(ci, 0), src.nx() - 2);
            const double tx = (x - src.x1(ci)) / src.dx1();
            out(i, j) = (1 - tx) * (1 - ty) * f(ci, cj) + tx * (1 - ty) * f(ci + 1, cj) +
                        (1 - tx) * ty * f(ci, cj + 1) + tx * ty * f(ci + 1, cj + 1);
        }
    }
    return out;
}

/// Per-direction bilinear interpolation of an angular field.
inline AngularField interpolate(const AngularField& f, const Grid2D& target) {
    AngularField out(target, f.directions());
    const int m = f.directions().size();
    for (int d = 0; d < m; ++d) {
        ScalarField slice(f.grid());
        for (int n = 0; n < f.grid().num_nodes(); ++n) slice[n] = f.node_values(n)[d];
        ScalarField t = interpolate(slice, target);
        for (int n = 0; n < target.num_nodes(); ++n) out.node_values(n)[d] = t[n];
    }
    return out;
}

/// Discrete L2 inner product with trapezoidal cell weights.
inline double l2_inner(const ScalarField& f, const ScalarField& g) {
    f.require_same_grid(g);
    const Grid2D& grid = f.grid();
    double s = 0.0;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) s += grid.cell_weight(i, j) * f(i, j) * g(i, j);
    return s;
}

inline double l2_norm(const ScalarField& f) { return std::sqrt(l2_inner(f, f)); }

inline double sup_norm(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s = std::max(s, std::abs(v));
    return s;
}

inline double sup_norm(const AngularField& f) {
    double s = 0.0;
    for (double v : f.values()) s = std::max(s, std::abs(v));
    return s;
}

inline double min_value(const ScalarField& f) {
    double s = f.values().front();
    for (double v : f.values()) s = std::min(s, v);
    return s;
}

inline double max_value(const ScalarField& f) {
    double s = f.values().front();
    for (double v : f.values()) s = std::max(s, v);
    return s;
}

inline double min_value(const AngularField& f) {
    double s = f.values().front();
    for (double v : f.values()) s = std::min(s, v);
    return s;
}

/// || approx - truth ||_2 / || truth ||_2 in the cell-weighted discrete norm.
inline double relative_l2_error(const ScalarField& approx, const ScalarField& truth) {
    approx.require_same_grid(truth);
    const double denom = l2_norm(truth);
    if (denom == 0.0) throw Error("relative_l2_error: reference field has zero norm");
    ScalarField diff = approx;
    diff -= truth;
    return l2_norm(diff) / denom;
}

} // namespace umblt
