#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "grid.hpp"

namespace umblt {

/**
 * Closed-form test sources and attenuation profiles.
 *
 * kinds:
 *  - gaussian:             exp(-sharpness * |x - center|^2)
 *  - shepp_logan:          the classic 10-ellipse phantom scaled to the
 *                          domain bounding box, clipped to >= 0
 *  - smoothed_shepp_logan: shepp_logan convolved with a pixel-space Gaussian
 *  - affine:               c0 + c1 x1 + c2 x2
 *  - constant:             value
 */
struct PhantomSpec {
    enum class Kind { gaussian, shepp_logan, smoothed_shepp_logan, affine, constant };

    Kind kind = Kind::constant;
    double center1 = 0.0, center2 = 0.0, sharpness = 1.0; // gaussian
    double smooth_std = 3.0;                              // smoothed shepp-logan, in pixels
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;                  // affine
    double value = 0.0;                                   // constant

    static PhantomSpec gaussian(double cx, double cy, double sharpness) {
        PhantomSpec s;
        s.kind = Kind::gaussian;
        s.center1 = cx;
        s.center2 = cy;
        s.sharpness = sharpness;
        return s;
    }
    static PhantomSpec shepp_logan() {
        PhantomSpec s;
        s.kind = Kind::shepp_logan;
        return s;
    }
    static PhantomSpec smoothed_shepp_logan(double std_pixels = 3.0) {
        PhantomSpec s;
        s.kind = Kind::smoothed_shepp_logan;
        s.smooth_std = std_pixels;
        return s;
    }
    static PhantomSpec affine(double c0, double c1, double c2) {
        PhantomSpec s;
        s.kind = Kind::affine;
        s.c0 = c0;
        s.c1 = c1;
        s.c2 = c2;
        return s;
    }
    static PhantomSpec constant(double v) {
        PhantomSpec s;
        s.kind = Kind::constant;
        s.value = v;
        return s;
    }

    std::string label() const {
        switch (kind) {
            case Kind::gaussian: return "gaussian";
            case Kind::shepp_logan: return "shepp_logan";
            case Kind::smoothed_shepp_logan: return "smoothed_shepp_logan";
            case Kind::affine: return "affine";
            case Kind::constant: return "constant";
        }
        return "unknown";
    }
};

namespace detail {

// Classic Shepp-Logan ellipses: intensity, semi-axes a/b, center, angle (deg).
struct SheppLoganEllipse {
    double intensity, a, b, x0, y0, phi_deg;
};

inline const std::array<SheppLoganEllipse, 10>& shepp_logan_table() {
    static const std::array<SheppLoganEllipse, 10> table{{
        {2.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.98, 0.6624, 0.874, 0.0, -0.0184, 0.0},
        {-0.02, 0.11, 0.31, 0.22, 0.0, -18.0},
        {-0.02, 0.16, 0.41, -0.22, 0.0, 18.0},
        {0.01, 0.21, 0.25, 0.0, 0.35, 0.0},
        {0.01, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.01, 0.046, 0.046, 0.0, -0.1, 0.0},
        {0.01, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.01, 0.023, 0.023, 0.0, -0.606, 0.0},
        {0.01, 0.023, 0.046, 0.06, -0.605, 0.0},
    }};
    return table;
}

/// Phantom value at a point of the canonical [-1, 1]^2 frame, clipped to >= 0.
inline double shepp_logan_at(double x, double y) {
    double v = 0.0;
    for (const auto& e : detail::shepp_logan_table()) {
        const double phi = e.phi_deg * DirectionSet::pi() / 180.0;
        const double c = std::cos(phi), s = std::sin(phi);
        const double dx = x - e.x0, dy = y - e.y0;
        const double u = c * dx + s * dy;
        const double w = -s * dx + c * dy;
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.intensity;
    }
    return v < 0.0 ? 0.0 : v;
}

} // namespace detail

/**
 * Discrete convolution with a normalized Gaussian of the given standard
 * deviation in pixel units, truncated at radius ceil(4 std). Near the
 * boundary the kernel is renormalized over its in-domain support, so
 * constants are preserved exactly.
 */
inline ScalarField gaussian_smooth(const ScalarField& f, double std_pixels) {
    if (!(std_pixels > 0.0)) throw config_error("gaussian_smooth: std must be > 0");
    const Grid2D& g = f.grid();
    const int r = static_cast<int>(std::ceil(4.0 * std_pixels));
    std::vector<double> w1d(2 * r + 1);
    for (int k = -r; k <= r; ++k)
        w1d[k + r] = std::exp(-0.5 * (k * k) / (std_pixels * std_pixels));

    ScalarField out(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            double acc = 0.0, wsum = 0.0;
            for (int q = std::max(0, j - r); q <= std::min(g.ny() - 1, j + r); ++q)
                for (int p = std::max(0, i - r); p <= std::min(g.nx() - 1, i + r); ++p) {
                    const double w = w1d[p - i + r] * w1d[q - j + r];
                    acc += w * f(p, q);
                    wsum += w;
                }
            out(i, j) = acc / wsum;
        }
    return out;
}

/// Samples the phantom at every grid node. The Shepp-Logan frame [-1, 1]^2
/// is mapped affinely onto the grid's bounding box.
inline ScalarField render(const PhantomSpec& spec, const Grid2D& grid) {
    switch (spec.kind) {
        case PhantomSpec::Kind::gaussian:
            return ScalarField::from_function(grid, [&](double x1, double x2) {
                const double d1 = x1 - spec.center1, d2 = x2 - spec.center2;
                return std::exp(-spec.sharpness * (d1 * d1 + d2 * d2));
            });
        case PhantomSpec::Kind::shepp_logan:
            return ScalarField::from_function(grid, [&](double x1, double x2) {
                const double u = 2.0 * (x1 - grid.x1_min()) / (grid.x1_max() - grid.x1_min()) - 1.0;
                const double v = 2.0 * (x2 - grid.x2_min()) / (grid.x2_max() - grid.x2_min()) - 1.0;
                return detail::shepp_logan_at(u, v);
            });
        case PhantomSpec::Kind::smoothed_shepp_logan:
            return gaussian_smooth(render(PhantomSpec::shepp_logan(), grid), spec.smooth_std);
        case PhantomSpec::Kind::affine:
            return ScalarField::from_function(
                grid, [&](double x1, double x2) { return spec.c0 + spec.c1 * x1 + spec.c2 * x2; });
        case PhantomSpec::Kind::constant:
            return ScalarField(grid, spec.value);
    }
    throw config_error("render: unknown phantom kind");
}

} // namespace umblt
