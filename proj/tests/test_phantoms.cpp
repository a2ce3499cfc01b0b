#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <umblt/phantoms.hpp>

using namespace umblt;
using Catch::Approx;

TEST_CASE("gaussian phantom values") {
    Grid2D g(121, 121, 0, 0.2, 0, 0.2);
    ScalarField s1 = render(PhantomSpec::gaussian(0.08, 0.12, 100.0), g);
    // peak sits on a grid node of the 121-node grid over [0, 0.2]
    CHECK(s1(48, 72) == Approx(1.0).margin(1e-12));

    Grid2D unit(121, 121, 0, 1, 0, 1);
    ScalarField s3 = render(PhantomSpec::gaussian(0.4, 0.6, 10.0), unit);
    CHECK(s3(48, 72) == Approx(1.0).margin(1e-12));
    const double d = 0.1;
    CHECK(s3(48, 84) == Approx(std::exp(-10 * d * d)).epsilon(1e-12)); // (0.4, 0.7)
    CHECK(max_value(s3) <= 1.0);
    CHECK(min_value(s3) >= 0.0);
}

TEST_CASE("affine phantom values") {
    Grid2D g(21, 21, 0, 0.2, 0, 0.2);
    ScalarField sig = render(PhantomSpec::affine(0.1, 0.1, 0.0), g);
    CHECK(sig(20, 7) == Approx(0.1 + 0.1 * 0.2).epsilon(1e-13)); // x1 = 0.2 -> 0.12
    CHECK(sig(0, 0) == Approx(0.1).epsilon(1e-13));
}

TEST_CASE("shepp-logan phantom") {
    Grid2D g(121, 121, 0, 1, 0, 1);
    ScalarField p = render(PhantomSpec::shepp_logan(), g);

    SECTION("values are nonnegative and bounded by the skull intensity") {
        CHECK(min_value(p) >= 0.0);
        CHECK(max_value(p) <= 2.0 + 1e-12);
        CHECK(max_value(p) == Approx(2.0)); // the outer ellipse alone
    }

    SECTION("center of the head is at 2 - 0.98") {
        CHECK(p(60, 60) == Approx(1.02).margin(1e-12));
    }

    SECTION("corners are outside the head") {
        CHECK(p(0, 0) == 0.0);
        CHECK(p(120, 0) == 0.0);
        CHECK(p(0, 120) == 0.0);
        CHECK(p(120, 120) == 0.0);
    }

    SECTION("rendering is deterministic") {
        ScalarField q = render(PhantomSpec::shepp_logan(), g);
        for (int n = 0; n < g.num_nodes(); ++n) CHECK(p[n] == q[n]);
    }
}

TEST_CASE("gaussian smoothing") {
    Grid2D g(61, 61, 0, 1, 0, 1);

    SECTION("constants are preserved exactly") {
        ScalarField c(g, 2.5);
        ScalarField r = gaussian_smooth(c, 3.0);
        for (double v : r.values()) CHECK(v == Approx(2.5).epsilon(1e-14));
    }

    SECTION("delta response: peak equals the normalized center weight, mass is kept") {
        const double std_px = 3.0;
        ScalarField delta(g, 0.0);
        delta(30, 30) = 1.0;
        ScalarField r = gaussian_smooth(delta, std_px);

        const int rad = static_cast<int>(std::ceil(4.0 * std_px));
        double wsum = 0.0;
        for (int q = -rad; q <= rad; ++q)
            for (int p = -rad; p <= rad; ++p)
                wsum += std::exp(-0.5 * (p * p + q * q) / (std_px * std_px));
        CHECK(r(30, 30) == Approx(1.0 / wsum).epsilon(1e-12));

        double mass = 0.0;
        for (double v : r.values()) mass += v;
        CHECK(mass == Approx(1.0).margin(1e-12));
    }

    SECTION("blur distance grows with the kernel width") {
        ScalarField p = render(PhantomSpec::shepp_logan(), g);
        double prev = 0.0;
        for (double std_px : {1.0, 2.0, 3.0}) {
            const double dist = relative_l2_error(gaussian_smooth(p, std_px), p);
            CHECK(dist > prev);
            prev = dist;
        }
    }

    SECTION("mean of an interior-supported field is preserved") {
        Grid2D fine(81, 81, 0, 1, 0, 1);
        std::mt19937_64 rng(19);
        ScalarField f(fine, 0.0);
        for (int j = 20; j < 61; ++j)
            for (int i = 20; i < 61; ++i) f(i, j) = (rng() >> 11) * 0x1.0p-53;
        ScalarField r = gaussian_smooth(f, 3.0);
        double before = 0.0, after = 0.0;
        for (double v : f.values()) before += v;
        for (double v : r.values()) after += v;
        CHECK(after / f.size() == Approx(before / f.size()).margin(1e-10));
    }

    SECTION("smoothed phantom spec renders in pixel units of the given grid") {
        ScalarField direct = gaussian_smooth(render(PhantomSpec::shepp_logan(), g), 3.0);
        ScalarField via_spec = render(PhantomSpec::smoothed_shepp_logan(3.0), g);
        for (int n = 0; n < g.num_nodes(); ++n) CHECK(direct[n] == via_spec[n]);
    }

    SECTION("invalid width is rejected") {
        CHECK_THROWS_AS(gaussian_smooth(ScalarField(g, 1.0), 0.0), config_error);
    }
}
