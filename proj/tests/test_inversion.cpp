#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include <umblt/inversion.hpp>

using namespace umblt;
using Catch::Approx;

namespace {

OpticalMedium small_exp1_medium(const Grid2D& grid) {
    return OpticalMedium(
        ScalarField::from_function(grid, [](double x1, double) { return 0.1 + 0.1 * x1; }),
        ScatteringKernel::henyey_greenstein(0.5, DirectionSet(8)));
}

} // namespace

TEST_CASE("basis set layout") {
    Grid2D domain(61, 61, 0, 1, 0, 1);
    BasisSet basis(domain);
    CHECK(basis.polynomial_count() == 66);
    CHECK(basis.pyramid_count() == 441);
    CHECK(basis.size() == 507);

    CHECK(BasisSet(domain, true, false).size() == 66);
    CHECK(BasisSet(domain, false, true).size() == 441);

    std::vector<ScalarField> fields = evaluate_basis(BasisSet(domain, true, false), domain);

    SECTION("the first polynomial is the constant one") {
        for (double v : fields[0].values()) CHECK(v == 1.0);
    }

    SECTION("graded ordering: degree-1 block is x2 then x1") {
        for (int j = 0; j < domain.ny(); ++j)
            for (int i = 0; i < domain.nx(); ++i) {
                CHECK(fields[1](i, j) == Approx(domain.x2(j)).margin(1e-14));
                CHECK(fields[2](i, j) == Approx(domain.x1(i)).margin(1e-14));
            }
    }
}

TEST_CASE("pyramid basis geometry") {
    Grid2D domain(61, 61, 0, 1, 0, 1);
    BasisSet basis(domain, false, true);
    std::vector<ScalarField> fields = evaluate_basis(basis, domain);

    SECTION("center pyramid peaks at the domain center and vanishes off-support") {
        const ScalarField& f = fields[10 * 21 + 10]; // vertex (0.5, 0.5)
        CHECK(f(30, 30) == 1.0);
        // at the support edge the value is zero up to coordinate rounding
        CHECK(f(27, 30) < 1e-12);
        CHECK(f(30, 33) < 1e-12);
        CHECK(f(27, 33) < 1e-12);
        // inside the support it is positive
        CHECK(f(29, 30) == Approx(2.0 / 3.0).margin(1e-13));
        // support square has side 1/10 of the domain
        for (int j = 0; j < domain.ny(); ++j)
            for (int i = 0; i < domain.nx(); ++i)
                if (std::abs(domain.x1(i) - 0.5) >= 0.05 || std::abs(domain.x2(j) - 0.5) >= 0.05)
                    CHECK(f(i, j) <= 1e-12);
    }

    SECTION("pyramids sum to one at every vertex node") {
        ScalarField sum(domain, 0.0);
        for (const ScalarField& f : fields) sum += f;
        for (int q = 0; q <= 20; ++q)
            for (int p = 0; p <= 20; ++p) CHECK(sum(3 * p, 3 * q) == Approx(1.0).margin(1e-12));
    }

    SECTION("evaluation outside the basis domain is rejected") {
        CHECK_THROWS_AS(evaluate_basis(basis, Grid2D(11, 11, 0, 1.5, 0, 1)),
                        domain_mismatch_error);
    }
}

TEST_CASE("neumann inversion") {
    SECTION("transport-only medium converges in one correction") {
        Grid2D grid(21, 21, 0, 1, 0, 1);
        DirectionSet dirs(8);
        OpticalMedium m(ScalarField(grid, 0.0), ScatteringKernel::none(dirs));
        AngularField v0(grid, dirs, 1.0);
        ScalarField s = ScalarField::from_function(
            grid, [](double x1, double x2) { return 1.0 + x1 * x2; });
        InternalFunctional h = internal_functional(op_S(s, m), v0, s, m);
        ReconstructionResult r = neumann_invert(h, v0, m);
        CHECK(r.converged);
        CHECK(r.iterations_or_rank == 1);
        CHECK(relative_l2_error(r.source, s) < 1e-12);
    }

    SECTION("round trip on a contraction-certified medium") {
        Grid2D grid(31, 31, 0, 0.2, 0, 0.2);
        OpticalMedium m = small_exp1_medium(grid);
        AngularField v0 = solve_adjoint(m, 1.0).field;
        ContractionAudit audit = contraction_audit(m, v0);
        REQUIRE(audit.neumann_guaranteed);

        ScalarField s = ScalarField::from_function(grid, [](double x1, double x2) {
            const double d1 = x1 - 0.08, d2 = x2 - 0.12;
            return std::exp(-100.0 * (d1 * d1 + d2 * d2));
        });
        InternalFunctional h = internal_functional(op_S(s, m), v0, s, m);
        NeumannOptions opt;
        ReconstructionResult r = neumann_invert(h, v0, m, opt);
        CHECK(r.converged);
        CHECK(relative_l2_error(r.source, s) < 10 * opt.tolerance);

        SECTION("residual history contracts at least as fast as the audited bound") {
            REQUIRE(r.residual_history.size() >= 3);
            for (size_t k = 0; k + 1 < r.residual_history.size(); ++k) {
                if (r.residual_history[k] < 1e-8 * r.residual_history[0]) break;
                CHECK(r.residual_history[k + 1] <= audit.bound_x2 * r.residual_history[k]);
            }
        }

        SECTION("fixed-point certificate") {
            ScalarField lhs = forward_map_T(r.source, v0, m);
            ScalarField mh = op_M(h.h, v0);
            lhs -= mh;
            CHECK(l2_norm(lhs) <= 10 * opt.tolerance);
        }
    }

    SECTION("the alternating sign is essential: the unsigned update mis-solves") {
        Grid2D grid(21, 21, 0, 1, 0, 1);
        DirectionSet dirs(8);
        OpticalMedium m(
            ScalarField::from_function(grid, [](double x1, double) { return 1.1 + 0.2 * x1; }),
            ScatteringKernel::henyey_greenstein(0.5, dirs));
        AngularField v0 = solve_adjoint(m, 1.0).field;
        ScalarField s = ScalarField::from_function(grid, [](double x1, double x2) {
            const double d1 = x1 - 0.4, d2 = x2 - 0.6;
            return std::exp(-10.0 * (d1 * d1 + d2 * d2));
        });
        InternalFunctional h = internal_functional(op_S(s, m), v0, s, m);

        ReconstructionResult good = neumann_invert(h, v0, m);
        CHECK(relative_l2_error(good.source, s) < 1e-4);

        NeumannOptions unsigned_opt;
        unsigned_opt.alternating_sign = false;
        ReconstructionResult bad = neumann_invert(h, v0, m, unsigned_opt);
        // converges to the wrong fixed point; the certificate exposes it
        const double good_err = relative_l2_error(good.source, s);
        const double bad_err = relative_l2_error(bad.source, s);
        CHECK(bad_err > 100 * std::max(good_err, 1e-9));
        ScalarField lhs = forward_map_T(bad.source, v0, m);
        ScalarField mh = op_M(h.h, v0);
        lhs -= mh;
        CHECK(l2_norm(lhs) / l2_norm(mh) > 1e-3);
    }

    SECTION("divergence guard throws") {
        Grid2D grid(15, 15, 0, 0.2, 0, 0.2);
        OpticalMedium m = small_exp1_medium(grid);
        AngularField v0 = solve_adjoint(m, 1.0).field;
        ScalarField s(grid, 1.0);
        InternalFunctional h = internal_functional(op_S(s, m), v0, s, m);
        NeumannOptions opt;
        opt.divergence_factor = 1e-9; // any nonzero correction trips the guard
        CHECK_THROWS_AS(neumann_invert(h, v0, m, opt), divergence_error);
    }

    SECTION("nonpositive v0 is rejected") {
        Grid2D grid(15, 15, 0, 0.2, 0, 0.2);
        OpticalMedium m = small_exp1_medium(grid);
        AngularField v0(grid, DirectionSet(8), 1.0);
        v0.node_values(7)[1] = -0.1;
        InternalFunctional h{ScalarField(grid, 0.0), ""};
        CHECK_THROWS_AS(neumann_invert(h, v0, m), positivity_error);
    }
}

TEST_CASE("fredholm inversion") {
    // transport-only medium on the unit square: T = Id, so the Galerkin
    // system reduces to the plain basis Gram system
    Grid2D grid(21, 21, 0, 1, 0, 1);
    DirectionSet dirs(4);
    OpticalMedium m(ScalarField(grid, 0.0), ScatteringKernel::none(dirs));
    AngularField v0(grid, dirs, 1.0);
    BasisSet polys(grid, true, false);

    SECTION("zero functional gives zero coefficients and a zero source") {
        InternalFunctional h{ScalarField(grid, 0.0), ""};
        ReconstructionResult r = fredholm_invert(h, v0, m, polys);
        CHECK(r.converged);
        CHECK(sup_norm(r.source) == 0.0);
        for (double c : r.coefficients) CHECK(c == 0.0);
        CHECK(r.effective_rank > 0);
    }

    SECTION("a source inside the span is recovered with its own coefficients") {
        // moderate degree keeps the Gram matrix full rank at the default
        // truncation threshold, so the direct solve is the exact oracle
        BasisSet low = polys;
        low.max_degree = 4;
        std::vector<ScalarField> fields = evaluate_basis(low, grid);
        const int target = 5; // x1^2 in graded ordering
        const ScalarField& s = fields[target];
        // T = Id: the functional is 2 pi S and M[H] = S
        ScalarField h_field = s;
        h_field *= 2 * DirectionSet::pi();
        InternalFunctional h{h_field, ""};
        ReconstructionResult r = fredholm_invert(h, v0, m, low);
        CHECK(r.effective_rank == low.size());
        CHECK(relative_l2_error(r.source, s) < 1e-9);

        // oracle: solve the assembled Gram system directly
        Eigen::MatrixXd gram(low.size(), low.size());
        Eigen::VectorXd rhs(low.size());
        for (int a = 0; a < low.size(); ++a) {
            rhs[a] = l2_inner(fields[a], s);
            for (int b = 0; b < low.size(); ++b) gram(a, b) = l2_inner(fields[a], fields[b]);
        }
        Eigen::VectorXd direct = gram.fullPivLu().solve(rhs);
        for (int k = 0; k < low.size(); ++k)
            CHECK(r.coefficients[k] == Approx(direct[k]).margin(1e-7));
        CHECK(r.coefficients[target] == Approx(1.0).margin(1e-7));
    }

    SECTION("degree-10 polynomials recover an in-span field to truncation accuracy") {
        std::vector<ScalarField> fields = evaluate_basis(polys, grid);
        const ScalarField& s = fields[5];
        ScalarField h_field = s;
        h_field *= 2 * DirectionSet::pi();
        ReconstructionResult r = fredholm_invert({h_field, ""}, v0, m, polys);
        // the Gram matrix is near-singular; dropped eigenspaces cost about
        // the square root of the relative threshold in field norm
        CHECK(relative_l2_error(r.source, s) < 1e-4);
    }

    SECTION("pyramid-only recovery of a pyramid source") {
        Grid2D fine(41, 41, 0, 1, 0, 1);
        OpticalMedium mf(ScalarField(fine, 0.0), ScatteringKernel::none(dirs));
        AngularField v0f(fine, dirs, 1.0);
        BasisSet pyr(fine, false, true);
        std::vector<ScalarField> fields = evaluate_basis(pyr, fine);
        const int target = 8 * 21 + 13;
        ScalarField h_field = fields[target];
        h_field *= 2 * DirectionSet::pi();
        ReconstructionResult r = fredholm_invert({h_field, ""}, v0f, mf, pyr);
        CHECK(relative_l2_error(r.source, fields[target]) < 1e-8);
        CHECK(r.coefficients[target] == Approx(1.0).margin(1e-6));
        CHECK(r.gram_residual < 1e-8);
        CHECK(r.effective_rank == pyr.size());
    }

    SECTION("disk cache round trip reproduces the reconstruction bitwise") {
        namespace fs = std::filesystem;
        const std::string cache = "test_inversion_cache";
        fs::remove_all(cache);
        ScalarField h_field = ScalarField::from_function(
            grid, [](double x1, double x2) { return std::sin(3 * x1) + x2; });
        InternalFunctional h{h_field, ""};
        ReconstructionResult first = fredholm_invert(h, v0, m, polys, 1e-10, {}, cache);
        REQUIRE(fs::exists(cache));
        ReconstructionResult second = fredholm_invert(h, v0, m, polys, 1e-10, {}, cache);
        for (int n = 0; n < grid.num_nodes(); ++n)
            CHECK(first.source[n] == second.source[n]);
        fs::remove_all(cache);
    }
}
