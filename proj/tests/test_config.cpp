#include <catch2/catch_amalgamated.hpp>

#include <umblt/config.hpp>

using namespace umblt;
using Catch::Approx;

TEST_CASE("config text parsing") {
    const std::string text = R"(
# comment line
domain = [0, 0.2, 0, 0.2]
grid = [121, 121]
recon_grid = [61, 61]
directions = 8
sigma = {affine: [0.1, 0.1, 0]}
kernel = {hg: 0.5}
sources = [{gaussian: {center: [0.08, 0.12], sharpness: 100}}, {shepp_logan}]
v0_boundary = 1.0
method = neumann
noise = [0, 0.01, 0.02, 0.05]
seed = 12
out = "runs/demo"

[solver]
tolerance = 1e-10
max_iterations = 40000

[neumann]
tolerance = 1e-6
)";
    ExperimentConfig cfg = config_from_values(parse_config_text(text));
    CHECK(cfg.x1_max == Approx(0.2));
    CHECK(cfg.forward_nx == 121);
    CHECK(cfg.recon_nx == 61);
    CHECK(cfg.directions == 8);
    CHECK(cfg.sigma.affine);
    CHECK(cfg.sigma.c0 == Approx(0.1));
    CHECK(cfg.sigma.c1 == Approx(0.1));
    CHECK(cfg.kernel.henyey_greenstein);
    CHECK(cfg.kernel.g == Approx(0.5));
    REQUIRE(cfg.sources.size() == 2);
    CHECK(cfg.sources[0].kind == PhantomSpec::Kind::gaussian);
    CHECK(cfg.sources[0].center1 == Approx(0.08));
    CHECK(cfg.sources[0].sharpness == Approx(100.0));
    CHECK(cfg.sources[1].kind == PhantomSpec::Kind::shepp_logan);
    CHECK(cfg.method == InversionMethod::neumann);
    CHECK(cfg.noise_levels == std::vector<double>{0, 0.01, 0.02, 0.05});
    CHECK(cfg.seed == 12);
    CHECK(cfg.out_dir == "runs/demo");
    CHECK(cfg.solver.tolerance == Approx(1e-10));
    CHECK(cfg.solver.max_iterations == 40000);
    CHECK(cfg.neumann.tolerance == Approx(1e-6));
}

TEST_CASE("gaussian width is an accepted alternative to sharpness") {
    ExperimentConfig cfg = config_from_values(
        parse_config_text("source = {gaussian: {center: [0.5, 0.5], width: 0.1}}\n"));
    CHECK(cfg.sources.at(0).sharpness == Approx(100.0));
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS_AS(parse_config_text("grid = [3, \n"), config_error);
    CHECK_THROWS_AS(parse_config_text("sigma = {affine [1,2,3]}\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("just a line\n"), config_error);
    CHECK_THROWS_AS(config_from_values(parse_config_text("bogus_key = 3\n")), config_error);
    CHECK_THROWS_AS(config_from_values(parse_config_text("noise = [0.5, 1.5]\n")), config_error);
    CHECK_THROWS_AS(config_from_values(parse_config_text("grid = [1, 10]\n")), config_error);
    CHECK_THROWS_AS(config_from_values(parse_config_text("method = banana\n")), config_error);
    CHECK_THROWS_AS(config_from_values(parse_config_text("source = {vortex: 1}\n")), config_error);
    CHECK_THROWS_AS(config_from_values(parse_config_text("directions = 2.5\n")), config_error);
}

TEST_CASE("format_config round-trips through the parser") {
    ExperimentConfig cfg = experiment_preset(1);
    cfg.noise_levels = {0.0, 0.015};
    cfg.write_pgm = true;
    ExperimentConfig back = config_from_values(parse_config_text(format_config(cfg)));
    CHECK(back.x1_max == cfg.x1_max);
    CHECK(back.forward_nx == cfg.forward_nx);
    CHECK(back.sigma.c1 == cfg.sigma.c1);
    CHECK(back.kernel.g == cfg.kernel.g);
    CHECK(back.sources.size() == cfg.sources.size());
    CHECK(back.sources[0].kind == cfg.sources[0].kind);
    CHECK(back.sources[0].sharpness == cfg.sources[0].sharpness);
    CHECK(back.noise_levels == cfg.noise_levels);
    CHECK(back.method == cfg.method);
    CHECK(back.seed == cfg.seed);
    CHECK(back.write_pgm == cfg.write_pgm);
    CHECK(back.out_dir == cfg.out_dir);
    CHECK(back.solver.tolerance == cfg.solver.tolerance);
    CHECK(back.fredholm_svd_threshold == cfg.fredholm_svd_threshold);
}

TEST_CASE("experiment presets") {
    ExperimentConfig e1 = experiment_preset(1);
    CHECK(e1.x1_max == Approx(0.2));
    CHECK(e1.sigma.c0 == Approx(0.1));
    CHECK(e1.method == InversionMethod::neumann);
    REQUIRE(e1.sources.size() == 2);
    CHECK(e1.sources[0].kind == PhantomSpec::Kind::gaussian);
    CHECK(e1.sources[1].kind == PhantomSpec::Kind::shepp_logan);
    CHECK(e1.forward_nx == 121);
    CHECK(e1.recon_nx == 61);
    CHECK(e1.directions == 8);
    CHECK(e1.noise_levels == std::vector<double>{0, 0.01, 0.02, 0.05});

    ExperimentConfig e2 = experiment_preset(2);
    CHECK(e2.x1_max == Approx(1.0));
    CHECK(e2.sigma.c0 == Approx(1.1));
    CHECK(e2.sigma.c1 == Approx(0.2));
    CHECK(e2.sources[0].sharpness == Approx(10.0));
    CHECK(e2.method == InversionMethod::neumann);

    ExperimentConfig e3 = experiment_preset(3);
    CHECK(e3.sigma.c0 == Approx(0.1));
    CHECK(e3.method == InversionMethod::fredholm);
    CHECK(e3.sources.size() == 1);

    ExperimentConfig e4 = experiment_preset(4);
    CHECK(e4.method == InversionMethod::fredholm);
    REQUIRE(e4.sources.size() == 2);
    CHECK(e4.sources[0].kind == PhantomSpec::Kind::shepp_logan);
    CHECK(e4.sources[1].kind == PhantomSpec::Kind::smoothed_shepp_logan);
    CHECK(e4.sources[1].smooth_std == Approx(3.0));

    CHECK_THROWS_AS(experiment_preset(5), config_error);
}
