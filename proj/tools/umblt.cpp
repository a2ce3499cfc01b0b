// Command-line front end: forward/adjoint transport solves, measurement
// synthesis, source reconstruction and the four built-in experiments.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <umblt/umblt.hpp>

namespace fs = std::filesystem;
using namespace umblt;

namespace {

struct CommonFlags {
    std::string config_path;
    int preset = 0;
    std::vector<int> grid;
    std::vector<int> recon_grid;
    int directions = 0;
    std::vector<double> noise;
    int64_t seed = -1;
    std::string out;
    std::string cache;
    bool pgm = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_preset = false) {
    cmd->add_option("--config", flags.config_path, "configuration file");
    if (with_preset) cmd->add_option("--preset", flags.preset, "start from experiment preset 1-4");
    cmd->add_option("--grid", flags.grid, "forward grid NX NY")->expected(2);
    cmd->add_option("--recon-grid", flags.recon_grid, "reconstruction grid NX NY")->expected(2);
    cmd->add_option("--directions", flags.directions, "number of discrete directions");
    cmd->add_option("--noise", flags.noise, "noise levels (fractions)");
    cmd->add_option("--seed", flags.seed, "noise rng seed");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--cache", flags.cache, "basis-column cache directory");
    cmd->add_flag("--pgm", flags.pgm, "also write PGM previews");
}

ExperimentConfig build_config(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.preset ? experiment_preset(flags.preset) : ExperimentConfig{};
    if (flags.preset == 0 && flags.config_path.empty())
        cfg.sources = {PhantomSpec::gaussian(0.5, 0.5, 10.0)};
    if (!flags.config_path.empty()) cfg = load_config(flags.config_path, cfg);
    if (!flags.grid.empty()) {
        cfg.forward_nx = flags.grid[0];
        cfg.forward_ny = flags.grid[1];
    }
    if (!flags.recon_grid.empty()) {
        cfg.recon_nx = flags.recon_grid[0];
        cfg.recon_ny = flags.recon_grid[1];
    }
    if (flags.directions) cfg.directions = flags.directions;
    if (!flags.noise.empty()) cfg.noise_levels = flags.noise;
    if (flags.seed >= 0) {
        cfg.seed = static_cast<uint64_t>(flags.seed);
        cfg.seed_set = true;
    }
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (!flags.cache.empty()) cfg.cache_dir = flags.cache;
    if (flags.pgm) cfg.write_pgm = true;
    cfg.validate();
    return cfg;
}

void print_audit(const WellPosednessReport& wp, const ContractionAudit& a) {
    std::cout << "solvability conditions:\n";
    std::cout << "  rho (discrete scattering bound)    = " << wp.rho << "\n";
    std::cout << "  inf sigma                          = " << wp.inf_sigma << "\n";
    std::cout << "  alpha = inf sigma - rho            = " << wp.alpha << "  -> "
              << (wp.x1_holds ? "attenuation dominance holds" : "attenuation dominance fails")
              << "\n";
    std::cout << "  diam(X) * rho                      = " << wp.diam_rho << "  -> "
              << (wp.x2_holds ? "small-domain condition holds" : "small-domain condition fails")
              << "\n";
    std::cout << "contraction audit:\n";
    std::cout << "  sup v0                             = " << a.v0_sup << "\n";
    std::cout << "  inf_x int v0 dtheta                = " << a.inf_angular_v0 << "\n";
    std::cout << "  bound_x1                           = " << a.bound_x1 << "\n";
    std::cout << "  bound_x2                           = " << a.bound_x2 << "\n";
    std::cout << "  Neumann series "
              << (a.neumann_guaranteed ? "certified convergent (bound_x2 < 1)"
                                       : "not certified by the audit")
              << "\n";
}

int cmd_show_config(const CommonFlags& flags) {
    std::cout << format_config(build_config(flags));
    return 0;
}

int cmd_audit(const CommonFlags& flags) {
    ExperimentConfig cfg = build_config(flags);
    MediumSetup setup = prepare_medium(cfg);
    print_audit(setup.wellposedness, setup.audit);
    return 0;
}

int cmd_forward(const CommonFlags& flags) {
    ExperimentConfig cfg = build_config(flags);
    const Grid2D grid = cfg.forward_grid();
    OpticalMedium medium(detail::build_sigma(cfg.sigma, grid),
                         detail::build_kernel(cfg.kernel, DirectionSet(cfg.directions)));
    ScalarField source = render(cfg.sources.at(0), grid);
    TransportSolution u = solve_forward(medium, source, 0.0, cfg.solver);
    fs::create_directories(cfg.out_dir);
    auto paths = write_angular_csvs(u.field, (fs::path(cfg.out_dir) / "u").string());
    write_scalar_csv(angular_integrate(u.field), (fs::path(cfg.out_dir) / "u_mean.csv").string());
    std::cout << "forward solve: " << u.iterations << " sweeps, residual " << u.final_residual
              << "\n";
    for (const auto& p : paths) std::cout << "  " << p << "\n";
    std::cout << "  " << (fs::path(cfg.out_dir) / "u_mean.csv").string() << "\n";
    return 0;
}

int cmd_adjoint(const CommonFlags& flags) {
    ExperimentConfig cfg = build_config(flags);
    MediumSetup setup = prepare_medium(cfg);
    fs::create_directories(cfg.out_dir);
    auto paths = write_angular_csvs(setup.v0_fwd, (fs::path(cfg.out_dir) / "v0").string());
    write_scalar_csv(angular_integrate(setup.v0_fwd),
                     (fs::path(cfg.out_dir) / "v0_mean.csv").string());
    std::cout << "adjoint solve: " << setup.v0_iterations << " sweeps\n";
    print_audit(setup.wellposedness, setup.audit);
    for (const auto& p : paths) std::cout << "  " << p << "\n";
    return 0;
}

int cmd_synthesize(const CommonFlags& flags) {
    ExperimentConfig cfg = build_config(flags);
    MediumSetup setup = prepare_medium(cfg);
    fs::create_directories(cfg.out_dir);
    SynthesisResult synth = synthesize_for_source(setup, cfg.sources.at(0), cfg);
    write_scalar_csv(synth.h.h, (fs::path(cfg.out_dir) / "h.csv").string());
    write_scalar_csv(synth.truth, (fs::path(cfg.out_dir) / "truth.csv").string());
    write_scalar_csv(setup.medium_recon.sigma(), (fs::path(cfg.out_dir) / "sigma.csv").string());
    write_angular_csvs(setup.v0_recon, (fs::path(cfg.out_dir) / "v0").string());
    std::cout << "measurement package written to " << cfg.out_dir
              << " (h.csv, truth.csv, sigma.csv, v0_d*.csv)\n";
    return 0;
}

int cmd_invert(const CommonFlags& flags, const std::string& method, const std::string& in_dir,
               const std::string& truth_path) {
    ExperimentConfig cfg = build_config(flags);
    if (!method.empty())
        cfg.method = method == "fredholm" ? InversionMethod::fredholm : InversionMethod::neumann;

    ScalarField h_field = read_scalar_csv((fs::path(in_dir) / "h.csv").string());
    ScalarField sigma = read_scalar_csv((fs::path(in_dir) / "sigma.csv").string());
    AngularField v0 = read_angular_csvs((fs::path(in_dir) / "v0").string(), cfg.directions);
    OpticalMedium medium(std::move(sigma),
                         detail::build_kernel(cfg.kernel, DirectionSet(cfg.directions)));
    InternalFunctional h{std::move(h_field), "imported from " + in_dir};

    double noise = cfg.noise_levels.empty() ? 0.0 : cfg.noise_levels.front();
    if (!flags.noise.empty()) noise = flags.noise.front();
    if (noise > 0.0) h = add_noise(h, noise, cfg.seed);

    BasisSet basis(medium.grid(), cfg.fredholm_polynomials, cfg.fredholm_pyramids);
    ReconstructionResult rec =
        cfg.method == InversionMethod::neumann
            ? neumann_invert(h, v0, medium, cfg.neumann, cfg.solver)
            : fredholm_invert(h, v0, medium, basis, cfg.fredholm_svd_threshold, cfg.solver,
                              cfg.cache_dir);
    fs::create_directories(cfg.out_dir);
    const std::string recon_csv = (fs::path(cfg.out_dir) / "recon.csv").string();
    write_scalar_csv(rec.source, recon_csv);
    if (cfg.write_pgm) write_pgm(rec.source, (fs::path(cfg.out_dir) / "recon.pgm").string());

    std::cout << "method: " << (cfg.method == InversionMethod::neumann ? "neumann" : "fredholm")
              << ", noise " << 100 * noise << "%\n";
    if (cfg.method == InversionMethod::neumann)
        std::cout << "iterations: " << rec.iterations_or_rank
                  << ", converged: " << (rec.converged ? "yes" : "no") << "\n";
    else
        std::cout << "effective rank: " << rec.effective_rank
                  << ", Gram residual: " << rec.gram_residual << "\n";
    std::cout << "wrote " << recon_csv << "\n";
    if (!truth_path.empty()) {
        ScalarField truth = read_scalar_csv(truth_path);
        std::cout << "relative L2 error vs " << truth_path << ": "
                  << 100.0 * relative_l2_error(rec.source, truth) << "%\n";
    }
    return 0;
}

int cmd_experiment(const CommonFlags& flags, int number, const std::string& source_filter) {
    CommonFlags f = flags;
    f.preset = number;
    ExperimentConfig cfg = build_config(f);
    if (!source_filter.empty()) {
        std::vector<PhantomSpec> kept;
        for (const PhantomSpec& s : cfg.sources)
            if (s.label() == source_filter) kept.push_back(s);
        if (kept.empty())
            throw config_error("experiment: no source labelled '" + source_filter + "'");
        cfg.sources = kept;
    }

    RunReport report = run_experiment(cfg);
    print_audit(report.wellposedness, report.audit);
    for (const SourceRun& s : report.sources) {
        std::cout << "source " << s.label << ":\n";
        for (const NoiseRunEntry& e : s.entries) {
            std::cout << "  noise " << 100 * e.level << "%: ";
            if (e.ok)
                std::cout << "relative L2 error " << 100 * e.rel_l2_error << "%  (iterations/rank "
                          << e.iterations_or_rank << ", certificate " << e.certificate << ", "
                          << e.wall_seconds << " s)\n";
            else
                std::cout << "FAILED: " << e.error << "\n";
        }
    }
    std::cout << "report: " << report.report_path << "\n";
    return report.all_ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"radiative-transfer source reconstruction from a single internal functional"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string method = "neumann", in_dir, truth_path, source_filter;
    int preset_number = 0;

    CLI::App* show = app.add_subcommand("show-config", "print the effective configuration");
    add_common(show, flags, true);

    CLI::App* audit = app.add_subcommand("audit", "solvability and contraction report");
    add_common(audit, flags, true);

    CLI::App* forward = app.add_subcommand("forward", "solve the forward transport problem");
    add_common(forward, flags, true);

    CLI::App* adjoint = app.add_subcommand("adjoint", "solve the adjoint transport problem");
    add_common(adjoint, flags, true);

    CLI::App* synthesize =
        app.add_subcommand("synthesize", "synthesize the internal functional measurement");
    add_common(synthesize, flags, true);

    CLI::App* invert = app.add_subcommand("invert", "reconstruct a source from a measurement");
    add_common(invert, flags, true);
    invert->add_option("--method", method, "neumann or fredholm")
        ->check(CLI::IsMember({"neumann", "fredholm"}));
    invert->add_option("--in", in_dir, "measurement package directory (from synthesize)")
        ->required();
    invert->add_option("--truth", truth_path, "optional ground-truth CSV for error reporting");

    CLI::App* experiment = app.add_subcommand("experiment", "run a built-in experiment preset");
    experiment->add_option("number", preset_number, "preset number (1-4)")->required();
    add_common(experiment, flags, false);
    experiment->add_option("--source", source_filter, "run only the source with this label");

    CLI11_PARSE(app, argc, argv);

    try {
        if (show->parsed()) return cmd_show_config(flags);
        if (audit->parsed()) return cmd_audit(flags);
        if (forward->parsed()) return cmd_forward(flags);
        if (adjoint->parsed()) return cmd_adjoint(flags);
        if (synthesize->parsed()) return cmd_synthesize(flags);
        if (invert->parsed()) return cmd_invert(flags, method, in_dir, truth_path);
        if (experiment->parsed()) return cmd_experiment(flags, preset_number, source_filter);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
