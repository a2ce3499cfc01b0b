#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "functional.hpp"
#include "inversion.hpp"
#include "io.hpp"
#include "phantoms.hpp"
#include "rng.hpp"

namespace umblt {

/// Medium, adjoint weight and audits on both the forward (synthesis) grid
/// and the reconstruction grid. Reconstruction-grid quantities are bilinear
/// transfers of the forward-grid ones so both stages stay consistent.
struct MediumSetup {
    OpticalMedium medium_fwd;
    OpticalMedium medium_recon;
    AngularField v0_fwd;
    AngularField v0_recon;
    int v0_iterations;
    WellPosednessReport wellposedness;
    ContractionAudit audit;
};

namespace detail {

inline ScalarField build_sigma(const SigmaSpec& spec, const Grid2D& grid) {
    if (spec.affine)
        return ScalarField::from_function(grid, [&](double x1, double x2) {
            return spec.c0 + spec.c1 * x1 + spec.c2 * x2;
        });
    ScalarField loaded = read_scalar_csv(spec.csv_path);
    return loaded.grid() == grid ? loaded : interpolate(loaded, grid);
}

inline ScatteringKernel build_kernel(const KernelSpec& spec, const DirectionSet& dirs) {
    return spec.henyey_greenstein ? ScatteringKernel::henyey_greenstein(spec.g, dirs)
                                  : ScatteringKernel::none(dirs);
}

} // namespace detail

inline MediumSetup prepare_medium(const ExperimentConfig& cfg) {
    cfg.validate();
    const Grid2D fwd = cfg.forward_grid();
    const Grid2D recon = cfg.recon_grid();
    if (fwd == recon)
        std::clog << "warning: forward and reconstruction grids are identical; "
                     "synthetic data will not be downsampled\n";
    const DirectionSet dirs(cfg.directions);

    OpticalMedium medium_fwd(detail::build_sigma(cfg.sigma, fwd),
                             detail::build_kernel(cfg.kernel, dirs));
    TransportSolution v0 = solve_adjoint(medium_fwd, cfg.v0_boundary, cfg.solver);

    OpticalMedium medium_recon(interpolate(medium_fwd.sigma(), recon),
                               detail::build_kernel(cfg.kernel, dirs));
    AngularField v0_recon = interpolate(v0.field, recon);

    WellPosednessReport wp = check_wellposedness(medium_fwd);
    ContractionAudit audit = contraction_audit(medium_fwd, v0.field);
    return MediumSetup{std::move(medium_fwd), std::move(medium_recon), std::move(v0.field),
                       std::move(v0_recon),   v0.iterations,           wp,
                       audit};
}

/// Ground truth of a phantom on the reconstruction grid. Analytic phantoms
/// are sampled directly; the smoothed phantom is defined by pixel-space
/// filtering on the rendering grid and is therefore transferred from there.
inline ScalarField ground_truth(const PhantomSpec& spec, const Grid2D& render_grid,
                                const Grid2D& recon_grid) {
    if (spec.kind == PhantomSpec::Kind::smoothed_shepp_logan)
        return interpolate(render(spec, render_grid), recon_grid);
    return render(spec, recon_grid);
}

/// Everything one source contributes to an experiment: the synthesized
/// measurement and the matching ground truth, both on the reconstruction grid.
struct SynthesisResult {
    InternalFunctional h;
    ScalarField truth;
    int forward_iterations;
};

inline SynthesisResult synthesize_for_source(const MediumSetup& setup, const PhantomSpec& spec,
                                             const ExperimentConfig& cfg) {
    const Grid2D fwd = cfg.forward_grid();
    const Grid2D recon = cfg.recon_grid();
    ScalarField source = render(spec, fwd);
    TransportSolution u = solve_forward(setup.medium_fwd, source, 0.0, cfg.solver);
    InternalFunctional h_fwd = internal_functional(u.field, setup.v0_fwd, source,
                                                   setup.medium_fwd, "adjoint boundary value " +
                                                       std::to_string(cfg.v0_boundary));
    InternalFunctional h_recon{interpolate(h_fwd.h, recon), h_fwd.v0_meta};
    return SynthesisResult{std::move(h_recon), ground_truth(spec, fwd, recon), u.iterations};
}

/// Synthesizes the measurement of the configured source (the first one when
/// several are configured), on the reconstruction grid.
inline InternalFunctional synthesize_measurement(const ExperimentConfig& cfg,
                                                 size_t source_index = 0) {
    if (source_index >= cfg.sources.size())
        throw config_error("synthesize_measurement: source index out of range");
    MediumSetup setup = prepare_medium(cfg);
    return synthesize_for_source(setup, cfg.sources[source_index], cfg).h;
}

/**
 * Multiplicative per-node noise: H(x) * (1 + level * xi(x)) with xi drawn
 * i.i.d. uniform on [-1, 1) from the seeded generator. Level 0 returns the
 * input unchanged, bit for bit.
 */
inline InternalFunctional add_noise(const InternalFunctional& h, double level, uint64_t seed) {
    if (!(level >= 0.0)) throw config_error("add_noise: level must be >= 0");
    InternalFunctional out = h;
    if (level == 0.0) return out;
    std::mt19937_64 rng(seed);
    for (double& v : out.h.values()) v *= 1.0 + level * uniform_pm1(rng);
    return out;
}

struct NoiseRunEntry {
    double level = 0.0;
    uint64_t stream_seed = 0;
    bool ok = false;
    std::string error;
    double rel_l2_error = 0.0;
    int iterations_or_rank = 0;
    double certificate = 0.0; // neumann: ||T[S] - M[H]|| / ||M[H]||; fredholm: Gram residual
    int effective_rank = 0;
    double wall_seconds = 0.0;
    std::vector<double> residual_history;
    std::vector<std::string> files;
};

struct SourceRun {
    std::string label;
    std::string truth_csv;
    int forward_iterations = 0;
    std::vector<NoiseRunEntry> entries;
};

struct RunReport {
    WellPosednessReport wellposedness;
    ContractionAudit audit;
    int v0_iterations = 0;
    std::vector<SourceRun> sources;
    std::string out_dir;
    std::string report_path;

    bool all_ok() const {
        for (const auto& s : sources)
            for (const auto& e : s.entries)
                if (!e.ok) return false;
        return true;
    }
};

namespace detail {

inline std::string noise_dir_name(double level) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "noise_%g", 100.0 * level);
    return buf;
}

inline std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f%%", 100.0 * fraction);
    return buf;
}

inline void write_report_text(const RunReport& report, const ExperimentConfig& cfg,
                              std::ostream& out) {
    out << "reconstruction run report\n";
    out << "method: " << (cfg.method == InversionMethod::neumann ? "neumann" : "fredholm")
        << ", forward grid " << cfg.forward_nx << "x" << cfg.forward_ny << ", reconstruction grid "
        << cfg.recon_nx << "x" << cfg.recon_ny << ", directions " << cfg.directions << ", seed "
        << cfg.seed << "\n";
    const WellPosednessReport& wp = report.wellposedness;
    out << "solvability: rho=" << wp.rho << " inf_sigma=" << wp.inf_sigma << " alpha=" << wp.alpha
        << " (attenuation-dominance " << (wp.x1_holds ? "holds" : "fails")
        << "), diam*rho=" << wp.diam_rho << " (small-domain "
        << (wp.x2_holds ? "holds" : "fails") << ")\n";
    const ContractionAudit& a = report.audit;
    out << "contraction audit: sup v0=" << a.v0_sup << ", inf int v0=" << a.inf_angular_v0
        << ", bound_x1=" << a.bound_x1 << ", bound_x2=" << a.bound_x2 << " -> Neumann series "
        << (a.neumann_guaranteed ? "certified convergent (bound_x2 < 1)"
                                 : "not certified; inversion may still converge")
        << "\n";
    out << "adjoint solve sweeps: " << report.v0_iterations << "\n";
    for (const SourceRun& s : report.sources) {
        out << "\nsource " << s.label << " (forward sweeps " << s.forward_iterations << ")\n";
        out << "  truth: " << s.truth_csv << "\n";
        for (const NoiseRunEntry& e : s.entries) {
            out << "  noise " << 100.0 * e.level << "%: ";
            if (!e.ok) {
                out << "FAILED: " << e.error << "\n";
                continue;
            }
            out << "relative L2 error " << format_percent(e.rel_l2_error)
                << ", iterations/rank " << e.iterations_or_rank << ", certificate "
                << e.certificate << ", wall " << e.wall_seconds << " s\n";
            for (const std::string& f : e.files) out << "    " << f << "\n";
        }
    }
}

} // namespace detail

/**
 * Runs one full experiment: prepares the medium, synthesizes the internal
 * functional for every configured source, then for every noise level
 * perturbs the measurement, reconstructs the source and compares against
 * the ground truth. All fields of record are written as CSV under
 * cfg.out_dir; reported errors are recomputed from the files written.
 * A failing noise level is recorded and does not stop the remaining levels.
 */
inline RunReport run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.validate();
    MediumSetup setup = prepare_medium(cfg);

    RunReport report;
    report.wellposedness = setup.wellposedness;
    report.audit = setup.audit;
    report.v0_iterations = setup.v0_iterations;
    report.out_dir = cfg.out_dir;

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream cfg_out(fs::path(cfg.out_dir) / "config.txt");
        cfg_out << format_config(cfg);
    }

    // One Galerkin system serves every source and noise level of the run.
    std::unique_ptr<FredholmSystem> fredholm;
    if (cfg.method == InversionMethod::fredholm) {
        BasisSet basis(cfg.recon_grid(), cfg.fredholm_polynomials, cfg.fredholm_pyramids);
        fredholm = std::make_unique<FredholmSystem>(setup.medium_recon, setup.v0_recon, basis,
                                                    cfg.solver, cfg.cache_dir);
    }

    std::vector<std::string> labels;
    for (size_t si = 0; si < cfg.sources.size(); ++si) {
        std::string label = cfg.sources[si].label();
        int duplicate = 0;
        for (const std::string& l : labels)
            if (l.rfind(label, 0) == 0) ++duplicate;
        if (duplicate) label += "_" + std::to_string(duplicate + 1);
        labels.push_back(label);
    }

    for (size_t si = 0; si < cfg.sources.size(); ++si) {
        const PhantomSpec& spec = cfg.sources[si];
        SourceRun run;
        run.label = labels[si];
        const fs::path src_dir = fs::path(cfg.out_dir) / run.label;
        fs::create_directories(src_dir);

        SynthesisResult synth = synthesize_for_source(setup, spec, cfg);
        run.forward_iterations = synth.forward_iterations;
        run.truth_csv = (src_dir / "truth.csv").string();
        write_scalar_csv(synth.truth, run.truth_csv);
        if (cfg.write_pgm) write_pgm(synth.truth, (src_dir / "truth.pgm").string());

        for (size_t li = 0; li < cfg.noise_levels.size(); ++li) {
            NoiseRunEntry entry;
            entry.level = cfg.noise_levels[li];
            entry.stream_seed = derive_seed(cfg.seed, si * 1000 + li);
            const fs::path level_dir = src_dir / detail::noise_dir_name(entry.level);
            fs::create_directories(level_dir);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                InternalFunctional noisy = add_noise(synth.h, entry.level, entry.stream_seed);
                const std::string h_csv = (level_dir / "h.csv").string();
                write_scalar_csv(noisy.h, h_csv);
                entry.files.push_back(h_csv);

                ReconstructionResult rec =
                    cfg.method == InversionMethod::neumann
                        ? neumann_invert(noisy, setup.v0_recon, setup.medium_recon, cfg.neumann,
                                         cfg.solver)
                        : fredholm->solve(noisy, cfg.fredholm_svd_threshold);
                if (cfg.method == InversionMethod::neumann) {
                    if (!rec.converged)
                        throw divergence_error("neumann_invert: not converged within " +
                                                   std::to_string(cfg.neumann.max_iterations) +
                                                   " iterations",
                                               cfg.neumann.max_iterations,
                                               rec.residual_history.back());
                    ScalarField fp = forward_map_T(rec.source, setup.v0_recon, setup.medium_recon,
                                                   cfg.solver);
                    ScalarField mh = op_M(noisy.h, setup.v0_recon);
                    fp -= mh;
                    entry.certificate = l2_norm(fp) / l2_norm(mh);
                } else {
                    entry.certificate = rec.gram_residual;
                    entry.effective_rank = rec.effective_rank;
                }
                entry.iterations_or_rank = rec.iterations_or_rank;
                entry.residual_history = rec.residual_history;

                const std::string recon_csv = (level_dir / "recon.csv").string();
                write_scalar_csv(rec.source, recon_csv);
                entry.files.push_back(recon_csv);
                ScalarField diff = rec.source;
                diff -= synth.truth;
                const std::string diff_csv = (level_dir / "diff.csv").string();
                write_scalar_csv(diff, diff_csv);
                entry.files.push_back(diff_csv);
                if (cfg.write_pgm) {
                    write_pgm(rec.source, (level_dir / "recon.pgm").string());
                    write_pgm(diff, (level_dir / "diff.pgm").string());
                }

                // The error of record is recomputed from the files written.
                entry.rel_l2_error =
                    relative_l2_error(read_scalar_csv(recon_csv), read_scalar_csv(run.truth_csv));
                entry.ok = true;
            } catch (const std::exception& e) {
                entry.ok = false;
                entry.error = e.what();
            }
            entry.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            run.entries.push_back(std::move(entry));
        }
        report.sources.push_back(std::move(run));
    }

    report.report_path = (fs::path(cfg.out_dir) / "report.txt").string();
    std::ofstream rep(report.report_path);
    detail::write_report_text(report, cfg, rep);
    return report;
}

} // namespace umblt
