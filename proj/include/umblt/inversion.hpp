#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "functional.hpp"

namespace umblt {

/**
 * The expansion family used by the Galerkin (Fredholm) reconstruction:
 * polynomials x1^i x2^j with i + j <= 10 (66 functions, graded
 * lexicographic order) followed by pyramid functions
 *
 *   f_pq = max(1 - max(20 |x1 - p/20|, 20 |x2 - q/20|), 0),  p, q in 0..20
 *
 * (441 functions, row-major order), both defined on coordinates normalized
 * to the unit square and mapped affinely onto the reconstruction domain.
 * Either part can be switched off.
 */
struct BasisSet {
    double x1_min = 0.0, x1_max = 1.0, x2_min = 0.0, x2_max = 1.0;
    bool use_polynomials = true;
    bool use_pyramids = true;
    int max_degree = 10;
    int pyramid_divisions = 20;

    BasisSet() = default;
    explicit BasisSet(const Grid2D& domain, bool polynomials = true, bool pyramids = true)
        : x1_min(domain.x1_min()), x1_max(domain.x1_max()), x2_min(domain.x2_min()),
          x2_max(domain.x2_max()), use_polynomials(polynomials), use_pyramids(pyramids) {}

    int polynomial_count() const {
        return use_polynomials ? (max_degree + 1) * (max_degree + 2) / 2 : 0;
    }
    int pyramid_count() const {
        return use_pyramids ? (pyramid_divisions + 1) * (pyramid_divisions + 1) : 0;
    }
    int size() const { return polynomial_count() + pyramid_count(); }
};

/// Samples every basis function on the grid, polynomials first.
/// The grid must lie inside the basis domain.
inline std::vector<ScalarField> evaluate_basis(const BasisSet& basis, const Grid2D& grid) {
    const double sx = 1e-12 * (basis.x1_max - basis.x1_min);
    const double sy = 1e-12 * (basis.x2_max - basis.x2_min);
    if (grid.x1_min() < basis.x1_min - sx || grid.x1_max() > basis.x1_max + sx ||
        grid.x2_min() < basis.x2_min - sy || grid.x2_max() > basis.x2_max + sy)
        throw domain_mismatch_error("evaluate_basis: grid extends outside the basis domain");

    std::vector<ScalarField> fields;
    fields.reserve(basis.size());
    auto xhat1 = [&](double x) { return (x - basis.x1_min) / (basis.x1_max - basis.x1_min); };
    auto xhat2 = [&](double x) { return (x - basis.x2_min) / (basis.x2_max - basis.x2_min); };

    if (basis.use_polynomials)
        for (int deg = 0; deg <= basis.max_degree; ++deg)
            for (int i = 0; i <= deg; ++i) {
                const int jj = deg - i;
                fields.push_back(ScalarField::from_function(grid, [&](double x1, double x2) {
                    return std::pow(xhat1(x1), i) * std::pow(xhat2(x2), jj);
                }));
            }

    if (basis.use_pyramids) {
        const double nd = basis.pyramid_divisions;
        for (int p = 0; p <= basis.pyramid_divisions; ++p)
            for (int q = 0; q <= basis.pyramid_divisions; ++q)
                fields.push_back(ScalarField::from_function(grid, [&](double x1, double x2) {
                    const double d1 = nd * std::abs(xhat1(x1) - p / nd);
                    const double d2 = nd * std::abs(xhat2(x2) - q / nd);
                    return std::max(1.0 - std::max(d1, d2), 0.0);
                }));
    }
    return fields;
}

struct ReconstructionResult {
    enum class Method { neumann, fredholm };

    ScalarField source;
    Method method = Method::neumann;
    int iterations_or_rank = 0;
    std::vector<double> residual_history; // per-iteration ||dS||_L2 for neumann
    bool converged = false;

    // Fredholm diagnostics
    double gram_residual = 0.0;
    int effective_rank = 0;
    std::vector<double> coefficients;
};

struct NeumannOptions {
    double tolerance = 1e-6; // L2 norm of the remaining correction
    int max_iterations = 200;
    double divergence_factor = 1e3; // abort when ||dS|| exceeds this times ||M[H]||
    // The series alternates sign: dS_{j+1} = -M K S [dS_j]. Setting this to
    // false drops the minus (the update then iterates +M K S), kept only to
    // compare against a plain unsigned iteration.
    bool alternating_sign = true;
};

/**
 * Neumann-series reconstruction of the source from the internal functional:
 *
 *   S = sum_j (-M K S)^j ( M[H] ),
 *
 * computed incrementally: S <- 0, dS <- M[H], then repeatedly
 * S <- S + dS, dS <- -M[K[S[dS]]] until ||dS||_L2 <= tolerance.
 * Converges whenever M K S is a contraction (see contraction_audit).
 */
inline ReconstructionResult neumann_invert(const InternalFunctional& h, const AngularField& v0,
                                           const OpticalMedium& medium,
                                           const NeumannOptions& options = {},
                                           const SolverSettings& solver = {}) {
    if (h.h.grid() != medium.grid())
        throw domain_mismatch_error("neumann_invert: functional not on the medium grid");
    if (min_value(v0) <= 0.0)
        throw positivity_error("neumann_invert: v0 must be strictly positive");

    ReconstructionResult result{ScalarField(h.h.grid()), ReconstructionResult::Method::neumann};
    ScalarField delta = op_M(h.h, v0);
    const double scale = l2_norm(delta);
    const double sign = options.alternating_sign ? -1.0 : 1.0;

    double norm = scale;
    result.residual_history.push_back(norm);
    int iter = 0;
    while (norm > options.tolerance) {
        if (iter >= options.max_iterations) {
            result.converged = false;
            return result;
        }
        result.source += delta;
        ++iter;
        delta = op_M(op_K(op_S(delta, medium, solver), v0, medium), v0);
        delta *= sign;
        norm = l2_norm(delta);
        result.residual_history.push_back(norm);
        if (norm > options.divergence_factor * scale)
            throw divergence_error("neumann_invert: series is not contracting (||dS|| = " +
                                       std::to_string(norm) + ")",
                                   iter, norm);
    }
    result.iterations_or_rank = iter;
    result.converged = true;
    return result;
}

namespace detail {

inline uint64_t fnv1a(const void* data, size_t bytes, uint64_t h = 1469598103934665603ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a(const std::vector<double>& v, uint64_t h) {
    return fnv1a(v.data(), v.size() * sizeof(double), h);
}

} // namespace detail

/**
 * Galerkin discretization of (Id + M K S)[S] = M[H] over a BasisSet.
 *
 * Building the system computes t_i = T[b_i] for every basis function (one
 * forward transport solve each) and the Gram matrix G_ij = <t_i, t_j> in the
 * cell-weighted L2 inner product. Because the columns depend only on the
 * medium, the grid and v0, they are cached on disk and reused across noise
 * levels and runs.
 *
 * solve() projects M[H] onto the columns and solves G c = r by truncated
 * eigendecomposition (G is symmetric positive semi-definite): eigenvalues
 * below threshold_rel * lambda_max are discarded and the minimum-norm
 * solution on the retained subspace is returned.
 */
class FredholmSystem {
  public:
    FredholmSystem(const OpticalMedium& medium, const AngularField& v0, const BasisSet& basis,
                   const SolverSettings& solver = {}, const std::string& cache_dir = "")
        : medium_(medium), v0_(v0), basis_fields_(evaluate_basis(basis, medium.grid())) {
        const int n_basis = static_cast<int>(basis_fields_.size());
        const int n_nodes = medium.grid().num_nodes();

        columns_.resize(n_nodes, n_basis);
        if (!load_cache(cache_dir, solver)) {
            SolverSettings quiet = solver;
            for (int b = 0; b < n_basis; ++b) {
                ScalarField t = forward_map_T(basis_fields_[b], v0_, medium_, quiet);
                for (int n = 0; n < n_nodes; ++n) columns_(n, b) = t[n];
                quiet.warn_wellposedness = false; // one warning is enough for 507 solves
            }
            store_cache(cache_dir, solver);
        }

        // weighted Gram matrix and eigendecomposition
        const Grid2D& grid = medium.grid();
        weights_.resize(n_nodes);
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) weights_[grid.node(i, j)] = grid.cell_weight(i, j);
        Eigen::MatrixXd wc = weights_.asDiagonal() * columns_;
        gram_ = columns_.transpose() * wc;
        eigen_.compute(gram_);
        if (eigen_.info() != Eigen::Success)
            throw Error("FredholmSystem: eigendecomposition of the Gram matrix failed");
    }

    int basis_size() const { return static_cast<int>(basis_fields_.size()); }

    ReconstructionResult solve(const InternalFunctional& h, double threshold_rel = 1e-10) const {
        if (h.h.grid() != medium_.grid())
            throw domain_mismatch_error("FredholmSystem: functional not on the system grid");
        const int n_basis = basis_size();
        const int n_nodes = medium_.grid().num_nodes();

        ScalarField mh = op_M(h.h, v0_);
        Eigen::VectorXd b(n_nodes);
        for (int n = 0; n < n_nodes; ++n) b[n] = mh[n];
        Eigen::VectorXd r = columns_.transpose() * (weights_.asDiagonal() * b);

        const Eigen::VectorXd& lambda = eigen_.eigenvalues();
        const double cutoff = threshold_rel * lambda[n_basis - 1];
        Eigen::VectorXd proj = eigen_.eigenvectors().transpose() * r;
        int rank = 0;
        for (int k = 0; k < n_basis; ++k) {
            if (lambda[k] > cutoff) {
                proj[k] /= lambda[k];
                ++rank;
            } else {
                proj[k] = 0.0;
            }
        }
        Eigen::VectorXd coeff = eigen_.eigenvectors() * proj;

        ReconstructionResult result{ScalarField(medium_.grid()),
                                    ReconstructionResult::Method::fredholm};
        for (int k = 0; k < n_basis; ++k)
            if (coeff[k] != 0.0) {
                ScalarField scaled = basis_fields_[k];
                scaled *= coeff[k];
                result.source += scaled;
            }
        result.effective_rank = rank;
        result.iterations_or_rank = rank;
        result.gram_residual = (gram_ * coeff - r).norm();
        result.residual_history.push_back(result.gram_residual);
        result.converged = true;
        result.coefficients.assign(coeff.data(), coeff.data() + n_basis);
        return result;
    }

  private:
    uint64_t cache_key(const SolverSettings& solver) const {
        const Grid2D& g = medium_.grid();
        double meta[11] = {static_cast<double>(g.nx()),
                           static_cast<double>(g.ny()),
                           g.x1_min(),
                           g.x1_max(),
                           g.x2_min(),
                           g.x2_max(),
                           static_cast<double>(medium_.directions().size()),
                           solver.tolerance,
                           static_cast<double>(basis_fields_.size()),
                           static_cast<double>(g.num_nodes()),
                           solver.damping};
        uint64_t h = detail::fnv1a(meta, sizeof(meta));
        h = detail::fnv1a(medium_.sigma().values(), h);
        const int m = medium_.directions().size();
        h = detail::fnv1a(medium_.kernel().weighted_row(0), sizeof(double) * m * m, h);
        h = detail::fnv1a(v0_.values(), h);
        return h;
    }

    std::string cache_path(const std::string& dir, const SolverSettings& solver) const {
        char name[64];
        std::snprintf(name, sizeof(name), "fredholm_columns_%016llx.bin",
                      static_cast<unsigned long long>(cache_key(solver)));
        return (std::filesystem::path(dir) / name).string();
    }

    bool load_cache(const std::string& dir, const SolverSettings& solver) {
        if (dir.empty()) return false;
        std::ifstream in(cache_path(dir, solver), std::ios::binary);
        if (!in) return false;
        uint64_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
        in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
        if (!in || rows != static_cast<uint64_t>(columns_.rows()) ||
            cols != static_cast<uint64_t>(columns_.cols()))
            return false;
        in.read(reinterpret_cast<char*>(columns_.data()),
                static_cast<std::streamsize>(sizeof(double) * rows * cols));
        return static_cast<bool>(in);
    }

    void store_cache(const std::string& dir, const SolverSettings& solver) const {
        if (dir.empty()) return;
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        std::ofstream out(cache_path(dir, solver), std::ios::binary);
        if (!out) return; // cache is best-effort
        const uint64_t rows = columns_.rows(), cols = columns_.cols();
        out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        out.write(reinterpret_cast<const char*>(columns_.data()),
                  static_cast<std::streamsize>(sizeof(double) * rows * cols));
    }

    OpticalMedium medium_;
    AngularField v0_;
    std::vector<ScalarField> basis_fields_;
    Eigen::MatrixXd columns_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd gram_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_;
};

/// One-shot Galerkin reconstruction; prefer FredholmSystem when solving for
/// several noise realizations of the same medium.
inline ReconstructionResult fredholm_invert(const InternalFunctional& h, const AngularField& v0,
                                            const OpticalMedium& medium, const BasisSet& basis,
                                            double svd_threshold_rel = 1e-10,
                                            const SolverSettings& solver = {},
                                            const std::string& cache_dir = "") {
    FredholmSystem system(medium, v0, basis, solver, cache_dir);
    return system.solve(h, svd_threshold_rel);
}

} // namespace umblt
