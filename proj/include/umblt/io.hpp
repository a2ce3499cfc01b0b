#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grid.hpp"

namespace umblt {

/**
 * Writes a scalar field as CSV: a header line
 *   # nx ny x1_min x1_max x2_min x2_max
 * followed by one grid row (fixed x2, x1 increasing) per line, values
 * comma-separated in %.12e format.
 */
inline void write_scalar_csv(const ScalarField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_scalar_csv: cannot open " + path);
    const Grid2D& g = f.grid();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "# %d %d %.17g %.17g %.17g %.17g\n", g.nx(), g.ny(),
                  g.x1_min(), g.x1_max(), g.x2_min(), g.x2_max());
    out << buf;
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12e", f(i, j));
            out << buf;
            if (i + 1 < g.nx()) out << ',';
        }
        out << '\n';
    }
    if (!out) throw Error("write_scalar_csv: write failed for " + path);
}

inline ScalarField read_scalar_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("read_scalar_csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header) || header.empty() || header[0] != '#')
        throw Error("read_scalar_csv: missing header line in " + path);
    int nx = 0, ny = 0;
    double a = 0, b = 0, c = 0, d = 0;
    if (std::sscanf(header.c_str(), "# %d %d %lg %lg %lg %lg", &nx, &ny, &a, &b, &c, &d) != 6)
        throw Error("read_scalar_csv: malformed header in " + path);
    Grid2D grid(nx, ny, a, b, c, d);
    ScalarField f(grid);
    std::string line;
    for (int j = 0; j < ny; ++j) {
        if (!std::getline(in, line)) throw Error("read_scalar_csv: truncated file " + path);
        std::istringstream row(line);
        std::string cell;
        for (int i = 0; i < nx; ++i) {
            if (!std::getline(row, cell, ','))
                throw Error("read_scalar_csv: short row in " + path);
            f(i, j) = std::strtod(cell.c_str(), nullptr);
        }
    }
    return f;
}

/// One CSV per direction, named <prefix>_d<k>.csv.
inline std::vector<std::string> write_angular_csvs(const AngularField& f,
                                                   const std::string& prefix) {
    std::vector<std::string> paths;
    const int m = f.directions().size();
    for (int d = 0; d < m; ++d) {
        ScalarField slice(f.grid());
        for (int n = 0; n < f.grid().num_nodes(); ++n) slice[n] = f.node_values(n)[d];
        std::string path = prefix + "_d" + std::to_string(d) + ".csv";
        write_scalar_csv(slice, path);
        paths.push_back(path);
    }
    return paths;
}

inline AngularField read_angular_csvs(const std::string& prefix, int m) {
    std::vector<ScalarField> slices;
    for (int d = 0; d < m; ++d)
        slices.push_back(read_scalar_csv(prefix + "_d" + std::to_string(d) + ".csv"));
    AngularField f(slices.front().grid(), DirectionSet(m));
    for (int d = 0; d < m; ++d) {
        if (slices[d].grid() != f.grid())
            throw domain_mismatch_error("read_angular_csvs: direction slices on different grids");
        for (int n = 0; n < f.grid().num_nodes(); ++n) f.node_values(n)[d] = slices[d][n];
    }
    return f;
}

/// 8-bit grayscale PGM with values scaled linearly from [min, max] to [0, 255].
inline void write_pgm(const ScalarField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_pgm: cannot open " + path);
    const Grid2D& g = f.grid();
    const double lo = min_value(f), hi = max_value(f);
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    out << "P5\n" << g.nx() << " " << g.ny() << "\n255\n";
    std::vector<unsigned char> row(g.nx());
    for (int j = g.ny() - 1; j >= 0; --j) { // top row = largest x2
        for (int i = 0; i < g.nx(); ++i)
            row[i] = static_cast<unsigned char>(std::lround((f(i, j) - lo) * scale));
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

} // namespace umblt
