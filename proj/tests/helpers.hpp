#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shiftrec/rng.hpp"
#include "shiftrec/tensor.hpp"

namespace testutil {

using shiftrec::Coord;
using shiftrec::Index;
using shiftrec::Shape;
using shiftrec::SparseTensor;

inline SparseTensor dense_matrix(const std::vector<std::vector<double>>& rows) {
    std::vector<std::pair<Coord, double>> entries;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            entries.push_back({{static_cast<Index>(i) + 1, static_cast<Index>(j) + 1}, rows[i][j]});
        }
    }
    return SparseTensor(Shape({static_cast<Index>(rows.size()),
                               static_cast<Index>(rows.front().size())}),
                        entries);
}

struct Cell {
    Index i, j;
    double v;
};

inline SparseTensor sparse_matrix(Index rows, Index cols, const std::vector<Cell>& cells) {
    std::vector<std::pair<Coord, double>> entries;
    for (const Cell& c : cells) entries.push_back({{c.i, c.j}, c.v});
    return SparseTensor(Shape({rows, cols}), entries);
}

// Random mask keeping the far shell known (guarantees full support) plus a
// uniform fraction of the interior.
inline SparseTensor random_masked(const SparseTensor& full, double known_fraction,
                                  std::uint64_t seed, bool keep_shell) {
    shiftrec::Rng rng(seed);
    std::vector<std::pair<Coord, double>> kept;
    for (Index e = 0; e < full.known_count(); ++e) {
        const auto c = full.coord(e);
        bool shell = false;
        for (Index j = 0; j < full.dim(); ++j) {
            if (c[static_cast<std::size_t>(j)] == full.shape().extent(j)) shell = true;
        }
        if ((keep_shell && shell) || rng.uniform01() < known_fraction) {
            kept.push_back({Coord(c.begin(), c.end()), full.value(e)});
        }
    }
    return SparseTensor(full.shape(), kept);
}

// Dense least squares via normal equations with partial-pivot elimination;
// test-only oracle, independent of the sweep-based implementation.
inline std::vector<double> solve_least_squares(const std::vector<std::vector<double>>& a,
                                               const std::vector<double>& b) {
    const std::size_t n = a.front().size();
    std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
    std::vector<double> atb(n, 0.0);
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            atb[i] += a[r][i] * b[r];
            for (std::size_t j = 0; j < n; ++j) ata[i][j] += a[r][i] * a[r][j];
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
        }
        std::swap(ata[col], ata[piv]);
        std::swap(atb[col], atb[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || ata[col][col] == 0.0) continue;
            const double f = ata[r][col] / ata[col][col];
            for (std::size_t j = col; j < n; ++j) ata[r][j] -= f * ata[col][j];
            atb[r] -= f * atb[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (ata[i][i] != 0.0) x[i] = atb[i] / ata[i][i];
    }
    return x;
}

// Fits A(i,j) = r_i + c_j to the known entries of a matrix (gauge fixed by
// r_1 = 0) and predicts any cell. Valid when the known bipartite graph is
// connected.
struct AdditiveFitOracle {
    std::vector<double> r, c;

    explicit AdditiveFitOracle(const SparseTensor& t) {
        const auto m = static_cast<std::size_t>(t.shape().extent(0));
        const auto n = static_cast<std::size_t>(t.shape().extent(1));
        // unknowns: r_2..r_m, c_1..c_n
        const std::size_t vars = m - 1 + n;
        std::vector<std::vector<double>> a;
        std::vector<double> b;
        for (Index e = 0; e < t.known_count(); ++e) {
            std::vector<double> row(vars, 0.0);
            const auto i = static_cast<std::size_t>(t.coord(e)[0]);
            const auto j = static_cast<std::size_t>(t.coord(e)[1]);
            if (i >= 2) row[i - 2] = 1.0;
            row[m - 1 + j - 1] = 1.0;
            a.push_back(std::move(row));
            b.push_back(t.value(e));
        }
        const std::vector<double> x = solve_least_squares(a, b);
        r.assign(m, 0.0);
        c.assign(n, 0.0);
        for (std::size_t i = 2; i <= m; ++i) r[i - 1] = x[i - 2];
        for (std::size_t j = 1; j <= n; ++j) c[j - 1] = x[m - 1 + j - 1];
    }

    double predict(Index i, Index j) const {
        return r[static_cast<std::size_t>(i - 1)] + c[static_cast<std::size_t>(j - 1)];
    }
};

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("shiftrec_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
}

}  // namespace testutil
