#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

#include "refactor/matrix.hpp"
#include "refactor/rng.hpp"

namespace refactor {

/// Disjoint, exhaustive folds over the row and column index sets of a
/// matrix. Fold f holds the shuffled indices assigned to it; the seed
/// that produced the shuffle is kept for provenance.
struct BlockPartition {
    std::vector<std::vector<int>> row_folds;
    std::vector<std::vector<int>> col_folds;
    RngSpec seed;

    int n_rows() const {
        int n = 0;
        for (const auto& f : row_folds) n += static_cast<int>(f.size());
        return n;
    }
    int n_cols() const {
        int n = 0;
        for (const auto& f : col_folds) n += static_cast<int>(f.size());
        return n;
    }
};

namespace detail {

inline std::vector<std::vector<int>> split_shuffled(int n, int folds, Pcg32& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    // near-equal sizes: the first (n mod folds) folds get one extra
    std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
    const int base = n / folds;
    const int extra = n % folds;
    std::size_t pos = 0;
    for (int f = 0; f < folds; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        out[static_cast<std::size_t>(f)].assign(idx.begin() + static_cast<long>(pos),
                                                idx.begin() + static_cast<long>(pos) + size);
        pos += static_cast<std::size_t>(size);
    }
    return out;
}

}  // namespace detail

/// Random partition of an n x p index grid into f_rows x f_cols folds of
/// near-equal size (sizes differ by at most one). Deterministic given rng.
inline BlockPartition random_partition(int n, int p, int f_rows, int f_cols, RngSpec rng) {
    if (f_rows < 2 || f_cols < 2)
        throw std::invalid_argument("random_partition: need at least 2 folds per axis");
    if (n < 2 * f_rows || p < 2 * f_cols)
        throw std::invalid_argument("random_partition: folds would have fewer than 2 indices");
    Pcg32 gen(rng);
    BlockPartition part;
    part.row_folds = detail::split_shuffled(n, f_rows, gen);
    part.col_folds = detail::split_shuffled(p, f_cols, gen);
    part.seed = rng;
    return part;
}

/// The four submatrices induced by holding out row fold i and column
/// fold j. A is the held-out block; B shares its rows, C its columns,
/// and D is fully held in. Each block records the source indices it was
/// cut from.
struct BlockViews {
    ResponseMatrix a, b, c, d;
    std::vector<int> rows_held_out, rows_held_in;
    std::vector<int> cols_held_out, cols_held_in;
};

inline BlockViews block_views(const ResponseMatrix& x, const BlockPartition& part, int i, int j) {
    if (i < 0 || i >= static_cast<int>(part.row_folds.size()) || j < 0 ||
        j >= static_cast<int>(part.col_folds.size()))
        throw std::out_of_range("block_views: fold index out of range");
    if (part.n_rows() != x.rows() || part.n_cols() != x.cols())
        throw std::invalid_argument("block_views: partition does not match matrix shape");

    const std::vector<int>& rows_out = part.row_folds[static_cast<std::size_t>(i)];
    const std::vector<int>& cols_out = part.col_folds[static_cast<std::size_t>(j)];
    std::vector<int> rows_in, cols_in;
    for (std::size_t f = 0; f < part.row_folds.size(); ++f)
        if (static_cast<int>(f) != i)
            rows_in.insert(rows_in.end(), part.row_folds[f].begin(), part.row_folds[f].end());
    for (std::size_t f = 0; f < part.col_folds.size(); ++f)
        if (static_cast<int>(f) != j)
            cols_in.insert(cols_in.end(), part.col_folds[f].begin(), part.col_folds[f].end());
    if (rows_in.empty() || cols_in.empty())
        throw std::invalid_argument("block_views: fold complement is empty");

    return BlockViews{x.submatrix(rows_out, cols_out), x.submatrix(rows_out, cols_in),
                      x.submatrix(rows_in, cols_out), x.submatrix(rows_in, cols_in),
                      rows_out, rows_in, cols_out, cols_in};
}

}  // namespace refactor
