#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "refactor/association.hpp"
#include "refactor/matrix.hpp"
#include "refactor/parallel.hpp"
#include "refactor/tetrachoric.hpp"

namespace refactor {

enum class Axis { rows, columns };

inline const char* to_string(Axis a) { return a == Axis::rows ? "rows" : "columns"; }

/// Evaluate one pairwise association on a 2x2 table. nullopt marks a
/// degenerate or undefined pair.
inline std::optional<double> pair_association(AssociationKind kind, const ContingencyTable& t,
                                              double tetra_tol = 1e-7) {
    switch (kind) {
        case AssociationKind::phi: return phi(t);
        case AssociationKind::tetrachoric: return tetrachoric(t, tetra_tol);
        case AssociationKind::quadrant: return quadrant_q(t);
        case AssociationKind::yule_q: return yule_q(t);
        case AssociationKind::loevinger_h: return loevinger_h(t);
        case AssociationKind::agreement: return agreement(t);
    }
    return std::nullopt;
}

/// Symmetric association image of a response matrix on one axis.
/// Degenerate variables are flagged and their off-diagonal entries set
/// to zero so the image stays usable by eigendecomposition; the diagonal
/// is 1 by convention for every kind.
struct AssociationImage {
    AssociationKind kind;
    Axis axis;
    RealMatrix values;
    std::vector<bool> degenerate_flags;
    double degenerate_pair_fraction = 0.0;
    bool warning = false;  // more than half of all pairs degenerate

    Eigen::Index size() const { return values.rows(); }
};

/// Build the association image over rows or columns with
/// pairwise-complete data. A pair is degenerate when either variable has
/// zero variance on the overlap or the operator's denominator vanishes;
/// such entries are set to 0. Pair computations are independent, so they
/// shard across threads without affecting the result.
inline AssociationImage image(const ResponseMatrix& x, AssociationKind kind,
                              Axis axis = Axis::columns, int threads = 1,
                              double tetra_tol = 1e-7) {
    const ResponseMatrix mat = (axis == Axis::rows) ? x.transposed() : x;
    const Eigen::Index p = mat.cols();
    const Eigen::Index n = mat.rows();

    AssociationImage img;
    img.kind = kind;
    img.axis = axis;
    img.values = RealMatrix::Identity(p, p);
    img.degenerate_flags.assign(static_cast<std::size_t>(p), false);

    // per-variable flag: zero variance among its own observed entries
    for (Eigen::Index j = 0; j < p; ++j) {
        bool saw0 = false, saw1 = false;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mat.observed(i, j)) (mat.value(i, j) != 0.0 ? saw1 : saw0) = true;
        img.degenerate_flags[static_cast<std::size_t>(j)] = !(saw0 && saw1);
    }

    const Eigen::Index n_pairs = p * (p - 1) / 2;
    std::vector<double> vals(static_cast<std::size_t>(n_pairs), 0.0);
    std::vector<char> degenerate(static_cast<std::size_t>(n_pairs), 0);

    const auto pair_of = [p](Eigen::Index idx) {
        // row-major upper-triangle enumeration
        Eigen::Index j = 0;
        Eigen::Index row_len = p - 1;
        while (idx >= row_len) {
            idx -= row_len;
            ++j;
            --row_len;
        }
        return std::pair<Eigen::Index, Eigen::Index>(j, j + 1 + idx);
    };

    parallel_for(static_cast<int>(n_pairs), threads, [&](int k) {
        const auto [a, b] = pair_of(k);
        ContingencyTable t;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!mat.observed(i, a) || !mat.observed(i, b)) continue;
            const bool va = mat.value(i, a) != 0.0;
            const bool vb = mat.value(i, b) != 0.0;
            if (va && vb)
                ++t.n11;
            else if (va)
                ++t.n10;
            else if (vb)
                ++t.n01;
            else
                ++t.n00;
        }
        std::optional<double> v;
        if (t.total() > 0 && !t.x_degenerate() && !t.y_degenerate())
            v = pair_association(kind, t, tetra_tol);
        if (v.has_value())
            vals[static_cast<std::size_t>(k)] = *v;
        else
            degenerate[static_cast<std::size_t>(k)] = 1;
    });

    Eigen::Index n_degenerate = 0;
    for (Eigen::Index k = 0; k < n_pairs; ++k) {
        const auto [a, b] = pair_of(k);
        const double v =
            degenerate[static_cast<std::size_t>(k)] ? 0.0 : vals[static_cast<std::size_t>(k)];
        img.values(a, b) = v;
        img.values(b, a) = v;
        if (degenerate[static_cast<std::size_t>(k)]) ++n_degenerate;
    }
    img.degenerate_pair_fraction =
        n_pairs > 0 ? static_cast<double>(n_degenerate) / static_cast<double>(n_pairs) : 0.0;
    img.warning = img.degenerate_pair_fraction > 0.5;
    return img;
}

}  // namespace refactor
