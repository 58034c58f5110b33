#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "refactor/matrix.hpp"
#include "refactor/metrics.hpp"

namespace refactor {

/// Rank-1 baseline E_ij = pi_r,i * pi_c,j built from the row and column
/// marginal means; the reconstruction a marginals-only predictor would
/// produce.
struct IndependenceBaseline {
    RealMatrix values;

    static IndependenceBaseline from(const ResponseMatrix& x) {
        const RealVector r = x.row_means();
        const RealVector c = x.col_means();
        return IndependenceBaseline{r * c.transpose()};
    }
};

namespace detail {

/// Euclidean distances between rows. With a mask, each pair uses its
/// jointly observed coordinates scaled up by p / |overlap| so distances
/// stay comparable across pairs with different coverage. nullopt when
/// some row pair has no overlap at all.
inline std::optional<RealMatrix> pairwise_row_distances(const RealMatrix& v,
                                                        const BoolMask* mask) {
    const Eigen::Index n = v.rows();
    const Eigen::Index p = v.cols();
    RealMatrix d = RealMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = i + 1; k < n; ++k) {
            double s = 0.0;
            Eigen::Index m = 0;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (mask && !((*mask)(i, j) && (*mask)(k, j))) continue;
                const double diff = v(i, j) - v(k, j);
                s += diff * diff;
                ++m;
            }
            if (m == 0) return std::nullopt;
            const double scale = static_cast<double>(p) / static_cast<double>(m);
            const double dist = std::sqrt(s * scale);
            d(i, k) = dist;
            d(k, i) = dist;
        }
    return d;
}

/// U-centering of a distance matrix (zero diagonal by definition).
inline RealMatrix ucenter(const RealMatrix& d) {
    const Eigen::Index n = d.rows();
    const RealVector row = d.rowwise().sum();
    const double total = d.sum();
    RealMatrix u = RealMatrix::Zero(n, n);
    const double nm2 = static_cast<double>(n - 2);
    const double denom = static_cast<double>(n - 1) * nm2;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            u(i, j) = d(i, j) - row(i) / nm2 - row(j) / nm2 + total / denom;
        }
    return u;
}

/// Unbiased inner product of two U-centered matrices.
inline double uinner(const RealMatrix& a, const RealMatrix& b) {
    const Eigen::Index n = a.rows();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) s += a(i, j) * b(i, j);
    return s / (static_cast<double>(n) * static_cast<double>(n - 3));
}

/// Bias-corrected squared distance correlation from distance matrices
/// (the cosine of the U-centered matrices; may be negative).
inline std::optional<double> bcdcor_from_dist(const RealMatrix& dx, const RealMatrix& dy) {
    const RealMatrix ux = ucenter(dx);
    const RealMatrix uy = ucenter(dy);
    const double vxx = uinner(ux, ux);
    const double vyy = uinner(uy, uy);
    if (vxx <= 0.0 || vyy <= 0.0) return std::nullopt;  // constant input
    return uinner(ux, uy) / std::sqrt(vxx * vyy);
}

struct Orientation {
    RealMatrix dx, dy, dz;
};

inline std::optional<Orientation> make_orientation(const RealMatrix& x, const RealMatrix& y,
                                                   const RealMatrix* z, const BoolMask* mask,
                                                   bool transpose, std::string* why) {
    Orientation o;
    std::optional<RealMatrix> dx, dy, dz;
    if (transpose) {
        if (x.cols() < 4) {
            if (why) *why = "fewer than 4 columns";
            return std::nullopt;
        }
        BoolMask mt;
        const BoolMask* mp = nullptr;
        if (mask) {
            mt = mask->transpose();
            mp = &mt;
        }
        dx = pairwise_row_distances(x.transpose(), mp);
        dy = pairwise_row_distances(y.transpose(), mp);
        if (z) dz = pairwise_row_distances(z->transpose(), nullptr);
    } else {
        if (x.rows() < 4) {
            if (why) *why = "fewer than 4 rows";
            return std::nullopt;
        }
        dx = pairwise_row_distances(x, mask);
        dy = pairwise_row_distances(y, mask);
        if (z) dz = pairwise_row_distances(*z, nullptr);
    }
    if (!dx || !dy || (z && !dz)) {
        if (why) *why = "observation pair with no overlap";
        return std::nullopt;
    }
    o.dx = std::move(*dx);
    o.dy = std::move(*dy);
    if (z) o.dz = std::move(*dz);
    return o;
}

}  // namespace detail

/// Mean bias-corrected squared distance correlation of two equal-shape
/// matrices, rows treated as observations and columns as coordinates,
/// averaged over the two orientations (X, Y) and (X^T, Y^T). An
/// orientation with fewer than 4 observations is omitted and noted in
/// `flag`; if both are infeasible the result is missing. A mask (from
/// the response matrix) restricts distances to observed cells.
inline std::optional<double> dcor2_bias_corrected(const RealMatrix& x, const RealMatrix& y,
                                                  const BoolMask* mask = nullptr,
                                                  std::string* flag = nullptr) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw std::invalid_argument("dcor2_bias_corrected: shape mismatch");
    double sum = 0.0;
    int used = 0;
    for (const bool transpose : {false, true}) {
        std::string why;
        const auto orient = detail::make_orientation(x, y, nullptr, mask, transpose, &why);
        if (!orient) {
            if (flag)
                *flag += std::string(transpose ? "transposed orientation omitted ("
                                               : "orientation omitted (") +
                         why + ");";
            continue;
        }
        const auto v = detail::bcdcor_from_dist(orient->dx, orient->dy);
        if (!v) {
            if (flag) *flag += "constant distances in one orientation;";
            continue;
        }
        sum += *v;
        ++used;
    }
    if (used == 0) return std::nullopt;
    return sum / static_cast<double>(used);
}

inline std::optional<double> dcor2_bias_corrected(const ResponseMatrix& x, const RealMatrix& y,
                                                  std::string* flag = nullptr) {
    const BoolMask* mask = x.complete() ? nullptr : &x.mask();
    return dcor2_bias_corrected(x.values(), y, mask, flag);
}

/// Bias-corrected partial distance correlation of x and y given z,
/// via the cosines of the U-centered distance matrices, averaged over
/// orientations like dcor2_bias_corrected.
inline std::optional<double> partial_dcor(const RealMatrix& x, const RealMatrix& y,
                                          const RealMatrix& z, const BoolMask* mask = nullptr,
                                          std::string* flag = nullptr) {
    if (x.rows() != y.rows() || x.cols() != y.cols() || x.rows() != z.rows() ||
        x.cols() != z.cols())
        throw std::invalid_argument("partial_dcor: shape mismatch");
    double sum = 0.0;
    int used = 0;
    for (const bool transpose : {false, true}) {
        std::string why;
        const auto orient = detail::make_orientation(x, y, &z, mask, transpose, &why);
        if (!orient) {
            if (flag)
                *flag += std::string(transpose ? "transposed orientation omitted ("
                                               : "orientation omitted (") +
                         why + ");";
            continue;
        }
        const RealMatrix ux = detail::ucenter(orient->dx);
        const RealMatrix uy = detail::ucenter(orient->dy);
        const RealMatrix uz = detail::ucenter(orient->dz);
        const double vxx = detail::uinner(ux, ux);
        const double vyy = detail::uinner(uy, uy);
        const double vzz = detail::uinner(uz, uz);
        if (vxx <= 0.0 || vyy <= 0.0) {
            if (flag) *flag += "constant distances in one orientation;";
            continue;
        }
        const double rxy = detail::uinner(ux, uy) / std::sqrt(vxx * vyy);
        double value;
        if (vzz <= 0.0) {
            // conditioning on a constant changes nothing
            value = rxy;
        } else {
            const double rxz = detail::uinner(ux, uz) / std::sqrt(vxx * vzz);
            const double ryz = detail::uinner(uy, uz) / std::sqrt(vyy * vzz);
            const double den = std::sqrt((1.0 - rxz * rxz) * (1.0 - ryz * ryz));
            value = den > 0.0 ? (rxy - rxz * ryz) / den : 0.0;
        }
        sum += value;
        ++used;
    }
    if (used == 0) return std::nullopt;
    return sum / static_cast<double>(used);
}

inline std::optional<double> partial_dcor(const ResponseMatrix& x, const RealMatrix& y,
                                          const IndependenceBaseline& e,
                                          std::string* flag = nullptr) {
    const BoolMask* mask = x.complete() ? nullptr : &x.mask();
    return partial_dcor(x.values(), y, e.values, mask, flag);
}

}  // namespace refactor
