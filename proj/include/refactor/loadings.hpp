#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "refactor/image.hpp"
#include "refactor/matrix.hpp"
#include "refactor/minres.hpp"

namespace refactor {

struct LeadingEigenpair {
    RealVector vector;  // unit norm
    double value;
};

/// Eigenvector of the algebraically largest eigenvalue of a symmetric
/// matrix, unit-normalized. Sign convention: the largest-magnitude entry
/// (lowest index on magnitude ties) is made positive, which pins the
/// vector before any dataset-level alignment.
inline LeadingEigenpair leading_loadings(const RealMatrix& a) {
    require_finite(a, "leading_loadings");
    if (a.rows() != a.cols()) throw std::invalid_argument("leading_loadings: matrix not square");
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("leading_loadings: eigendecomposition failed");
    const Eigen::Index last = a.rows() - 1;
    RealVector v = solver.eigenvectors().col(last);
    v.normalize();
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
    if (v(pivot) < 0.0) v = -v;
    return LeadingEigenpair{std::move(v), solver.eigenvalues()(last)};
}

enum class LoadingEstimator { leading_eigenvector, minres1 };

inline const char* to_string(LoadingEstimator e) {
    return e == LoadingEstimator::leading_eigenvector ? "leading_eigenvector" : "minres1";
}

inline LoadingEstimator loading_estimator_from_string(const std::string& s) {
    if (s == "leading_eigenvector" || s == "eigen") return LoadingEstimator::leading_eigenvector;
    if (s == "minres1" || s == "minres") return LoadingEstimator::minres1;
    throw std::invalid_argument("unknown loading estimator: " + s);
}

/// Rank-1 loadings of a response matrix: u_hat from the row image,
/// v_hat from the column image, both unit norm, sign-aligned so their
/// correlations with the marginal means of X are nonnegative (ties keep
/// the eigenvector's own sign convention).
struct RankOneModel {
    RealVector u_hat;
    RealVector v_hat;
    LoadingEstimator estimator = LoadingEstimator::leading_eigenvector;
    bool row_flipped = false;
    bool col_flipped = false;
    double row_eigenvalue = 0.0;
    double col_eigenvalue = 0.0;
    bool image_warning = false;  // propagated from either association image
};

namespace detail {

inline double plain_correlation(const RealVector& a, const RealVector& b) {
    const double ma = a.mean();
    const double mb = b.mean();
    const RealVector da = a.array() - ma;
    const RealVector db = b.array() - mb;
    const double den = da.norm() * db.norm();
    if (den == 0.0) return 0.0;
    return da.dot(db) / den;
}

inline RealVector unit_loadings_of_image(const AssociationImage& img, LoadingEstimator est,
                                         double* eigenvalue) {
    if (est == LoadingEstimator::leading_eigenvector) {
        LeadingEigenpair e = leading_loadings(img.values);
        if (eigenvalue) *eigenvalue = e.value;
        return e.vector;
    }
    FactorSolution sol = minres(img.values, 1);
    RealVector v = sol.loadings.col(0);
    const double norm = v.norm();
    if (norm == 0.0) {
        // no common variance: fall back to the eigenvector direction
        LeadingEigenpair e = leading_loadings(img.values);
        if (eigenvalue) *eigenvalue = e.value;
        return e.vector;
    }
    if (eigenvalue) *eigenvalue = norm * norm;
    v /= norm;
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
    if (v(pivot) < 0.0) v = -v;
    return v;
}

}  // namespace detail

inline RankOneModel fit_rank_one(const ResponseMatrix& x, AssociationKind kind,
                                 LoadingEstimator estimator = LoadingEstimator::leading_eigenvector,
                                 int threads = 1) {
    const AssociationImage a_r = image(x, kind, Axis::rows, threads);
    const AssociationImage a_c = image(x, kind, Axis::columns, threads);

    RankOneModel model;
    model.estimator = estimator;
    model.image_warning = a_r.warning || a_c.warning;
    model.u_hat = detail::unit_loadings_of_image(a_r, estimator, &model.row_eigenvalue);
    model.v_hat = detail::unit_loadings_of_image(a_c, estimator, &model.col_eigenvalue);

    if (detail::plain_correlation(model.u_hat, x.row_means()) < 0.0) {
        model.u_hat = -model.u_hat;
        model.row_flipped = true;
    }
    if (detail::plain_correlation(model.v_hat, x.col_means()) < 0.0) {
        model.v_hat = -model.v_hat;
        model.col_flipped = true;
    }
    return model;
}

}  // namespace refactor
