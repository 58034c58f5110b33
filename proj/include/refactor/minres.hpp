#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <stdexcept>

#include "refactor/matrix.hpp"

namespace refactor {

/// m-factor common-variance decomposition A ~ Lambda Lambda^T + Psi with
/// diagonal uniquenesses, fitted by unweighted least squares on the
/// off-diagonal residuals.
struct FactorSolution {
    RealMatrix loadings;      // p x m
    RealVector uniquenesses;  // length p, in [0, 1]
    double fit_value = 0.0;   // sum of squared off-diagonal residuals
    int m = 0;
    bool converged = false;
    int iterations = 0;
};

/// Minimum-residual factoring via alternating least squares: given
/// communalities h, the best rank-m common part is the eigen-truncation
/// of A with h on the diagonal (negative eigenvalues clipped); given
/// loadings, the optimal diagonal makes the diagonal residual zero, so
/// the off-diagonal objective decreases monotonically. Uniquenesses are
/// clamped to [0.001, 1] to suppress Heywood cases.
inline FactorSolution minres(const RealMatrix& a, int m, int max_iter = 500, double tol = 1e-9) {
    require_finite(a, "minres");
    const Eigen::Index p = a.rows();
    if (a.cols() != p) throw std::invalid_argument("minres: matrix not square");
    if (m < 1 || m >= p) throw std::invalid_argument("minres: need 1 <= m < p");

    // Start communalities at the squared multiple correlation when the
    // image is invertible (it approaches the solution from below, so
    // surplus diagonal variance never leaks into extra factors on
    // low-rank targets), falling back to the largest absolute
    // off-diagonal per row.
    RealVector h(p);
    bool have_smc = false;
    Eigen::FullPivLU<RealMatrix> lu(a);
    if (lu.isInvertible()) {
        const RealMatrix inv = lu.inverse();
        have_smc = true;
        for (Eigen::Index i = 0; i < p; ++i) {
            if (inv(i, i) <= 0.0) {
                have_smc = false;
                break;
            }
            h(i) = std::clamp(1.0 - 1.0 / inv(i, i), 0.0, 0.999);
        }
    }
    if (!have_smc) {
        for (Eigen::Index i = 0; i < p; ++i) {
            double best = 0.0;
            for (Eigen::Index j = 0; j < p; ++j)
                if (j != i) best = std::max(best, std::abs(a(i, j)));
            h(i) = std::clamp(best, 0.0, 0.999);
        }
    }

    RealMatrix lambda = RealMatrix::Zero(p, m);
    FactorSolution sol;
    sol.m = m;
    RealMatrix work = a;
    for (int iter = 0; iter < max_iter; ++iter) {
        work = a;
        work.diagonal() = h;
        Eigen::SelfAdjointEigenSolver<RealMatrix> eig(work);
        if (eig.info() != Eigen::Success) throw std::runtime_error("minres: eigensolver failed");
        for (int f = 0; f < m; ++f) {
            const Eigen::Index col = p - 1 - f;
            const double ev = std::max(eig.eigenvalues()(col), 0.0);
            lambda.col(f) = eig.eigenvectors().col(col) * std::sqrt(ev);
        }
        RealVector h_new = lambda.rowwise().squaredNorm();
        for (Eigen::Index i = 0; i < p; ++i) h_new(i) = std::clamp(h_new(i), 0.0, 0.999);
        const double change = (h_new - h).cwiseAbs().maxCoeff();
        h = h_new;
        sol.iterations = iter + 1;
        if (change < tol) {
            sol.converged = true;
            break;
        }
    }

    sol.loadings = lambda;
    sol.uniquenesses = (RealVector::Ones(p) - lambda.rowwise().squaredNorm())
                           .cwiseMax(0.001)
                           .cwiseMin(1.0);
    const RealMatrix common = lambda * lambda.transpose();
    double fit = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) {
            const double r = a(i, j) - common(i, j);
            fit += r * r;
        }
    sol.fit_value = fit;
    return sol;
}

/// Explained common variance: leading eigenvalue share of
/// Lambda Lambda^T, i.e. the top squared singular value of Lambda over
/// the sum. Invariant to right-rotations of Lambda.
inline double ecv(const FactorSolution& sol) {
    if (sol.loadings.size() == 0) throw std::invalid_argument("ecv: empty solution");
    Eigen::JacobiSVD<RealMatrix> svd(sol.loadings);
    const RealVector sv = svd.singularValues();
    double total = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) total += sv(i) * sv(i);
    if (total <= 0.0) throw std::invalid_argument("ecv: all-zero loadings");
    return sv(0) * sv(0) / total;
}

}  // namespace refactor
