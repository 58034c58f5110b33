#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "refactor/image.hpp"
#include "refactor/minres.hpp"

namespace refactor {

/// Image-based unidimensionality indices for one (dataset, association)
/// pair. Fields that cannot be evaluated (tiny p, non-PD image, constant
/// data) are left empty with a reason.
struct TraditionalPanel {
    std::optional<double> alpha;
    std::optional<double> av_r;
    std::optional<double> cfi;
    std::optional<double> tli;
    std::optional<double> rho_c;
    std::optional<double> tau_rc;
    std::optional<double> u_rc;
    std::optional<double> ecv;
    std::map<std::string, std::string> missing_reasons;
};

namespace detail {

/// Pairwise-complete item covariance matrix (sample denominators).
inline RealMatrix pairwise_covariance(const ResponseMatrix& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    RealMatrix s = RealMatrix::Zero(p, p);
    for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = a; b < p; ++b) {
            double sx = 0, sy = 0, sxy = 0;
            Eigen::Index cnt = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!x.observed(i, a) || !x.observed(i, b)) continue;
                const double va = x.value(i, a);
                const double vb = x.value(i, b);
                sx += va;
                sy += vb;
                sxy += va * vb;
                ++cnt;
            }
            double cov = 0.0;
            if (cnt > 1) {
                const double mx = sx / static_cast<double>(cnt);
                const double my = sy / static_cast<double>(cnt);
                cov = (sxy - static_cast<double>(cnt) * mx * my) / static_cast<double>(cnt - 1);
            }
            s(a, b) = cov;
            s(b, a) = cov;
        }
    return s;
}

/// ML discrepancy F = log|Sigma| - log|A| + tr(A Sigma^-1) - p.
/// nullopt when either matrix is not positive definite.
inline std::optional<double> ml_discrepancy(const RealMatrix& a, const RealMatrix& sigma) {
    const Eigen::Index p = a.rows();
    Eigen::LLT<RealMatrix> llt_a(a);
    Eigen::LLT<RealMatrix> llt_s(sigma);
    if (llt_a.info() != Eigen::Success || llt_s.info() != Eigen::Success) return std::nullopt;
    double logdet_a = 0, logdet_s = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        logdet_a += 2.0 * std::log(llt_a.matrixL()(i, i));
        logdet_s += 2.0 * std::log(llt_s.matrixL()(i, i));
    }
    const double trace = llt_s.solve(a).trace();
    return logdet_s - logdet_a + trace - static_cast<double>(p);
}

}  // namespace detail

/// Classical panel: Cronbach's alpha on the raw scores, mean interitem
/// association, congeneric fit rho_c, correlational homogeneity tau_RC,
/// their product u_RC, CFI/TLI from one-factor vs independence ML
/// discrepancies (chi^2 ~ (N-1) F on the association image), and ECV
/// from an m-factor minres solution (m defaults to 3).
inline TraditionalPanel traditional_panel(const ResponseMatrix& x, AssociationKind kind,
                                          int ecv_factors = 3, int threads = 1) {
    TraditionalPanel panel;
    const Eigen::Index p = x.cols();
    const Eigen::Index n = x.rows();

    // alpha from the pairwise-complete covariance of the 0/1 scores
    const RealMatrix s = detail::pairwise_covariance(x);
    const double total_var = s.sum();
    if (total_var > 0.0) {
        panel.alpha = (static_cast<double>(p) / static_cast<double>(p - 1)) *
                      (1.0 - s.trace() / total_var);
    } else {
        panel.missing_reasons["alpha"] = "total score variance is zero";
    }

    const AssociationImage a_c = image(x, kind, Axis::columns, threads);
    const RealMatrix& a = a_c.values;

    double off_sum = 0.0, off_sq = 0.0;
    const Eigen::Index n_off = p * (p - 1);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (i != j) {
                off_sum += a(i, j);
                off_sq += a(i, j) * a(i, j);
            }
    const double a_bar = off_sum / static_cast<double>(n_off);
    panel.av_r = a_bar;

    FactorSolution one = minres(a, 1);
    if (off_sq > 0.0) {
        panel.rho_c = (off_sq / 2.0 - one.fit_value) / (off_sq / 2.0);
        double resid = 0.0;
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < p; ++j)
                if (i != j) resid += (a(i, j) - a_bar) * (a(i, j) - a_bar);
        panel.tau_rc = 1.0 - resid / off_sq;
        panel.u_rc = *panel.rho_c * *panel.tau_rc;
    } else {
        panel.missing_reasons["rho_c"] = "no off-diagonal association";
        panel.missing_reasons["tau_rc"] = "no off-diagonal association";
        panel.missing_reasons["u_rc"] = "no off-diagonal association";
    }

    if (p < 3) {
        panel.missing_reasons["cfi"] = "fewer than 3 items";
        panel.missing_reasons["tli"] = "fewer than 3 items";
    } else {
        RealMatrix sigma = one.loadings * one.loadings.transpose();
        sigma.diagonal() += one.uniquenesses;
        const auto f_m = detail::ml_discrepancy(a, sigma);
        const auto f_0 = detail::ml_discrepancy(a, RealMatrix::Identity(p, p));
        if (!f_m || !f_0) {
            panel.missing_reasons["cfi"] = "association image not positive definite";
            panel.missing_reasons["tli"] = "association image not positive definite";
        } else {
            const double big_n = static_cast<double>(n) - 1.0;
            const double chi_m = big_n * std::max(*f_m, 0.0);
            const double chi_0 = big_n * std::max(*f_0, 0.0);
            const double df_m = static_cast<double>(p * (p - 1)) / 2.0 - static_cast<double>(p);
            const double df_0 = static_cast<double>(p * (p - 1)) / 2.0;
            const double excess_m = std::max(chi_m - df_m, 0.0);
            const double denom = std::max({chi_0 - df_0, chi_m - df_m, 0.0});
            panel.cfi = denom > 0.0 ? 1.0 - excess_m / denom : 1.0;
            if (df_m > 0.0 && chi_0 / df_0 > 1.0) {
                panel.tli = (chi_0 / df_0 - chi_m / df_m) / (chi_0 / df_0 - 1.0);
            } else {
                panel.missing_reasons["tli"] = "null-model fit too small";
            }
        }
    }

    const int m = std::min<int>(ecv_factors, static_cast<int>(p) - 1);
    try {
        panel.ecv = ecv(minres(a, m));
    } catch (const std::exception& e) {
        panel.missing_reasons["ecv"] = e.what();
    }
    return panel;
}

}  // namespace refactor
