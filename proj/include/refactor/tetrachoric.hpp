#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "refactor/association.hpp"
#include "refactor/normal.hpp"

namespace refactor {

namespace detail {

struct TetraTable {
    double n11, n10, n01, n00;
    double total() const { return n11 + n10 + n01 + n00; }
};

// Per-observation log-likelihood of a 2x2 table under a standard
// bivariate normal dichotomized at thresholds (h, k) matching the
// margins. Only the joint upper-quadrant probability depends on rho.
// Normalizing by the table total keeps the convergence tolerance
// meaningful independently of the sample size.
inline double tetra_loglik(const TetraTable& t, double h, double k, double px, double py,
                           double rho) {
    constexpr double floor = 1e-12;
    const double n = t.total();
    const double p11 = std::max(bvn_upper(h, k, rho), floor);
    const double p10 = std::max(px - p11, floor);
    const double p01 = std::max(py - p11, floor);
    const double p00 = std::max(1.0 - px - py + p11, floor);
    return (t.n11 * std::log(p11) + t.n10 * std::log(p10) + t.n01 * std::log(p01) +
            t.n00 * std::log(p00)) /
           n;
}

}  // namespace detail

/// Maximum-likelihood tetrachoric correlation of a 2x2 table. Thresholds
/// are fixed at the normal quantiles of the observed margins; rho is
/// found by golden-section + parabolic refinement (Brent) of the table
/// likelihood on [-0.999, 0.999]. Zero cells receive a +0.5 continuity
/// correction before estimation. `tol` bounds the absolute error of the
/// returned rho. A table whose raw margins are both degenerate carries
/// no signal and yields nullopt.
inline std::optional<double> tetrachoric(const ContingencyTable& raw, double tol = 1e-7) {
    if (raw.total() <= 0) return std::nullopt;
    if (raw.x_degenerate() && raw.y_degenerate()) return std::nullopt;

    detail::TetraTable t{static_cast<double>(raw.n11), static_cast<double>(raw.n10),
                         static_cast<double>(raw.n01), static_cast<double>(raw.n00)};
    if (raw.n11 == 0 || raw.n10 == 0 || raw.n01 == 0 || raw.n00 == 0) {
        if (raw.n11 == 0) t.n11 += 0.5;
        if (raw.n10 == 0) t.n10 += 0.5;
        if (raw.n01 == 0) t.n01 += 0.5;
        if (raw.n00 == 0) t.n00 += 0.5;
    }
    const double n = t.total();
    const double px = (t.n11 + t.n10) / n;  // P(x = 1)
    const double py = (t.n11 + t.n01) / n;
    // P(X > h) = px
    const double h = -normal_quantile(px);
    const double k = -normal_quantile(py);

    const auto neg_ll = [&](double rho) { return -detail::tetra_loglik(t, h, k, px, py, rho); };

    // Brent minimization, warm-started at the odds-ratio approximation
    // cos(pi / (1 + sqrt(OR))) to cut iterations on well-behaved tables.
    constexpr double lo = -0.999, hi = 0.999;
    const double gr = 0.3819660112501051;  // 2 - golden ratio
    double a = lo, b = hi;
    const double odds = (t.n11 * t.n00) / (t.n10 * t.n01);
    double x = std::clamp(std::cos(M_PI / (1.0 + std::sqrt(odds))), lo, hi);
    if (!std::isfinite(x)) x = 0.0;
    double w = x, v = x;
    double fx = neg_ll(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double m = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + 1e-10;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
        double p = 0, q = 0, r = 0;
        bool use_golden = true;
        if (std::abs(e) > tol1) {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0) p = -p;
            q = std::abs(q);
            const double etemp = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
                use_golden = false;
            }
        }
        if (use_golden) {
            e = (x < m) ? b - x : a - x;
            d = gr * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + ((d > 0) ? tol1 : -tol1);
        const double fu = neg_ll(u);
        if (fu <= fx) {
            if (u < x)
                b = x;
            else
                a = x;
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if (u < x)
                a = u;
            else
                b = u;
            if (fu <= fw || w == x) {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    return x;
}

}  // namespace refactor
