#include <catch2/catch_amalgamated.hpp>

#include "refactor/isotonic.hpp"
#include "refactor/reconstruct.hpp"
#include "refactor/rng.hpp"

using namespace refactor;

namespace {

ResponseMatrix row_matrix(const std::vector<double>& x) {
    RealMatrix v(2, static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) {
        v(0, j) = x[j];
        v(1, j) = x[j];
    }
    BoolMask m = BoolMask::Constant(2, static_cast<Eigen::Index>(x.size()), true);
    m.row(1).setConstant(false);
    // one live row; second row masked except first cell to satisfy shape
    m(1, 0) = true;
    return ResponseMatrix(v, m);
}

RealMatrix row_scores(const std::vector<double>& s) {
    RealMatrix v(2, static_cast<Eigen::Index>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j) {
        v(0, j) = s[j];
        v(1, j) = -100.0;  // masked cells except (1,0)
    }
    v(1, 0) = -100.0;
    return v;
}

}  // namespace

TEST_CASE("reconstruct builds the outer product") {
    RankOneModel m;
    m.u_hat = RealVector(2);
    m.u_hat << 1, 0;
    m.v_hat = RealVector(2);
    m.v_hat << 1, 1;
    const Reconstruction r = reconstruct(m);
    REQUIRE(r.scores(0, 0) == 1.0);
    REQUIRE(r.scores(0, 1) == 1.0);
    REQUIRE(r.scores(1, 0) == 0.0);
    REQUIRE(r.scores(1, 1) == 0.0);

    Pcg32 g(RngSpec{999, 0});
    RankOneModel rnd;
    rnd.u_hat = RealVector(7);
    rnd.v_hat = RealVector(5);
    for (int i = 0; i < 7; ++i) rnd.u_hat(i) = g.next_normal();
    for (int j = 0; j < 5; ++j) rnd.v_hat(j) = g.next_normal();
    rnd.u_hat.normalize();
    rnd.v_hat.normalize();
    const Reconstruction rr = reconstruct(rnd);
    REQUIRE(rr.scores.norm() == Catch::Approx(1.0).margin(1e-12));
    // every 2x2 minor vanishes
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) {
            const double minor = rr.scores(i, j) * rr.scores(i + 1, j + 1) -
                                 rr.scores(i, j + 1) * rr.scores(i + 1, j);
            REQUIRE(std::abs(minor) < 1e-12);
        }
}

TEST_CASE("pava solves the textbook cases") {
    // separable: every 1 outranks every 0
    RealMatrix x(2, 2), s(2, 2);
    x << 0, 1, 0, 1;
    s << 0.1, 0.9, 0.2, 0.8;
    const ResponseMatrix rx = ResponseMatrix::dense(x);
    const IsotonicFit sep = isotonic_calibrate(rx, s);
    REQUIRE(sep.rss == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(sep.fitted(0, 0) == 0.0);
    REQUIRE(sep.fitted(0, 1) == 1.0);
    REQUIRE(*isotonic_r2(rx, s) == Catch::Approx(1.0));

    // constant scores pool to the global mean
    RealMatrix flat = RealMatrix::Constant(2, 2, 0.5);
    const IsotonicFit pooled = isotonic_calibrate(rx, flat);
    REQUIRE(pooled.fitted(1, 1) == Catch::Approx(0.5));
    REQUIRE(pooled.rss == Catch::Approx(1.0));  // 4 * (0.5)^2
    REQUIRE(*isotonic_r2(rx, flat) == Catch::Approx(0.0));

    // X = [0,1,0,1] with scores [1,2,3,4]: fitted [0, .5, .5, 1], rss .5
    const ResponseMatrix vx = row_matrix({0, 1, 0, 1});
    RealMatrix vs = row_scores({1, 2, 3, 4});
    const IsotonicFit fit = isotonic_calibrate(vx, vs);
    // live cells are row 0 plus the one masked-alive (1,0) cell
    REQUIRE(fit.fitted(0, 0) == Catch::Approx(0.0));
    REQUIRE(fit.fitted(0, 1) == Catch::Approx(0.5));
    REQUIRE(fit.fitted(0, 2) == Catch::Approx(0.5));
    REQUIRE(fit.fitted(0, 3) == Catch::Approx(1.0));

    // same four entries arranged as a full matrix: rss 0.5 against a
    // total sum of squares of 1 gives R^2 = 0.5
    RealMatrix fx(2, 2), fs(2, 2);
    fx << 0, 1,
          0, 1;
    fs << 1, 2,
          3, 4;
    const ResponseMatrix frx = ResponseMatrix::dense(fx);
    REQUIRE(isotonic_calibrate(frx, fs).rss == Catch::Approx(0.5));
    REQUIRE(*isotonic_r2(frx, fs) == Catch::Approx(0.5));
}

TEST_CASE("pava pools tied scores to one value") {
    RealMatrix x(2, 3), s(2, 3);
    x << 1, 0, 1,
         0, 1, 0;
    s << 2, 2, 2,
         1, 1, 5;
    const ResponseMatrix rx = ResponseMatrix::dense(x);
    const IsotonicFit fit = isotonic_calibrate(rx, s);
    REQUIRE(fit.fitted(0, 0) == fit.fitted(0, 1));
    REQUIRE(fit.fitted(0, 0) == fit.fitted(0, 2));
    // nondecreasing in score order
    double prev = -1;
    for (const auto& k : fit.knots) {
        REQUIRE(k.value >= prev);
        prev = k.value;
    }
}

TEST_CASE("pava beats random monotone step candidates") {
    Pcg32 g(RngSpec{46, 0});
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 8, p = 6;
        RealMatrix x(n, p), s(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) {
                x(i, j) = g.next_uniform() < 0.5 ? 1.0 : 0.0;
                s(i, j) = g.next_normal();
            }
        const ResponseMatrix rx = ResponseMatrix::dense(x);
        const IsotonicFit fit = isotonic_calibrate(rx, s);

        for (int cand = 0; cand < 50; ++cand) {
            // random nondecreasing step function over the score range
            const int n_steps = 1 + static_cast<int>(g.next_below(6));
            std::vector<double> cuts, levels;
            for (int k = 0; k < n_steps; ++k) cuts.push_back(g.next_normal());
            std::sort(cuts.begin(), cuts.end());
            double level = g.next_uniform() * 0.3;
            for (int k = 0; k <= n_steps; ++k) {
                levels.push_back(level);
                level += g.next_uniform() * (1.0 - level);
            }
            double rss = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < p; ++j) {
                    const auto pos = std::upper_bound(cuts.begin(), cuts.end(), s(i, j));
                    const double f = levels[static_cast<std::size_t>(pos - cuts.begin())];
                    rss += (x(i, j) - f) * (x(i, j) - f);
                }
            REQUIRE(fit.rss <= rss + 1e-12);
        }
    }
}

TEST_CASE("isotonic r2 is invariant under strictly increasing transforms") {
    Pcg32 g(RngSpec{47, 0});
    RealMatrix x(10, 8), s(10, 8);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 8; ++j) {
            x(i, j) = g.next_uniform() < 0.4 ? 1.0 : 0.0;
            s(i, j) = g.next_normal();
        }
    const ResponseMatrix rx = ResponseMatrix::dense(x);
    const double base = *isotonic_r2(rx, s);

    RealMatrix affine = 3.0 * s.array() + 7.0;
    RealMatrix cubed = s.array().cube();
    RealMatrix logistic = 1.0 / (1.0 + (-s.array()).exp());
    REQUIRE(*isotonic_r2(rx, affine) == Catch::Approx(base).margin(1e-12));
    REQUIRE(*isotonic_r2(rx, cubed) == Catch::Approx(base).margin(1e-12));
    REQUIRE(*isotonic_r2(rx, logistic) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("isotonic r2 dominates the clipped linear predictor") {
    Pcg32 g(RngSpec{48, 0});
    for (int trial = 0; trial < 10; ++trial) {
        RealMatrix x(9, 9), s(9, 9);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) {
                x(i, j) = g.next_uniform() < 0.5 ? 1.0 : 0.0;
                s(i, j) = g.next_normal() + x(i, j);
            }
        const ResponseMatrix rx = ResponseMatrix::dense(x);
        const IsotonicFit fit = isotonic_calibrate(rx, s);

        // least-squares line of x on s, then clipped to [0, 1] (still a
        // nondecreasing function when the slope is nonnegative)
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = 81.0;
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) {
                sx += s(i, j);
                sy += x(i, j);
                sxx += s(i, j) * s(i, j);
                sxy += s(i, j) * x(i, j);
            }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double intercept = (sy - slope * sx) / n;
        if (slope < 0) continue;
        double lin_rss = 0;
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) {
                const double f = std::clamp(intercept + slope * s(i, j), 0.0, 1.0);
                lin_rss += (x(i, j) - f) * (x(i, j) - f);
            }
        REQUIRE(fit.rss <= lin_rss + 1e-12);
    }
}

TEST_CASE("isotonic fit respects the mask and rejects shape errors") {
    RealMatrix x(2, 2), s(2, 2);
    x << 1, 0, 0, 1;
    s << 1, 2, 3, 4;
    BoolMask m = BoolMask::Constant(2, 2, true);
    m(0, 1) = false;
    const ResponseMatrix rx(x, m);
    const IsotonicFit fit = isotonic_calibrate(rx, s);
    REQUIRE(std::isnan(fit.fitted(0, 1)));
    REQUIRE_THROWS_AS(isotonic_calibrate(rx, RealMatrix::Zero(3, 2)), std::invalid_argument);

    // constant responses leave r2 undefined
    RealMatrix ones = RealMatrix::Constant(2, 2, 1.0);
    REQUIRE_FALSE(isotonic_r2(ResponseMatrix::dense(ones), s).has_value());
}
