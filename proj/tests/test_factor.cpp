#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "refactor/loadings.hpp"
#include "refactor/minres.hpp"
#include "refactor/rng.hpp"
#include "refactor/sim.hpp"
#include "refactor/traditional.hpp"

using namespace refactor;

namespace {

RealMatrix random_symmetric(Pcg32& g, int n) {
    RealMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = 2.0 * g.next_uniform() - 1.0;
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

}  // namespace

TEST_CASE("leading_loadings basic contracts") {
    const auto id = leading_loadings(RealMatrix::Identity(3, 3));
    REQUIRE(id.value == Catch::Approx(1.0));
    REQUIRE(id.vector.norm() == Catch::Approx(1.0));

    RealVector v(4);
    v << 0.5, -0.5, 0.5, 0.5;
    const auto rank1 = leading_loadings(v * v.transpose());
    REQUIRE(rank1.value == Catch::Approx(1.0));
    REQUIRE(std::abs(rank1.vector.dot(v)) == Catch::Approx(1.0));
    // sign convention: largest-magnitude entry positive
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < 4; ++i)
        if (std::abs(rank1.vector(i)) > std::abs(rank1.vector(pivot))) pivot = i;
    REQUIRE(rank1.vector(pivot) > 0.0);

    RealMatrix bad = RealMatrix::Identity(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(leading_loadings(bad), std::invalid_argument);
}

TEST_CASE("leading_loadings matches the Jacobi oracle on random matrices") {
    Pcg32 g(RngSpec{321, 0});
    for (int trial = 0; trial < 25; ++trial) {
        const RealMatrix a = random_symmetric(g, 5);
        const auto mine = leading_loadings(a);
        const auto ref = oracle::jacobi_eigen(a);
        REQUIRE(mine.value == Catch::Approx(ref.values(0)).margin(1e-10));
        REQUIRE(std::abs(mine.vector.dot(ref.vectors.col(0))) == Catch::Approx(1.0).margin(1e-9));
        // A w = lambda w within 1e-8 relative residual
        const double resid = (a * mine.vector - mine.value * mine.vector).norm();
        REQUIRE(resid <= 1e-8 * std::max(1.0, std::abs(mine.value)));
    }
}

TEST_CASE("fit_rank_one on a noiseless sign pattern recovers the item ordering") {
    // pure sign pattern of rank-1 Z (threshold model with thresholds at
    // -inf): X = 1{theta lambda^T > 0}
    Pcg32 g(RngSpec{9000, 0});
    const int n = 60, p = 12;
    RealVector theta(n), lambda(p);
    // majority-positive draws keep the marginal-mean alignment decisive
    for (int i = 0; i < n; ++i) theta(i) = g.next_normal() + 0.4;
    for (int j = 0; j < p; ++j) lambda(j) = g.next_normal() + 0.4;
    RealMatrix v(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) v(i, j) = theta(i) * lambda(j) > 0 ? 1.0 : 0.0;
    const ResponseMatrix x = ResponseMatrix::dense(v);

    const RankOneModel model = fit_rank_one(x, AssociationKind::quadrant);
    // the image is exactly the sign outer product, so v_hat is two-level
    // up to solver rounding; quantize away sub-1e-9 noise before ranking
    std::vector<double> vh(p), sl(p);
    for (int j = 0; j < p; ++j) {
        vh[static_cast<std::size_t>(j)] = std::round(model.v_hat(j) * 1e9);
        sl[static_cast<std::size_t>(j)] = lambda(j) > 0 ? 1.0 : 0.0;
    }
    const double tau = oracle::kendall_tau_b_quadratic(vh, sl);
    REQUIRE(tau == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("fit_rank_one null case and duplicated columns") {
    Pcg32 g(RngSpec{1234, 0});
    RealMatrix coin(100, 100);
    for (Eigen::Index i = 0; i < 100; ++i)
        for (Eigen::Index j = 0; j < 100; ++j) coin(i, j) = g.next_uniform() < 0.5 ? 1.0 : 0.0;
    const RankOneModel null_model = fit_rank_one(ResponseMatrix::dense(coin), AssociationKind::phi);
    REQUIRE(null_model.u_hat.norm() == Catch::Approx(1.0));
    REQUIRE(null_model.v_hat.norm() == Catch::Approx(1.0));
    REQUIRE(null_model.col_eigenvalue > 0.0);

    RealMatrix dup(6, 4);
    dup << 1, 1, 0, 1,
           1, 1, 1, 0,
           0, 0, 1, 1,
           1, 1, 0, 0,
           0, 0, 1, 0,
           1, 1, 1, 1;  // columns 0 and 1 identical
    const RankOneModel m = fit_rank_one(ResponseMatrix::dense(dup), AssociationKind::phi);
    REQUIRE(m.v_hat(0) == Catch::Approx(m.v_hat(1)).margin(1e-10));
}

TEST_CASE("sign alignment leaves marginal correlations nonnegative") {
    Pcg32 g(RngSpec{52, 0});
    for (int trial = 0; trial < 10; ++trial) {
        SimThresholdConfig cfg;
        cfg.n = 40;
        cfg.p = 12;
        cfg.seed = RngSpec{52, static_cast<std::uint64_t>(trial + 1)};
        const auto res = sim_threshold(cfg);
        for (const auto kind : {AssociationKind::phi, AssociationKind::quadrant}) {
            const RankOneModel m = fit_rank_one(res.x, kind);
            const auto corr = [](const RealVector& a, const RealVector& b) {
                const RealVector da = a.array() - a.mean();
                const RealVector db = b.array() - b.mean();
                const double den = da.norm() * db.norm();
                return den == 0.0 ? 0.0 : da.dot(db) / den;
            };
            REQUIRE(corr(m.u_hat, res.x.row_means()) >= 0.0);
            REQUIRE(corr(m.v_hat, res.x.col_means()) >= 0.0);
        }
    }
}

TEST_CASE("minres recovers an exact one-factor structure") {
    const int p = 9;
    RealVector lambda = RealVector::Constant(p, 0.8);
    RealMatrix a = lambda * lambda.transpose();
    a.diagonal().setOnes();
    const FactorSolution sol = minres(a, 1);
    REQUIRE(sol.converged);
    REQUIRE(sol.fit_value < 1e-8);
    for (int i = 0; i < p; ++i) REQUIRE(std::abs(sol.loadings(i, 0)) == Catch::Approx(0.8).margin(1e-4));
    REQUIRE(sol.uniquenesses.minCoeff() >= 0.001);
    REQUIRE(sol.uniquenesses.maxCoeff() <= 1.0);
}

TEST_CASE("minres on the identity finds no common variance") {
    const FactorSolution sol = minres(RealMatrix::Identity(6, 6), 1);
    REQUIRE(sol.loadings.cwiseAbs().maxCoeff() < 1e-6);
    REQUIRE(sol.fit_value < 1e-12);
}

TEST_CASE("minres fit is nonincreasing in the factor count") {
    Pcg32 g(RngSpec{404, 7});
    for (int trial = 0; trial < 8; ++trial) {
        // correlation-like symmetric matrix with unit diagonal
        RealMatrix b(8, 3);
        for (Eigen::Index i = 0; i < 8; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) b(i, j) = g.next_normal() * 0.5;
        RealMatrix a = b * b.transpose();
        for (Eigen::Index i = 0; i < 8; ++i)
            for (Eigen::Index j = 0; j < 8; ++j)
                if (i != j) a(i, j) = std::clamp(a(i, j), -0.95, 0.95);
        a.diagonal().setOnes();
        const double f1 = minres(a, 1).fit_value;
        const double f2 = minres(a, 2).fit_value;
        REQUIRE(f2 <= f1 + 1e-10);
    }
    REQUIRE_THROWS_AS(minres(RealMatrix::Identity(4, 4), 4), std::invalid_argument);
}

TEST_CASE("ecv: single factor, balanced factors, rotation invariance") {
    RealMatrix lam1(5, 1);
    lam1 << 0.7, 0.6, 0.5, 0.4, 0.3;
    FactorSolution one;
    one.loadings = lam1;
    one.m = 1;
    REQUIRE(ecv(one) == Catch::Approx(1.0).margin(1e-6));

    FactorSolution two;
    two.loadings = RealMatrix::Zero(6, 2);
    two.loadings.col(0).head(3).setConstant(0.6);
    two.loadings.col(1).tail(3).setConstant(0.6);
    two.m = 2;
    REQUIRE(ecv(two) == Catch::Approx(0.5).margin(1e-12));

    // rotation invariance and agreement with the eigenvalue oracle
    Pcg32 g(RngSpec{88, 0});
    RealMatrix lam(9, 3);
    for (Eigen::Index i = 0; i < 9; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) lam(i, j) = g.next_normal() * 0.4;
    FactorSolution three;
    three.loadings = lam;
    three.m = 3;
    const double base = ecv(three);

    const auto eig = oracle::jacobi_eigen(lam * lam.transpose());
    REQUIRE(base == Catch::Approx(eig.values(0) / eig.values.head(3).sum()).margin(1e-10));

    for (int trial = 0; trial < 5; ++trial) {
        RealMatrix q(3, 3);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) q(i, j) = g.next_normal();
        const Eigen::HouseholderQR<RealMatrix> qr(q);
        const RealMatrix rot = qr.householderQ();
        FactorSolution rotated;
        rotated.loadings = lam * rot;
        rotated.m = 3;
        REQUIRE(ecv(rotated) == Catch::Approx(base).margin(1e-10));
    }

    FactorSolution zero;
    zero.loadings = RealMatrix::Zero(4, 2);
    zero.m = 2;
    REQUIRE_THROWS_AS(ecv(zero), std::invalid_argument);
}

TEST_CASE("traditional panel on perfectly consistent items") {
    RealMatrix v(8, 4);
    for (Eigen::Index i = 0; i < 8; ++i) v.row(i).setConstant(i % 2 == 0 ? 1.0 : 0.0);
    const TraditionalPanel t = traditional_panel(ResponseMatrix::dense(v), AssociationKind::phi);
    REQUIRE(*t.alpha == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(*t.av_r == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(*t.rho_c >= 0.999);
    REQUIRE(*t.u_rc == Catch::Approx(*t.rho_c * *t.tau_rc).margin(1e-12));
}

TEST_CASE("traditional panel on independent coins") {
    Pcg32 g(RngSpec{12121, 0});
    const int n = 400, p = 10;
    RealMatrix v(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) v(i, j) = g.next_uniform() < 0.5 ? 1.0 : 0.0;
    const TraditionalPanel t = traditional_panel(ResponseMatrix::dense(v), AssociationKind::phi);
    REQUIRE(std::abs(*t.av_r) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("traditional panel on an exact one-factor image") {
    // build binary data whose phi image is close to the analytic
    // one-factor target by thresholding a strong latent factor
    SimHierConfig cfg;
    cfg.n = 3000;
    cfg.n_factor_blocks = 1;
    cfg.g_loading = 1.0;
    cfg.n_minor_factors = 0;
    cfg.seed = RngSpec{77, 1};
    const auto res = sim_hierarchical(cfg);
    const TraditionalPanel t = traditional_panel(res.x, AssociationKind::tetrachoric);
    REQUIRE(*t.rho_c >= 0.95);
    REQUIRE(*t.tau_rc >= 0.8);

    // direct formula evaluation on the analytic image itself
    RealVector lambda = RealVector::Constant(9, 0.8);
    RealMatrix a = lambda * lambda.transpose();
    a.diagonal().setOnes();
    const FactorSolution one = minres(a, 1);
    double off_sq = 0.0, off_sum = 0.0;
    for (Eigen::Index i = 0; i < 9; ++i)
        for (Eigen::Index j = 0; j < 9; ++j)
            if (i != j) {
                off_sq += a(i, j) * a(i, j);
                off_sum += a(i, j);
            }
    const double rho_c = (off_sq / 2.0 - one.fit_value) / (off_sq / 2.0);
    const double a_bar = off_sum / 72.0;
    double resid = 0.0;
    for (Eigen::Index i = 0; i < 9; ++i)
        for (Eigen::Index j = 0; j < 9; ++j)
            if (i != j) resid += (a(i, j) - a_bar) * (a(i, j) - a_bar);
    REQUIRE(rho_c >= 0.999);
    REQUIRE(1.0 - resid / off_sq >= 0.999);
}

TEST_CASE("traditional panel edge cases and determinism") {
    RealMatrix v(6, 2);
    v << 1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1;
    const TraditionalPanel t = traditional_panel(ResponseMatrix::dense(v), AssociationKind::phi);
    REQUIRE_FALSE(t.cfi.has_value());  // p < 3
    REQUIRE(t.missing_reasons.count("cfi") == 1);

    SimThresholdConfig cfg;
    cfg.n = 50;
    cfg.p = 8;
    cfg.seed = RngSpec{31415, 0};
    const auto res = sim_threshold(cfg);
    const TraditionalPanel a = traditional_panel(res.x, AssociationKind::quadrant);
    const TraditionalPanel b = traditional_panel(res.x, AssociationKind::quadrant);
    REQUIRE(*a.alpha == *b.alpha);
    REQUIRE(*a.ecv == *b.ecv);
    REQUIRE(*a.cfi == *b.cfi);
}
