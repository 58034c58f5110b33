#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "refactor/normal.hpp"
#include "refactor/rng.hpp"

using namespace refactor;

TEST_CASE("normal_quantile inverts normal_cdf") {
    // bisection inversion of the erfc-based CDF as the independent route
    const auto invert = [](double p) {
        double lo = -10, hi = 10;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (normal_cdf(mid) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    for (const double p : {1e-10, 1e-6, 0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999, 1 - 1e-9}) {
        REQUIRE(normal_quantile(p) == Catch::Approx(invert(p)).margin(1e-9));
    }
    REQUIRE(normal_quantile(0.5) == 0.0);
    REQUIRE_THROWS_AS(normal_quantile(-0.1), std::invalid_argument);
}

TEST_CASE("bvn_upper matches quadrature across the rho range") {
    for (const double rho : {-0.99, -0.95, -0.8, -0.5, -0.2, 0.0, 0.3, 0.6, 0.9, 0.97}) {
        for (const double h : {-1.5, 0.0, 0.7, 2.0}) {
            for (const double k : {-0.5, 0.0, 1.2}) {
                const double genz = bvn_upper(h, k, rho);
                const double quad = oracle::bvn_upper_quadrature(h, k, rho);
                INFO("rho=" << rho << " h=" << h << " k=" << k);
                REQUIRE(genz == Catch::Approx(quad).margin(1e-9));
            }
        }
    }
}

TEST_CASE("bvn_upper limiting cases") {
    REQUIRE(bvn_upper(0, 0, 0.0) == Catch::Approx(0.25).margin(1e-14));
    // median-threshold identity: P11 = 1/4 + asin(rho) / (2 pi)
    for (const double rho : {-0.7, -0.3, 0.2, 0.5, 0.8}) {
        REQUIRE(bvn_upper(0, 0, rho) ==
                Catch::Approx(0.25 + std::asin(rho) / (2 * M_PI)).margin(1e-12));
    }
    // independence factorizes
    REQUIRE(bvn_upper(1.0, -0.5, 0.0) ==
            Catch::Approx(normal_cdf(-1.0) * normal_cdf(0.5)).margin(1e-14));
    const double inf = std::numeric_limits<double>::infinity();
    REQUIRE(bvn_upper(inf, 0, 0.5) == 0.0);
    REQUIRE(bvn_upper(-inf, 0.3, 0.5) == Catch::Approx(normal_cdf(-0.3)));
}
