#include <catch2/catch_amalgamated.hpp>

#include "phi4flow/quadrature.hpp"

using namespace phi4flow;

TEST_CASE("1-D Gauss rule")
{
    SECTION("polynomial exactness up to degree 2n-1")
    {
        auto poly = [](double x) { return 5.0 * x * x * x * x * x * x * x - 3.0 * x * x + 2.0; };
        // degree 7 is exact for order >= 4
        REQUIRE(integrate_1d(poly, -1.0, 2.0, 4) ==
                Catch::Approx(5.0 * (256.0 - 1.0) / 8.0 - (8.0 + 1.0) + 2.0 * 3.0)
                    .epsilon(1e-13));
    }
    SECTION("panels compose")
    {
        auto f = [](double x) { return std::exp(-x * x); };
        REQUIRE(integrate_1d(f, -3.0, 3.0, 20, 4) ==
                Catch::Approx(integrate_1d(f, -3.0, 3.0, 40)).epsilon(1e-12));
    }
}

TEST_CASE("QuadratureSpec validation")
{
    REQUIRE_NOTHROW(QuadratureSpec{8, 3, 0.0, 1e-9}.validate());
    REQUIRE_THROWS_AS(QuadratureSpec({1, 2, 0.0, 1e-9}).validate(), std::invalid_argument);
    REQUIRE_THROWS_AS(QuadratureSpec({8, 12, 0.0, 1e-9}).validate(), std::invalid_argument);
    REQUIRE_THROWS_AS(QuadratureSpec({8, 2, 0.0, 1e-15}).validate(), std::invalid_argument);
}

TEST_CASE("Brillouin zone grid")
{
    const double a0 = 0.5;
    const QuadratureSpec spec{6, 2, 0.0, 1e-9};

    SECTION("constant integrand gives the zone volume over (2 pi)^4")
    {
        BzGrid grid(a0, spec);
        const double v = grid.integrate_indexed(
            [](std::size_t, std::size_t, std::size_t, std::size_t, const Momentum4&) {
                return 1.0;
            });
        REQUIRE(v == Catch::Approx(1.0 / std::pow(a0, 4)).epsilon(1e-12));
    }
    SECTION("factorized Gaussian matches the 1-D product")
    {
        const double a = 1.3;
        QuadratureSpec damped{10, 3, a, 1e-9};
        BzGrid grid(a0, damped);
        const double v = grid.integrate_indexed(
            [&](std::size_t, std::size_t, std::size_t, std::size_t, const Momentum4& k) {
                return std::exp(-a * a * hat_momentum_sq(k, a0));
            });
        auto axis = [&](double x) {
            const double h = (2.0 / a0) * std::sin(0.5 * a0 * x);
            return std::exp(-a * a * h * h);
        };
        const double one = integrate_1d(axis, -M_PI / a0, M_PI / a0, 60, 8) / (2.0 * M_PI);
        REQUIRE(v == Catch::Approx(one * one * one * one).epsilon(1e-10));
    }
    SECTION("symmetry flags halve the work but not the value")
    {
        const double a = 1.3;
        QuadratureSpec damped{8, 2, a, 1e-9};
        auto f = [&](std::size_t, std::size_t, std::size_t, std::size_t, const Momentum4& k) {
            return std::exp(-a * a * hat_momentum_sq(k, a0)) * (1.0 + k[2] * k[2]);
        };
        BzGrid plain(a0, damped);
        BzGrid even(a0, damped, {true, true, true, true});
        BzGrid central(a0, damped, {false, true, false, false}, true);
        const double v0 = plain.integrate_indexed(f);
        REQUIRE(even.integrate_indexed(f) == Catch::Approx(v0).epsilon(1e-12));
        REQUIRE(central.integrate_indexed(f) == Catch::Approx(v0).epsilon(1e-12));
        REQUIRE(even.nodes(0).size() < plain.nodes(0).size());
        REQUIRE_THROWS_AS(BzGrid(a0, damped, {true, false, false, false}, true),
                          std::invalid_argument);
    }
    SECTION("bit-identical across thread counts")
    {
        QuadratureSpec damped{8, 2, 1.0, 1e-9};
        auto f = [&](std::size_t, std::size_t, std::size_t, std::size_t, const Momentum4& k) {
            return std::exp(-hat_momentum_sq(k, a0)) * std::cos(k[0] + 0.3 * k[3]);
        };
        BzGrid grid(a0, damped);
        quadrature_threads() = 1;
        const double serial = grid.integrate_indexed(f);
        quadrature_threads() = 3;
        const double parallel = grid.integrate_indexed(f);
        quadrature_threads() = 1;
        REQUIRE(serial == parallel); // exact equality, fixed reduction order
    }
}

TEST_CASE("integrate_bz refinement control")
{
    const double a0 = 0.5;
    auto f = [&](const Momentum4& k) { return std::exp(-hat_momentum_sq(k, 0.5)); };
    const IntegralResult r = integrate_bz(f, a0, {6, 1, 1.0, 1e-9});
    REQUIRE(r.error <= 1e-9 * std::abs(r.value));
    // resource-cap violations are rejected before any work
    REQUIRE_THROWS_AS(integrate_bz(f, a0, {8, 12, 0.0, 1e-9}), std::invalid_argument);
}

TEST_CASE("lambda grid and integrals")
{
    const double a0 = 0.25;
    LambdaGrid grid(a0, 6, 6);

    SECTION("panel boundaries span [0, 1/a0] ascending")
    {
        REQUIRE(grid.bounds.front() == 0.0);
        REQUIRE(grid.bounds.back() == Catch::Approx(4.0));
        for (std::size_t i = 0; i + 1 < grid.bounds.size(); ++i)
            REQUIRE(grid.bounds[i] < grid.bounds[i + 1]);
    }
    SECTION("exact antiderivative of a polynomial")
    {
        auto g = [](double l) { return 3.0 * l * l; };
        const IntegralResult r = integrate_lambda(g, 0.0, 4.0, grid);
        REQUIRE(r.value == Catch::Approx(64.0).epsilon(1e-13));
        REQUIRE(r.error < 1e-10);
    }
    SECTION("orientation flips the sign")
    {
        auto g = [](double l) { return std::exp(-l); };
        const double up = integrate_lambda(g, 1.0, 3.0, grid).value;
        const double dn = integrate_lambda(g, 3.0, 1.0, grid).value;
        REQUIRE(up == Catch::Approx(-dn).epsilon(1e-14));
        REQUIRE(up == Catch::Approx(std::exp(-1.0) - std::exp(-3.0)).epsilon(1e-10));
    }
    SECTION("single-pass variant matches the estimating variant")
    {
        auto g = [](double l) { return std::sin(l) + l; };
        REQUIRE(integrate_lambda_value(g, 0.5, 3.5, grid) ==
                integrate_lambda(g, 0.5, 3.5, grid).value);
    }
    SECTION("out-of-range interval is rejected")
    {
        auto g = [](double) { return 1.0; };
        REQUIRE_THROWS_AS(integrate_lambda(g, 0.0, 5.0, grid), std::invalid_argument);
        REQUIRE_THROWS_AS(LambdaGrid(a0, 2, 2), std::invalid_argument);
    }
}
