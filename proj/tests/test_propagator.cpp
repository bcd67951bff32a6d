#include <catch2/catch_amalgamated.hpp>

#include "phi4flow/propagator.hpp"

using namespace phi4flow;

namespace {

// direct textbook form of the propagator, no cancellation guard
double naive_propagator(double a0, double a, double m, const Momentum4& p)
{
    const double M = hat_momentum_sq(p, a0) + m * m;
    const double tail = std::isinf(a) ? 0.0 : std::exp(-a * a * M);
    return (std::exp(-a0 * a0 * M) - tail) / M;
}

} // namespace

TEST_CASE("propagator value")
{
    const Momentum4 p{0.4, -0.2, 1.1, 0.7};

    SECTION("matches the textbook expression")
    {
        const LatticeParams par(0.25, 1.3, 0.8, 1.0);
        REQUIRE(propagator_value(par, p) ==
                Catch::Approx(naive_propagator(0.25, 1.3, 0.8, p)).epsilon(1e-13));
    }
    SECTION("vanishes at a = a0 and stays accurate nearby")
    {
        const LatticeParams par(0.25, 0.25, 0.8, 1.0);
        REQUIRE(propagator_value(par, p) == 0.0);
        const LatticeParams close(0.25, 0.25 * (1.0 + 1e-9), 0.8, 1.0);
        const double M = hat_momentum_sq(p, 0.25) + 0.64;
        const double gap = close.a * close.a - 0.0625;
        // expected head * gap to first order; the naive difference loses digits
        const double expect = std::exp(-0.0625 * M) * gap;
        REQUIRE(propagator_value(close, p) == Catch::Approx(expect).epsilon(1e-6));
    }
    SECTION("integrated limit")
    {
        const LatticeParams par(0.25, a_infinity, 0.8, 1.0);
        REQUIRE(propagator_value(par, p) ==
                Catch::Approx(naive_propagator(0.25, a_infinity, 0.8, p)).epsilon(1e-13));
    }
    SECTION("lambda parameterization agrees with the a parameterization")
    {
        const LatticeParams par(0.25, 2.0, 0.8, 1.0);
        REQUIRE(propagator_value_lambda(0.25, 0.8, 0.5, p) ==
                Catch::Approx(propagator_value(par, p)).epsilon(1e-14));
        REQUIRE(propagator_value_lambda(0.25, 0.8, 0.0, p) ==
                Catch::Approx(naive_propagator(0.25, a_infinity, 0.8, p)).epsilon(1e-13));
    }
}

TEST_CASE("flow kernel is the lambda derivative of the propagator")
{
    const double a0 = 0.2, m = 0.9;
    const Momentum4 p{0.7, -0.3, 0.1, 1.2};
    for (double lambda : {0.5, 1.0, 2.5}) {
        const double h = 1e-5 * lambda;
        const double fd = (propagator_value_lambda(a0, m, lambda + h, p) -
                           propagator_value_lambda(a0, m, lambda - h, p)) /
                          (2.0 * h);
        const double k = flow_kernel_lambda(a0, m, lambda, p, {0, 0, 0, 0});
        REQUIRE(k == Catch::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("kernel momentum derivatives")
{
    const double a0 = 0.2, m = 0.9, lambda = 1.5;
    const Momentum4 p{0.7, -0.3, 0.1, 1.2};
    auto k0 = [&](const Momentum4& q) {
        return flow_kernel_lambda(a0, m, lambda, q, {0, 0, 0, 0});
    };
    const double h = 1e-4;

    SECTION("first derivative vs central difference")
    {
        for (int mu = 0; mu < 4; ++mu) {
            Momentum4 up = p, dn = p;
            up[mu] += h;
            dn[mu] -= h;
            std::array<int, 4> w{0, 0, 0, 0};
            w[mu] = 1;
            REQUIRE(flow_kernel_lambda(a0, m, lambda, p, w) ==
                    Catch::Approx((k0(up) - k0(dn)) / (2.0 * h)).epsilon(1e-6));
        }
    }
    SECTION("pure second derivative vs central difference")
    {
        std::array<int, 4> w{0, 2, 0, 0};
        Momentum4 up = p, dn = p;
        up[1] += h;
        dn[1] -= h;
        const double fd = (k0(up) - 2.0 * k0(p) + k0(dn)) / (h * h);
        REQUIRE(flow_kernel_lambda(a0, m, lambda, p, w) ==
                Catch::Approx(fd).epsilon(1e-5));
    }
    SECTION("mixed fourth derivative vs nested differences")
    {
        // fourth differences divide by h^4, so h must stay well above the
        // roundoff scale eps^(1/8)
        const double hh = 0.02;
        std::array<int, 4> w{2, 0, 2, 0};
        auto d2 = [&](const Momentum4& q, int mu) {
            Momentum4 up = q, dn = q;
            up[mu] += hh;
            dn[mu] -= hh;
            return (k0(up) - 2.0 * k0(q) + k0(dn)) / (hh * hh);
        };
        Momentum4 up = p, dn = p;
        up[2] += hh;
        dn[2] -= hh;
        const double fd = (d2(up, 0) - 2.0 * d2(p, 0) + d2(dn, 0)) / (hh * hh);
        REQUIRE(flow_kernel_lambda(a0, m, lambda, p, w) ==
                Catch::Approx(fd).epsilon(1e-3));
    }
    SECTION("order above four is rejected")
    {
        REQUIRE_THROWS_AS(flow_kernel_lambda(a0, m, lambda, p, {2, 2, 1, 0}),
                          std::invalid_argument);
    }
}

TEST_CASE("rotated kernel derivatives chain through the rotation")
{
    const double a0 = 0.2, m = 0.9, lambda = 1.2;
    const Rotation4 O = Rotation4::givens(0, 1, 0.3).compose(Rotation4::givens(2, 3, 0.2));
    const Momentum4 p{0.5, -0.4, 0.2, 0.8};
    auto k0 = [&](const Momentum4& q) {
        return flow_kernel_rotated_lambda(a0, m, lambda, q, O, {0, 0, 0, 0});
    };
    const double h = 1e-4;

    SECTION("zero order equals the unrotated kernel at the rotated argument")
    {
        REQUIRE(k0(p) == Catch::Approx(flow_kernel_lambda(a0, m, lambda, rotate(O, p),
                                                          {0, 0, 0, 0}))
                             .epsilon(1e-14));
    }
    SECTION("first derivative vs central difference")
    {
        for (int mu = 0; mu < 4; ++mu) {
            Momentum4 up = p, dn = p;
            up[mu] += h;
            dn[mu] -= h;
            std::array<int, 4> w{0, 0, 0, 0};
            w[mu] = 1;
            REQUIRE(flow_kernel_rotated_lambda(a0, m, lambda, p, O, w) ==
                    Catch::Approx((k0(up) - k0(dn)) / (2.0 * h)).epsilon(1e-6));
        }
    }
    SECTION("mixed second derivative vs central difference")
    {
        std::array<int, 4> w{1, 0, 0, 1};
        auto d1 = [&](const Momentum4& q) {
            Momentum4 up = q, dn = q;
            up[3] += h;
            dn[3] -= h;
            return (k0(up) - k0(dn)) / (2.0 * h);
        };
        Momentum4 up = p, dn = p;
        up[0] += h;
        dn[0] -= h;
        const double fd = (d1(up) - d1(dn)) / (2.0 * h);
        REQUIRE(flow_kernel_rotated_lambda(a0, m, lambda, p, O, w) ==
                Catch::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("kernel differences")
{
    const LatticeParams par(0.2, 1.5, 0.9, 1.0);
    const Momentum4 p{0.5, -0.4, 0.2, 0.8};

    SECTION("hypercubic rotations give exactly matching kernels")
    {
        const Rotation4 H = Rotation4::signed_permutation({3, 1, 0, 2}, {-1, 1, 1, -1});
        REQUIRE(std::abs(kernel_difference(par, p, H)) < 1e-15);
        REQUIRE(std::abs(kernel_difference(par, p, H, {1, 0, 1, 0})) < 1e-13);
    }
    SECTION("generic rotations give a nonzero difference that shrinks with a0")
    {
        const Rotation4 O = Rotation4::givens(0, 1, 0.3);
        const double d1 = std::abs(kernel_difference(par, p, O));
        const LatticeParams fine(0.05, 1.5, 0.9, 1.0);
        const double d2 = std::abs(kernel_difference(fine, p, O));
        REQUIRE(d1 > 0.0);
        REQUIRE(d2 < d1);
    }
    SECTION("integrated theory has zero kernel")
    {
        const LatticeParams inf_par(0.2, a_infinity, 0.9, 1.0);
        REQUIRE(kernel_difference(inf_par, p, Rotation4::givens(0, 1, 0.3)) == 0.0);
        REQUIRE(flow_kernel(inf_par, p) == 0.0);
    }
}

TEST_CASE("kernel_value request dispatch")
{
    const LatticeParams par(0.2, 1.5, 0.9, 1.0);
    const Momentum4 p{0.5, -0.4, 0.2, 0.8};
    KernelRequest req{par, p, {0, 0, 0, 0}, std::nullopt};
    REQUIRE(kernel_value(req) ==
            Catch::Approx(flow_kernel_lambda(0.2, 0.9, 1.0 / 1.5, p, {0, 0, 0, 0})));
    req.rotation = Rotation4::givens(1, 2, 0.4);
    REQUIRE(kernel_value(req) ==
            Catch::Approx(flow_kernel_rotated_lambda(0.2, 0.9, 1.0 / 1.5, p,
                                                     *req.rotation, {0, 0, 0, 0})));
}
