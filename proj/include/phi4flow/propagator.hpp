#pragma once

// The regularized propagator C^{a0,a}, its flow kernel d/d(1/a) C, closed-form
// momentum derivatives up to order 4, and rotated variants.

#include <optional>

#include "phi4flow/lattice.hpp"

namespace phi4flow {

// C^{a0,a}(p) = (e^{-a0^2 M} - e^{-a^2 M}) / M with M = hat(p)^2 + m^2,
// computed as e^{-a0^2 M} (1 - e^{-(a^2-a0^2) M}) / M to avoid cancellation
// when a is close to a0. a = infinity uses the analytic limit.
inline double propagator_value(const LatticeParams& par, const Momentum4& p)
{
    const double M = hat_momentum_sq(p, par.a0) + par.m * par.m;
    const double head = std::exp(-par.a0 * par.a0 * M);
    if (par.integrated()) return head / M;
    const double gap = (par.a - par.a0) * (par.a + par.a0);
    return head * (-std::expm1(-gap * M)) / M;
}

// Propagator at flow scale lambda = 1/a for fixed a0 (lambda = 0 means a = inf).
inline double propagator_value_lambda(double a0, double m, double lambda,
                                      const Momentum4& p)
{
    const double M = hat_momentum_sq(p, a0) + m * m;
    const double head = std::exp(-a0 * a0 * M);
    if (lambda == 0.0) return head / M;
    const double gap = 1.0 / (lambda * lambda) - a0 * a0;
    return head * (-std::expm1(-gap * M)) / M;
}

namespace detail {

// Per-axis factor g(x) = exp(-hat(x)^2 / lambda^2) of the flow kernel and its
// x-derivatives up to order 4 (chain rule on H(x) = hat(x)^2/lambda^2).
inline void kernel_axis_derivs(double a0, double inv_l2, double x, int order,
                               double out[5])
{
    const double c = std::cos(a0 * x), s = std::sin(a0 * x);
    const double H = (2.0 / (a0 * a0)) * (1.0 - c) * inv_l2;
    const double g = std::exp(-H);
    out[0] = g;
    if (order < 1) return;
    const double H1 = (2.0 / a0) * s * inv_l2;
    const double H2 = 2.0 * c * inv_l2;
    const double H3 = -2.0 * a0 * s * inv_l2;
    const double H4 = -2.0 * a0 * a0 * c * inv_l2;
    out[1] = -H1 * g;
    if (order < 2) return;
    out[2] = (H1 * H1 - H2) * g;
    if (order < 3) return;
    out[3] = (-H1 * H1 * H1 + 3.0 * H1 * H2 - H3) * g;
    if (order < 4) return;
    out[4] = (H1 * H1 * H1 * H1 - 6.0 * H1 * H1 * H2 + 3.0 * H2 * H2 +
              4.0 * H1 * H3 - H4) * g;
}

} // namespace detail

// d^r/dq^r [ d/d(1/a) C^{a0,1/lambda} ](hat q) as an exact per-axis product;
// r is a per-direction order tuple with |r| <= 4. lambda = 0 returns 0.
inline double flow_kernel_lambda(double a0, double m, double lambda,
                                 const Momentum4& q, const std::array<int, 4>& r)
{
    int tot = r[0] + r[1] + r[2] + r[3];
    if (tot > 4) throw std::invalid_argument("flow_kernel: |w| > 4 out of scope");
    if (lambda == 0.0) return 0.0;
    const double inv_l2 = 1.0 / (lambda * lambda);
    const double inv_l3 = inv_l2 / lambda;
    double val = -2.0 * inv_l3 * std::exp(-m * m * inv_l2);
    double d[5];
    for (int mu = 0; mu < 4; ++mu) {
        detail::kernel_axis_derivs(a0, inv_l2, q[mu], r[mu], d);
        val *= d[r[mu]];
    }
    return val;
}

inline double flow_kernel(const LatticeParams& par, const Momentum4& p,
                          const std::array<int, 4>& w = {0, 0, 0, 0})
{
    if (par.integrated()) return 0.0;
    return flow_kernel_lambda(par.a0, par.m, 1.0 / par.a, p, w);
}

// d^w_p [ d/d(1/a) C^{a0,1/lambda} ](hat(Op)): the p-derivative chain rule
// assigns each derivative slot to an image direction with weight O(nu, mu).
inline double flow_kernel_rotated_lambda(double a0, double m, double lambda,
                                         const Momentum4& p, const Rotation4& o,
                                         const std::array<int, 4>& w)
{
    int tot = w[0] + w[1] + w[2] + w[3];
    if (tot > 4) throw std::invalid_argument("flow_kernel: |w| > 4 out of scope");
    if (lambda == 0.0) return 0.0;
    const Momentum4 q = rotate(o, p);
    if (tot == 0) return flow_kernel_lambda(a0, m, lambda, q, {0, 0, 0, 0});

    int dirs[4];
    int nd = 0;
    for (int mu = 0; mu < 4; ++mu)
        for (int c = 0; c < w[mu]; ++c) dirs[nd++] = mu;

    const double inv_l2 = 1.0 / (lambda * lambda);
    double axis[4][5];
    for (int mu = 0; mu < 4; ++mu)
        detail::kernel_axis_derivs(a0, inv_l2, q[mu], tot, axis[mu]);
    const double pref =
        -2.0 * (inv_l2 / lambda) * std::exp(-m * m * inv_l2);

    double sum = 0.0;
    int n_assign = 1;
    for (int j = 0; j < nd; ++j) n_assign *= 4;
    for (int code = 0; code < n_assign; ++code) {
        int cc = code;
        int ord[4] = {0, 0, 0, 0};
        double coeff = 1.0;
        for (int j = 0; j < nd; ++j) {
            int nu = cc & 3;
            cc >>= 2;
            coeff *= o(nu, dirs[j]);
            ++ord[nu];
        }
        if (coeff == 0.0) continue;
        double term = coeff;
        for (int mu = 0; mu < 4; ++mu) term *= axis[mu][ord[mu]];
        sum += term;
    }
    return pref * sum;
}

// Lemma-2 style difference d^w dC(hat p) - d^w dC(hat(Op)).
inline double kernel_difference(const LatticeParams& par, const Momentum4& p,
                                const Rotation4& o,
                                const std::array<int, 4>& w = {0, 0, 0, 0})
{
    if (par.integrated()) return 0.0;
    const double lambda = 1.0 / par.a;
    return flow_kernel_lambda(par.a0, par.m, lambda, p, w) -
           flow_kernel_rotated_lambda(par.a0, par.m, lambda, p, o, w);
}

// Bundled request for a single kernel evaluation (one leg, optional rotation).
struct KernelRequest {
    LatticeParams params;
    Momentum4 p;
    std::array<int, 4> w{0, 0, 0, 0};
    std::optional<Rotation4> rotation;
};

inline double kernel_value(const KernelRequest& req)
{
    if (req.params.integrated()) return 0.0;
    const double lambda = 1.0 / req.params.a;
    if (req.rotation)
        return flow_kernel_rotated_lambda(req.params.a0, req.params.m, lambda,
                                          req.p, *req.rotation, req.w);
    return flow_kernel_lambda(req.params.a0, req.params.m, lambda, req.p, req.w);
}

} // namespace phi4flow
