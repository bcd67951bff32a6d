#pragma once

// Perturbative flow hierarchy for the CAS coefficient functions L_{l,n}:
// closed forms for the tree-level and one-loop-tadpole members, lambda-flow
// quadrature for (1,4), counterterm shooting, the rotated theory, and the
// memoized two-loop (2,2) extension.
//
// Conventions: lambda = 1/a is the flow parameter; evaluate integrates the
// flow right-hand side from the bare side lambda = 1/a0 down (or up) to 1/a,
// starting from the bare boundary value. The right-hand side at order (l,n)
// never references L_{l,n} itself, so no ODE solve is involved.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>

#include "phi4flow/lattice.hpp"
#include "phi4flow/propagator.hpp"
#include "phi4flow/quadrature.hpp"

namespace phi4flow {

class OutOfScopeError : public std::runtime_error {
  public:
    explicit OutOfScopeError(const std::string& what) : std::runtime_error(what) {}
};

struct CASIndex {
    int l;
    int n;

    // {(0,2),(0,4),(0,6),(1,2),(1,4)} plus the extended (2,2)
    bool in_scope() const
    {
        if (n % 2 == 1) return true; // represented; evaluates to zero
        if (l == 0) return n == 2 || n == 4 || n == 6;
        if (l == 1) return n == 2 || n == 4;
        if (l == 2) return n == 2;
        return false;
    }
};

struct CountertermSet {
    // index = loop order; c[2] is not determinable in scope (needs rhs(2,4))
    std::array<double, 3> d{0.0, 0.0, 0.0};
    std::array<double, 3> b{0.0, 0.0, 0.0};
    std::array<double, 3> c{0.0, 0.0, 0.0};
};

struct RotationContext {
    std::optional<Rotation4> O;
    bool rotated() const { return O.has_value(); }
};

// One rsy channel: an unordered {S, S^c} split of the external legs with the
// number of ordered realizations at the requested split size.
struct Channel {
    std::uint32_t subset_mask;
    int multiplicity;
};

struct ChannelDecomposition {
    int n;
    int n1;
    std::vector<Channel> channels;
};

inline ChannelDecomposition rsy_channels(int n, int n1)
{
    if (n1 < 1 || n1 > n - 1)
        throw std::invalid_argument("rsy_channels: need 1 <= n1 <= n-1");
    ChannelDecomposition d{n, n1, {}};
    const std::uint32_t full = (1u << n) - 1u;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        if (std::popcount(mask) != n1) continue;
        const std::uint32_t comp = full & ~mask;
        if (2 * n1 == n && mask > comp) continue; // unordered pair, keep one
        d.channels.push_back({mask, 2 * n1 == n ? 2 : 1});
    }
    return d;
}

struct FlowOptions {
    QuadratureSpec bubble{7, 2, 0.0, 1e-9};  // damping hint filled per lambda
    QuadratureSpec zone{8, 3, 0.0, 1e-9};    // full-zone integrals
    int lambda_panels_half = 8;
    int lambda_order = 8;
    int memo_k_cells = 4;   // two-loop memo grid cells per axis

    static FlowOptions coarse()
    {
        FlowOptions o;
        o.bubble = {5, 1, 0.0, 1e-9};
        o.zone = {6, 2, 0.0, 1e-9};
        o.lambda_panels_half = 5;
        o.lambda_order = 5;
        o.memo_k_cells = 2;
        return o;
    }
};

class FlowSolver {
  public:
    FlowSolver(double a0, double m, double f, FlowOptions opt = {})
        : a0_(a0), m_(m), f_(f), opt_(opt),
          lgrid_(a0, opt.lambda_panels_half, opt.lambda_order, m)
    {
        (void)LatticeParams(a0, a0, m, f); // validates a0, m
        opt_.bubble.validate();
        opt_.zone.validate();
    }

    explicit FlowSolver(const LatticeParams& par, FlowOptions opt = {})
        : FlowSolver(par.a0, par.m, par.f, opt)
    {
    }

    double a0() const { return a0_; }
    double m() const { return m_; }
    double f() const { return f_; }
    const LambdaGrid& lambda_grid() const { return lgrid_; }

    // ---- counterterms ------------------------------------------------------

    const CountertermSet& counterterms(int max_l)
    {
        if (max_l < 0 || max_l > 2)
            throw OutOfScopeError("counterterms: loop order out of scope");
        for (int l = ct_level_ + 1; l <= max_l; ++l) shoot(l);
        return ct_;
    }

    // ---- evaluation --------------------------------------------------------

    // L_{l,n}(ctx.O applied to momenta; a) for unrotated input momenta;
    // shares the unrotated counterterm set in every context.
    double evaluate(int l, int n, const MomentumSet& momenta, double a,
                    const RotationContext& ctx = {})
    {
        CASIndex idx{l, n};
        if (!idx.in_scope())
            throw OutOfScopeError("evaluate: (l,n) out of implemented scope");
        if (n % 2 == 1) return 0.0;
        require_legs(momenta, n);
        require_conservation(momenta);
        require_a(a);

        const Rotation4* O = ctx.O ? &*ctx.O : nullptr;
        const double lam = std::isinf(a) ? 0.0 : 1.0 / a;

        if (l == 0 && n == 2) return 0.0;
        if (l == 0 && n == 4) return f_;
        if (l == 0 && n == 6) return eval06(momenta, lam, O);
        if (l == 1 && n == 2) return tadpole(lam, O);
        if (l == 1 && n == 4) return eval14(momenta, lam, O);
        return two_loop_two_point(momenta[0], a, ctx).value;
    }

    // evaluate plus the flow-quadrature refinement estimate (closed forms
    // report zero error)
    IntegralResult evaluate_result(int l, int n, const MomentumSet& momenta,
                                   double a, const RotationContext& ctx = {})
    {
        const double value = evaluate(l, n, momenta, a, ctx);
        double err = 0.0;
        if (n % 2 == 0 && ((l == 1 && n == 4) || (l == 2 && n == 2))) {
            const Rotation4* O = ctx.O ? &*ctx.O : nullptr;
            const double lam = std::isinf(a) ? 0.0 : 1.0 / a;
            auto g = [&](double l2) {
                return l == 1 ? rhs14(momenta, l2, O) : rhs22(momenta[0], l2, O);
            };
            err = integrate_lambda(g, 1.0 / a0_, lam, lgrid_).error;
        }
        return {value, err};
    }

    // flow right-hand side d/d(lambda) L_{l,n} at scale lambda
    double rhs(int l, int n, const MomentumSet& momenta, double lambda,
               const RotationContext& ctx = {})
    {
        CASIndex idx{l, n};
        if (!idx.in_scope())
            throw OutOfScopeError("rhs: (l,n) out of implemented scope");
        if (n % 2 == 1) return 0.0;
        require_legs(momenta, n);
        require_conservation(momenta);
        const Rotation4* O = ctx.O ? &*ctx.O : nullptr;

        if (l == 0 && (n == 2 || n == 4)) return 0.0;
        if (l == 0 && n == 6) return rhs06(momenta, lambda, O);
        if (l == 1 && n == 2) return 0.5 * f_ * kernel_zone_integral(lambda, O);
        if (l == 1 && n == 4) return rhs14(momenta, lambda, O);
        ensure_memo(momenta[0], ctx);
        return rhs22(momenta[0], lambda, O);
    }

    // single-leg momentum derivative of evaluate, |w| <= 2
    double evaluate_derivative(int l, int n, const MomentumSet& momenta,
                               std::size_t leg, const std::array<int, 4>& w,
                               double a, const RotationContext& ctx = {})
    {
        CASIndex idx{l, n};
        if (!idx.in_scope())
            throw OutOfScopeError("evaluate_derivative: (l,n) out of scope");
        const int tot = w[0] + w[1] + w[2] + w[3];
        if (tot > 2) throw OutOfScopeError("evaluate_derivative: |w| > 2");
        if (tot == 0) return evaluate(l, n, momenta, a, ctx);
        if (n % 2 == 1) return 0.0;
        require_legs(momenta, n);
        if (leg >= momenta.size())
            throw std::invalid_argument("evaluate_derivative: bad leg");
        require_conservation(momenta);
        require_a(a);
        const Rotation4* O = ctx.O ? &*ctx.O : nullptr;
        const double lam = std::isinf(a) ? 0.0 : 1.0 / a;

        if (l == 0 && (n == 2 || n == 4)) return 0.0;
        if (l == 1 && n == 2) return 0.0; // momentum independent
        if (l == 0 && n == 6) return eval06_deriv(momenta, leg, w, lam, O);
        if (l == 1 && n == 4) return eval14_deriv(momenta, leg, w, lam, O);
        throw OutOfScopeError("evaluate_derivative: not available for (2,2)");
    }

    // ---- two-loop extension ------------------------------------------------

    struct TwoLoopResult {
        double value;
        double zero_value;
        double defect; // |value(p) - value(0)|
    };

    TwoLoopResult two_loop_two_point(const Momentum4& p, double a,
                                     const RotationContext& ctx = {})
    {
        require_a(a);
        counterterms(2);
        const Rotation4* O = ctx.O ? &*ctx.O : nullptr;
        const double hi = std::isinf(a) ? 0.0 : 1.0 / a;

        auto value_at = [&](const Momentum4& q) {
            ensure_memo(q, ctx);
            auto g = [&](double lam) { return rhs22(q, lam, O); };
            const double flow =
                integrate_lambda_value(g, 1.0 / a0_, hi, lgrid_);
            const Momentum4 hq = O ? rotate(*O, q) : q;
            return 2.0 * ct_.d[2] + ct_.b[2] * hat_momentum_sq(hq, a0_) + flow;
        };
        TwoLoopResult r{};
        r.value = value_at(p);
        r.zero_value = value_at(Momentum4{0, 0, 0, 0});
        r.defect = std::abs(r.value - r.zero_value);
        return r;
    }

    // ---- building blocks exposed for tests and verification ----------------

    // 3-subset channel momentum sums of (0,6): the 10 subsets containing leg 0
    static std::vector<Momentum4> six_point_channel_sums(const MomentumSet& p)
    {
        std::vector<Momentum4> sums;
        for (int i = 1; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                sums.push_back(p[0] + p[i] + p[j]);
        return sums;
    }

    // integral of the flow kernel over the zone at scale lambda (cached per
    // scale; rotated caches are invalidated when the rotation changes)
    double kernel_zone_integral(double lambda, const Rotation4* O)
    {
        if (lambda == 0.0) return 0.0;
        sync_rotation(O);
        auto& cache = O ? cache_kint_rot_ : cache_kint_unrot_;
        auto it = cache.find(lambda);
        if (it != cache.end()) return it->second;

        QuadratureSpec spec = opt_.bubble;
        spec.damping_a = 1.0 / lambda;
        double val;
        if (!O) {
            BzGrid grid(a0_, spec, {true, true, true, true});
            val = grid.integrate_indexed(
                [&](std::size_t, std::size_t, std::size_t, std::size_t,
                    const Momentum4& k) {
                    return flow_kernel_lambda(a0_, m_, lambda, k, {0, 0, 0, 0});
                });
        } else {
            BzGrid grid(a0_, spec, {false, false, false, false}, true);
            val = grid.integrate_indexed(
                [&](std::size_t, std::size_t, std::size_t, std::size_t,
                    const Momentum4& k) {
                    return flow_kernel_lambda(a0_, m_, lambda, rotate(*O, k),
                                              {0, 0, 0, 0});
                });
        }
        cache.emplace(lambda, val);
        return val;
    }

    // int_B exp(-alpha * M(hat(Ok))) / M(hat(Ok)) dbar k
    double zone_exp_over_M(double alpha, const Rotation4* O)
    {
        QuadratureSpec spec = opt_.zone;
        if (alpha > a0_ * a0_ * (1.0 + 1e-12)) spec.damping_a = std::sqrt(alpha);
        auto f = [&](std::size_t, std::size_t, std::size_t, std::size_t,
                     const Momentum4& k) {
            const Momentum4 q = O ? rotate(*O, k) : k;
            const double M = hat_momentum_sq(q, a0_) + m_ * m_;
            return std::exp(-alpha * M) / M;
        };
        if (!O) {
            BzGrid grid(a0_, spec, {true, true, true, true});
            return grid.integrate_indexed(f);
        }
        BzGrid grid(a0_, spec, {false, false, false, false}, true);
        return grid.integrate_indexed(f);
    }

    // one-loop tadpole L_{1,2} at scale lambda (momentum independent). The
    // unrotated closed form -f/2 int e^{-M/lambda^2}/M equals the flow of the
    // bare value 2 d1 and never references the counterterm numerically. The
    // rotated theory adds the zone-average difference of the rotated and
    // unrotated integrands, computed on one shared grid so the correction is
    // resolved relative to its own size, not the tadpole's.
    double tadpole(double lambda, const Rotation4* O = nullptr)
    {
        sync_rotation(O);
        const double base =
            lambda == 0.0 ? 0.0 : -0.5 * f_ * cached_E(lambda, nullptr);
        if (!O) return base;
        if (!tadpole_A_rot_) tadpole_A_rot_ = zone_diff(a0_ * a0_, O);
        double DE = 0.0;
        if (lambda != 0.0) {
            auto it = cache_DE_rot_.find(lambda);
            if (it != cache_DE_rot_.end()) {
                DE = it->second;
            } else {
                DE = zone_diff(1.0 / (lambda * lambda), O);
                cache_DE_rot_.emplace(lambda, DE);
            }
        }
        return base + 0.5 * f_ * (*tadpole_A_rot_ - DE);
    }

    // int_B [e^{-alpha M^O}/M^O - e^{-alpha M}/M] dbar k on one grid
    double zone_diff(double alpha, const Rotation4* O)
    {
        QuadratureSpec spec = opt_.bubble;
        if (alpha > a0_ * a0_ * (1.0 + 1e-12)) spec.damping_a = std::sqrt(alpha);
        const double m2 = m_ * m_;
        BzGrid grid(a0_, spec, {false, false, false, false}, true);
        return grid.integrate_indexed(
            [&](std::size_t, std::size_t, std::size_t, std::size_t,
                const Momentum4& k) {
                const double Mu = hat_momentum_sq(rotate(*O, k), a0_) + m2;
                const double Mk = hat_momentum_sq(k, a0_) + m2;
                return std::exp(-alpha * Mu) / Mu - std::exp(-alpha * Mk) / Mk;
            });
    }

    // sum over channel shifts of int_B C(hat(O(k+q)); lambda) K(hat(Ok); lambda)
    double bubble_sum(double lambda, const std::vector<Momentum4>& shifts,
                      const Rotation4* O);

  private:
    void require_legs(const MomentumSet& momenta, int n) const
    {
        if (static_cast<int>(momenta.size()) != n)
            throw std::invalid_argument("momenta count does not match n");
    }

    void require_conservation(const MomentumSet& momenta) const
    {
        Momentum4 s{0, 0, 0, 0};
        for (const auto& p : momenta) s = s + p;
        s = reduce_to_first_zone(s, a0_);
        const double tol = 1e-9 * 2.0 * M_PI / a0_;
        for (int mu = 0; mu < 4; ++mu)
            if (std::abs(s[mu]) > tol)
                throw std::invalid_argument(
                    "momentum conservation violated modulo 2pi/a0");
    }

    void require_a(double a) const
    {
        if (!(a >= a0_))
            throw std::invalid_argument("evaluate: need a >= a0");
    }

    // ---- (0,6) -------------------------------------------------------------

    double eval06(const MomentumSet& p, double lam, const Rotation4* O)
    {
        double sum = 0.0;
        for (const auto& s : six_point_channel_sums(p)) {
            const Momentum4 q = O ? rotate(*O, s) : s;
            sum += propagator_value_lambda(a0_, m_, lam, q);
        }
        return -f_ * f_ * sum;
    }

    double rhs06(const MomentumSet& p, double lambda, const Rotation4* O)
    {
        double sum = 0.0;
        for (const auto& s : six_point_channel_sums(p)) {
            const Momentum4 q = O ? rotate(*O, s) : s;
            sum += flow_kernel_lambda(a0_, m_, lambda, q, {0, 0, 0, 0});
        }
        return -f_ * f_ * sum;
    }

    double eval06_deriv(const MomentumSet& p, std::size_t leg,
                        const std::array<int, 4>& w, double lam,
                        const Rotation4* O)
    {
        // channels are the 10 subsets {0,i,j}; the channel momentum sum
        // depends on the leg iff the leg belongs to the subset
        double sum = 0.0;
        for (int i = 1; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) {
                if (leg != 0 && leg != static_cast<std::size_t>(i) &&
                    leg != static_cast<std::size_t>(j))
                    continue;
                sum += propagator_partial(p[0] + p[i] + p[j], w, lam, O);
            }
        return -f_ * f_ * sum;
    }

  public:
    // d^w_q C^{a0,1/lam}(hat(Oq)), |w| <= 2 (w in the unrotated frame)
    double propagator_partial(const Momentum4& q, const std::array<int, 4>& w,
                              double lam, const Rotation4* O) const
    {
        const int tot = w[0] + w[1] + w[2] + w[3];
        const Momentum4 u = O ? rotate(*O, q) : q;
        const double m2 = m_ * m_;
        const double M = hat_momentum_sq(u, a0_) + m2;
        const double alpha = a0_ * a0_;
        const double ea = std::exp(-alpha * M);
        const double beta = lam == 0.0 ? 0.0 : 1.0 / (lam * lam);
        const double eb = lam == 0.0 ? 0.0 : std::exp(-beta * M);
        const double N = ea - eb;
        const double N1 = -alpha * ea + beta * eb;
        const double N2 = alpha * alpha * ea - beta * beta * eb;
        const double Phi = N / M;
        const double Phi1 = N1 / M - N / (M * M);
        const double Phi2 = N2 / M - 2.0 * N1 / (M * M) + 2.0 * N / (M * M * M);
        if (tot == 0) return Phi;

        auto Mnu = [&](int nu) { return (2.0 / a0_) * std::sin(a0_ * u[nu]); };
        auto Mnunu = [&](int nu) { return 2.0 * std::cos(a0_ * u[nu]); };
        auto Ochain = [&](int nu, int mu) {
            return O ? (*O)(nu, mu) : (nu == mu ? 1.0 : 0.0);
        };

        int dirs[2];
        int nd = 0;
        for (int mu = 0; mu < 4; ++mu)
            for (int c = 0; c < w[mu]; ++c) dirs[nd++] = mu;

        if (tot == 1) {
            double s = 0.0;
            for (int nu = 0; nu < 4; ++nu)
                s += Ochain(nu, dirs[0]) * Phi1 * Mnu(nu);
            return s;
        }
        double s = 0.0;
        for (int nu = 0; nu < 4; ++nu)
            for (int np = 0; np < 4; ++np) {
                double t = Phi2 * Mnu(nu) * Mnu(np);
                if (nu == np) t += Phi1 * Mnunu(nu);
                s += Ochain(nu, dirs[0]) * Ochain(np, dirs[1]) * t;
            }
        return s;
    }

  private:
    // ---- (1,4) -------------------------------------------------------------

    static std::vector<Momentum4> pair_shifts(const MomentumSet& p)
    {
        std::vector<Momentum4> shifts;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) shifts.push_back(p[i] + p[j]);
        return shifts;
    }

    double rhs14(const MomentumSet& p, double lambda, const Rotation4* O)
    {
        if (lambda == 0.0) return 0.0;
        const double bub = bubble_sum(lambda, pair_shifts(p), O);
        double csum = 0.0, ksum = 0.0;
        for (int i = 0; i < 4; ++i) {
            const Momentum4 q = O ? rotate(*O, p[i]) : p[i];
            csum += propagator_value_lambda(a0_, m_, lambda, q);
            ksum += flow_kernel_lambda(a0_, m_, lambda, q, {0, 0, 0, 0});
        }
        const double linear =
            -0.5 * f_ * f_ * (bub + csum * kernel_zone_integral(lambda, O));
        const double quadratic = -f_ * tadpole(lambda, O) * ksum;
        return linear + quadratic;
    }

    double eval14(const MomentumSet& p, double lam, const Rotation4* O)
    {
        counterterms(1);
        auto g = [&](double l2) { return rhs14(p, l2, O); };
        const double flow = integrate_lambda_value(g, 1.0 / a0_, lam, lgrid_);
        return 24.0 * ct_.c[1] + flow;
    }

    double eval14_deriv(const MomentumSet& p, std::size_t leg,
                        const std::array<int, 4>& w, double lam,
                        const Rotation4* O)
    {
        counterterms(1);
        auto g = [&](double lambda) {
            if (lambda == 0.0) return 0.0;
            // linear term: derivative of the six pair channels containing the
            // leg plus the four single-leg propagator channels
            double bub = 0.0;
            QuadratureSpec spec = opt_.bubble;
            spec.damping_a = 1.0 / lambda;
            BzGrid grid(a0_, spec);
            for (int i = 0; i < 4; ++i) {
                if (static_cast<std::size_t>(i) == leg) continue;
                const Momentum4 q = p[leg] + p[i];
                bub += grid.integrate_indexed(
                    [&](std::size_t, std::size_t, std::size_t, std::size_t,
                        const Momentum4& k) {
                        const Momentum4 kk =
                            O ? rotate(*O, k) : k;
                        return propagator_partial(k + q, w, lambda, O) *
                               flow_kernel_lambda(a0_, m_, lambda, kk,
                                                  {0, 0, 0, 0});
                    });
            }
            const double tad_chan =
                propagator_partial(p[leg], w, lambda, O) *
                kernel_zone_integral(lambda, O);
            double kder;
            if (O)
                kder = flow_kernel_rotated_lambda(a0_, m_, lambda, p[leg], *O, w);
            else
                kder = flow_kernel_lambda(a0_, m_, lambda, p[leg], w);
            return -0.5 * f_ * f_ * (bub + tad_chan) -
                   f_ * tadpole(lambda, O) * kder;
        };
        return integrate_lambda_value(g, 1.0 / a0_, lam, lgrid_);
    }

    // ---- counterterm shooting ---------------------------------------------

    void shoot(int l)
    {
        if (l == 0) {
            ct_level_ = 0;
            return;
        }
        if (l == 1) {
            ct_.d[1] = -0.25 * f_ * zone_exp_over_M(a0_ * a0_, nullptr);
            ct_.b[1] = 0.0; // rhs(1,2) is momentum independent
            MomentumSet zero(4, Momentum4{0, 0, 0, 0});
            auto g = [&](double lam) { return rhs14(zero, lam, nullptr); };
            ct_.c[1] =
                integrate_lambda_value(g, 0.0, 1.0 / a0_, lgrid_) / 24.0;
            ct_level_ = 1;
            return;
        }
        // l == 2: d2 and b2 by shooting on rhs(2,2); c2 needs rhs(2,4),
        // which is outside the implemented hierarchy scope, and never enters
        // the (2,2) flow.
        const Momentum4 zero{0, 0, 0, 0};
        RotationContext unrot;
        ensure_memo(zero, unrot);
        auto g0 = [&](double lam) { return rhs22(zero, lam, nullptr); };
        ct_.d[2] = 0.5 * integrate_lambda_value(g0, 0.0, 1.0 / a0_, lgrid_);
        const double step = 0.2 * m_;
        const Momentum4 ph{step, 0, 0, 0};
        ensure_memo(ph, unrot);
        auto gh = [&](double lam) { return rhs22(ph, lam, nullptr); };
        const double Ih = integrate_lambda_value(gh, 0.0, 1.0 / a0_, lgrid_);
        const double I0 = 2.0 * ct_.d[2];
        // slope probe in hat(p)^2: fixes d/d(p^2) at 0 up to O(hat(p)^2)
        const double hp2 = hat_momentum_sq(ph, a0_);
        ct_.b[2] = (Ih - I0) / hp2;
        ct_level_ = 2;
    }

    // ---- (2,2) memoized two-loop ------------------------------------------

    struct MemoGrid {
        Momentum4 external{};
        bool rotated = false;
        int cells = 0;
        std::vector<double> lambdas;            // ascending sample scales
        std::vector<std::vector<double>> vals;  // [k flat index][lambda index]

        double lookup(const Momentum4& k, double lambda, double a0) const;
    };

    void ensure_memo(const Momentum4& p, const RotationContext& ctx);
    double rhs22(const Momentum4& p, double lambda, const Rotation4* O);

    // rotated caches are valid for one rotation at a time; a different
    // rotation matrix flushes them
    void sync_rotation(const Rotation4* O)
    {
        if (!O) return;
        std::array<double, 16> key;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) key[4 * i + j] = (*O)(i, j);
        if (rot_key_ && *rot_key_ == key) return;
        rot_key_ = key;
        cache_DE_rot_.clear();
        cache_kint_rot_.clear();
        tadpole_A_rot_.reset();
        std::erase_if(memos_, [](const MemoGrid& g) { return g.rotated; });
    }

    double cached_E(double lambda, std::nullptr_t)
    {
        auto it = cache_E_unrot_.find(lambda);
        if (it != cache_E_unrot_.end()) return it->second;
        const double val = zone_exp_over_M(1.0 / (lambda * lambda), nullptr);
        cache_E_unrot_.emplace(lambda, val);
        return val;
    }

    double a0_, m_, f_;
    FlowOptions opt_;
    LambdaGrid lgrid_;
    CountertermSet ct_;
    int ct_level_ = -1;
    std::optional<double> tadpole_A_rot_;
    std::optional<std::array<double, 16>> rot_key_;
    std::map<double, double> cache_E_unrot_, cache_DE_rot_;
    std::map<double, double> cache_kint_unrot_, cache_kint_rot_;
    std::vector<MemoGrid> memos_;
};

// ---------------------------------------------------------------------------
// bubble integral

inline double FlowSolver::bubble_sum(double lambda,
                                     const std::vector<Momentum4>& raw_shifts,
                                     const Rotation4* O)
{
    if (lambda == 0.0) return 0.0;
    QuadratureSpec spec = opt_.bubble;
    spec.damping_a = 1.0 / lambda;

    // merge duplicate shifts into multiplicities
    std::vector<Momentum4> shifts;
    std::vector<double> mult;
    const double tol = 1e-12;
    for (const auto& q : raw_shifts) {
        bool merged = false;
        for (std::size_t i = 0; i < shifts.size(); ++i) {
            if (norm(q + (-shifts[i])) <= tol * (1.0 + norm(q))) {
                mult[i] += 1.0;
                merged = true;
                break;
            }
        }
        if (!merged) {
            shifts.push_back(q);
            mult.push_back(1.0);
        }
    }

    // symmetry detection: per-axis evenness when every shift vanishes in that
    // component (unrotated only), central k -> -k when the weighted shift
    // multiset is negation closed
    std::array<bool, 4> even{false, false, false, false};
    if (!O) {
        for (int mu = 0; mu < 4; ++mu) {
            even[mu] = true;
            for (const auto& q : shifts)
                if (std::abs(q[mu]) > tol) even[mu] = false;
        }
    }
    bool central = true;
    {
        std::vector<int> paired(shifts.size(), -1);
        for (std::size_t i = 0; i < shifts.size() && central; ++i) {
            if (paired[i] >= 0) continue;
            bool found = false;
            for (std::size_t j = i; j < shifts.size(); ++j) {
                if (j > i && paired[j] >= 0) continue;
                if (norm(shifts[i] + shifts[j]) <=
                        tol * (1.0 + norm(shifts[i])) &&
                    mult[i] == mult[j]) {
                    paired[i] = static_cast<int>(j);
                    paired[j] = static_cast<int>(i);
                    found = true;
                    break;
                }
            }
            if (!found) central = false;
        }
    }
    if (even[0]) central = false; // axis-0 evenness subsumes the halving

    const double m2 = m_ * m_;
    const double alpha = a0_ * a0_;
    const double inv_l2 = 1.0 / (lambda * lambda);
    const double gap = inv_l2 - alpha;
    const double pref = -2.0 * (inv_l2 / lambda) * std::exp(-m2 * inv_l2);

    if (O) {
        std::vector<Momentum4> rshift;
        rshift.reserve(shifts.size());
        for (const auto& q : shifts) rshift.push_back(rotate(*O, q));
        BzGrid grid(a0_, spec, even, central);
        return grid.integrate_indexed([&](std::size_t, std::size_t, std::size_t,
                                          std::size_t, const Momentum4& k) {
            const Momentum4 u = rotate(*O, k);
            const double K = pref * std::exp(-hat_momentum_sq(u, a0_) * inv_l2);
            double csum = 0.0;
            for (std::size_t c = 0; c < rshift.size(); ++c) {
                const double M = hat_momentum_sq(u + rshift[c], a0_) + m2;
                csum += mult[c] * std::exp(-alpha * M) *
                        (-std::expm1(-gap * M)) / M;
            }
            return K * csum;
        });
    }

    BzGrid grid(a0_, spec, even, central);
    // per-axis tables over the grid's node lists
    std::array<std::vector<double>, 4> ck, sk, gk;
    for (int mu = 0; mu < 4; ++mu) {
        const auto& xs = grid.nodes(mu);
        ck[mu].resize(xs.size());
        sk[mu].resize(xs.size());
        gk[mu].resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            ck[mu][i] = std::cos(a0_ * xs[i]);
            sk[mu][i] = std::sin(a0_ * xs[i]);
            // per-axis kernel factor exp(-hat(x)^2 / lambda^2)
            gk[mu][i] = std::exp(-(2.0 / alpha) * (1.0 - ck[mu][i]) * inv_l2);
        }
    }
    const std::size_t nch = shifts.size();
    std::vector<std::array<double, 4>> cq(nch), sq(nch);
    for (std::size_t c = 0; c < nch; ++c)
        for (int mu = 0; mu < 4; ++mu) {
            cq[c][mu] = std::cos(a0_ * shifts[c][mu]);
            sq[c][mu] = std::sin(a0_ * shifts[c][mu]);
        }
    const double hatc = 2.0 / alpha; // (2/a0^2)

    return grid.integrate_indexed([&](std::size_t i0, std::size_t i1,
                                      std::size_t i2, std::size_t i3,
                                      const Momentum4&) {
        const double K =
            pref * gk[0][i0] * gk[1][i1] * gk[2][i2] * gk[3][i3];
        const std::size_t idx[4] = {i0, i1, i2, i3};
        double csum = 0.0;
        for (std::size_t c = 0; c < nch; ++c) {
            double M = m2;
            for (int mu = 0; mu < 4; ++mu) {
                const double cos_sum = ck[mu][idx[mu]] * cq[c][mu] -
                                       sk[mu][idx[mu]] * sq[c][mu];
                M += hatc * (1.0 - cos_sum);
            }
            csum += mult[c] * std::exp(-alpha * M) * (-std::expm1(-gap * M)) / M;
        }
        return K * csum;
    });
}

// ---------------------------------------------------------------------------
// two-loop memo

inline double FlowSolver::MemoGrid::lookup(const Momentum4& k, double lambda,
                                           double a0) const
{
    // multilinear in k over the periodic grid, linear in lambda
    const double zone = M_PI / a0;
    const double hstep = 2.0 * zone / cells;
    int base[4];
    double frac[4];
    for (int mu = 0; mu < 4; ++mu) {
        double t = (k[mu] + zone) / hstep;
        t = std::min(std::max(t, 0.0), static_cast<double>(cells) - 1e-12);
        base[mu] = static_cast<int>(t);
        frac[mu] = t - base[mu];
    }
    auto at = [&](int i0, int i1, int i2, int i3) -> const std::vector<double>& {
        const int np = cells + 1;
        return vals[((i0 * np + i1) * np + i2) * np + i3];
    };
    // lambda bracket
    std::size_t j = std::upper_bound(lambdas.begin(), lambdas.end(), lambda) -
                    lambdas.begin();
    if (j == 0) j = 1;
    if (j >= lambdas.size()) j = lambdas.size() - 1;
    const double l0 = lambdas[j - 1], l1 = lambdas[j];
    const double tl = (lambda - l0) / (l1 - l0);

    double acc = 0.0;
    for (int corner = 0; corner < 16; ++corner) {
        double wgt = 1.0;
        int ii[4];
        for (int mu = 0; mu < 4; ++mu) {
            const int up = (corner >> mu) & 1;
            ii[mu] = base[mu] + up;
            wgt *= up ? frac[mu] : 1.0 - frac[mu];
        }
        if (wgt == 0.0) continue;
        const auto& col = at(ii[0], ii[1], ii[2], ii[3]);
        acc += wgt * ((1.0 - tl) * col[j - 1] + tl * col[j]);
    }
    return acc;
}

inline void FlowSolver::ensure_memo(const Momentum4& p, const RotationContext& ctx)
{
    const bool rot = ctx.rotated();
    for (const auto& mg : memos_) {
        if (mg.rotated == rot && norm(mg.external + (-p)) < 1e-14) return;
    }
    counterterms(1);
    const Rotation4* O = ctx.O ? &*ctx.O : nullptr;

    MemoGrid mg;
    mg.external = p;
    mg.rotated = rot;
    mg.cells = opt_.memo_k_cells;

    // lambda samples: the composite-rule nodes plus the interval endpoints
    mg.lambdas.push_back(0.0);
    {
        const auto& rule = detail::gl_rule(lgrid_.order);
        for (std::size_t pa = 0; pa + 1 < lgrid_.bounds.size(); ++pa) {
            const double lo = lgrid_.bounds[pa], hi = lgrid_.bounds[pa + 1];
            const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
            for (int i = 0; i < lgrid_.order; ++i)
                mg.lambdas.push_back(c + s * rule.x[i]);
        }
        mg.lambdas.push_back(1.0 / a0_);
        std::sort(mg.lambdas.begin(), mg.lambdas.end());
    }

    const int np = mg.cells + 1;
    const double zone = M_PI / a0_;
    mg.vals.assign(static_cast<std::size_t>(np) * np * np * np, {});

    // values of L_{1,4}(k, p, -p, -k; lambda): cumulative flow from the bare
    // side, panel-interpolant antiderivatives between sampled nodes
    for (int i0 = 0; i0 < np; ++i0)
        for (int i1 = 0; i1 < np; ++i1)
            for (int i2 = 0; i2 < np; ++i2)
                for (int i3 = 0; i3 < np; ++i3) {
                    const std::size_t flat =
                        ((static_cast<std::size_t>(i0) * np + i1) * np + i2) *
                            np + i3;
                    if (!mg.vals[flat].empty()) continue;
                    const Momentum4 k{-zone + 2.0 * zone * i0 / mg.cells,
                                      -zone + 2.0 * zone * i1 / mg.cells,
                                      -zone + 2.0 * zone * i2 / mg.cells,
                                      -zone + 2.0 * zone * i3 / mg.cells};
                    MomentumSet legs{k, p, -p, -k};
                    std::vector<double> rhsv(mg.lambdas.size());
                    for (std::size_t j = 0; j < mg.lambdas.size(); ++j)
                        rhsv[j] = rhs14(legs, mg.lambdas[j], O);
                    // cumulative integral from 1/a0 downward (trapezoid on the
                    // dense node set; the set is the quadrature node set, so
                    // shooting and evaluation see identical values)
                    std::vector<double> cum(mg.lambdas.size());
                    cum.back() = 24.0 * ct_.c[1];
                    for (std::size_t j = mg.lambdas.size() - 1; j > 0; --j)
                        cum[j - 1] = cum[j] -
                                     0.5 * (rhsv[j] + rhsv[j - 1]) *
                                         (mg.lambdas[j] - mg.lambdas[j - 1]);
                    mg.vals[flat] = std::move(cum);
                    // mirror k -> -k (legs are a permutation: equal values)
                    const int m0 = mg.cells - i0, m1 = mg.cells - i1,
                              m2 = mg.cells - i2, m3 = mg.cells - i3;
                    const std::size_t mflat =
                        ((static_cast<std::size_t>(m0) * np + m1) * np + m2) *
                            np + m3;
                    if (mflat != flat && mg.vals[mflat].empty())
                        mg.vals[mflat] = mg.vals[flat];
                }
    memos_.push_back(std::move(mg));
}

inline double FlowSolver::rhs22(const Momentum4& p, double lambda,
                                const Rotation4* O)
{
    if (lambda == 0.0) return 0.0;
    const MemoGrid* mg = nullptr;
    const bool rot = O != nullptr;
    for (const auto& g : memos_)
        if (g.rotated == rot && norm(g.external + (-p)) < 1e-14) mg = &g;
    if (!mg) throw std::logic_error("rhs22: memo grid missing");

    QuadratureSpec spec = opt_.bubble;
    spec.damping_a = 1.0 / lambda;
    BzGrid grid(a0_, spec, {false, false, false, false}, true);
    const double linear =
        0.5 * grid.integrate_indexed([&](std::size_t, std::size_t, std::size_t,
                                         std::size_t, const Momentum4& k) {
            const Momentum4 u = O ? rotate(*O, k) : k;
            return mg->lookup(k, lambda, a0_) *
                   flow_kernel_lambda(a0_, m_, lambda, u, {0, 0, 0, 0});
        });
    const Momentum4 q = O ? rotate(*O, p) : p;
    const double t = tadpole(lambda, O);
    const double quadratic =
        -t * t * flow_kernel_lambda(a0_, m_, lambda, q, {0, 0, 0, 0});
    return linear + quadratic;
}

// ---------------------------------------------------------------------------
// spec-shaped free functions

inline double evaluate(int l, int n, const MomentumSet& momenta,
                       const LatticeParams& par, const RotationContext& ctx = {},
                       FlowOptions opt = {})
{
    FlowSolver solver(par, opt);
    return solver.evaluate(l, n, momenta, par.a, ctx);
}

inline CountertermSet counterterms(int max_l, const LatticeParams& par,
                                   FlowOptions opt = {})
{
    FlowSolver solver(par, opt);
    return solver.counterterms(max_l);
}

} // namespace phi4flow
