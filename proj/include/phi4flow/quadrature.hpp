#pragma once

// Deterministic quadrature: tensor-product Gauss-Legendre over the 4-D
// Brillouin zone (damping-aware panel placement) and composite Gauss rules
// over the flow parameter lambda = 1/a. All summation orders are fixed, so
// results are bit-identical across runs and thread counts.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "phi4flow/lattice.hpp"

namespace phi4flow {

struct IntegralResult {
    double value = 0.0;
    double error = 0.0; // refinement-step estimate, absolute
};

class QuadratureError : public std::runtime_error {
  public:
    explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

// global worker cap for tensor-product loops (1 = serial)
inline int& quadrature_threads()
{
    static int n = 1;
    return n;
}

namespace detail {

struct GLRule {
    std::vector<double> x; // nodes on [-1, 1], ascending
    std::vector<double> w;
};

// Newton iteration on Legendre polynomials; cached per order.
inline const GLRule& gl_rule(int order)
{
    static std::mutex mtx;
    static std::map<int, GLRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    GLRule r;
    r.x.resize(order);
    r.w.resize(order);
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    return cache.emplace(order, std::move(r)).first->second;
}

} // namespace detail

// 1-D composite Gauss-Legendre on [lo, hi]
template <class F>
double integrate_1d(F&& f, double lo, double hi, int order, int panels = 1)
{
    const auto& rule = detail::gl_rule(order);
    double sum = 0.0;
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = lo + (p + 0.5) * h, s = 0.5 * h;
        for (int i = 0; i < order; ++i) sum += s * rule.w[i] * f(c + s * rule.x[i]);
    }
    return sum;
}

// Per-axis Gauss-Legendre order, panel subdivision depth, damping scale hint
// and tolerance target for Brillouin-zone integrals.
struct QuadratureSpec {
    int order = 8;
    int depth = 2;
    double damping_a = 0.0; // 0 = no hint; otherwise integrand ~ e^{-a^2 hat(k)^2}
    double rel_tol = 1e-9;

    void validate() const
    {
        if (order < 2 || depth < 0)
            throw std::invalid_argument("QuadratureSpec: order >= 2, depth >= 0");
        if (static_cast<std::int64_t>(order) << depth > 4096)
            throw std::invalid_argument("QuadratureSpec: order*2^depth > 4096");
        if (!(rel_tol >= 1e-12))
            throw std::invalid_argument("QuadratureSpec: tolerance below 1e-12");
    }
};

namespace detail {

struct AxisGrid {
    std::vector<double> x;
    std::vector<double> w;
};

// Panels concentrated on the damping cube |k| <= c/a with c = 10.7 (so that
// e^{-a^2 hat(k)^2} < 1e-18 outside, using hat(k) >= 2k/pi on the zone);
// outside it a single coarse panel per side.
inline AxisGrid make_axis(double a0, int order, int depth, double damping_a,
                          bool even_half)
{
    const double zone = M_PI / a0;
    double inner = zone;
    if (damping_a > 0.0 && 10.7 / damping_a < zone) inner = 10.7 / damping_a;

    std::vector<std::pair<double, double>> panels;
    const int np = 1 << depth;
    for (int i = 0; i < np; ++i)
        panels.emplace_back(-inner + 2.0 * inner * i / np,
                            -inner + 2.0 * inner * (i + 1) / np);
    if (inner < zone * (1.0 - 1e-14)) {
        panels.emplace_back(-zone, -inner);
        panels.emplace_back(inner, zone);
    }

    const auto& rule = gl_rule(order);
    AxisGrid g;
    for (const auto& [lo, hi] : panels) {
        const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
        for (int i = 0; i < order; ++i) {
            const double x = c + s * rule.x[i];
            if (even_half && x <= 0.0) continue;
            g.x.push_back(x);
            g.w.push_back(s * rule.w[i] * (even_half ? 2.0 : 1.0));
        }
    }
    return g;
}

} // namespace detail

// Tensor-product node set over the zone (-pi/a0, pi/a0)^4. Axis symmetry
// flags halve the per-axis node count for integrands even in that component;
// central symmetry halves axis 0 for integrands even under k -> -k.
class BzGrid {
  public:
    BzGrid(double a0, const QuadratureSpec& spec,
           const std::array<bool, 4>& even_axes = {false, false, false, false},
           bool central_even = false)
        : a0_(a0), spec_(spec), central_(central_even)
    {
        spec.validate();
        if (!(a0 > 0.0)) throw std::invalid_argument("BzGrid: a0 must be positive");
        even_ = even_axes;
        if (central_ && even_[0])
            throw std::invalid_argument("BzGrid: central and axis-0 symmetry conflict");
        build(spec.order, axes_);
        int coarse = std::max(2, spec.order / 2);
        build(coarse, coarse_axes_);
    }

    const std::vector<double>& nodes(int mu) const { return axes_[mu].x; }

    // Integral with the (2pi)^-4 normalization; f(i0..i3, k). The summation
    // order is the fixed lexicographic node order; with several workers the
    // outer-axis partial sums are accumulated in index order.
    template <class F>
    double integrate_indexed(F&& f) const
    {
        return run(axes_, std::forward<F>(f));
    }

    template <class F>
    double integrate_indexed_coarse(F&& f) const
    {
        return run(coarse_axes_, std::forward<F>(f));
    }

    template <class F, class G>
    IntegralResult integrate_with_estimate(F&& fine, G&& coarse) const
    {
        IntegralResult r;
        r.value = run(axes_, std::forward<F>(fine));
        const double c = run(coarse_axes_, std::forward<G>(coarse));
        r.error = std::abs(r.value - c);
        return r;
    }

    const std::vector<double>& coarse_nodes(int mu) const { return coarse_axes_[mu].x; }

  private:
    void build(int order, std::array<detail::AxisGrid, 4>& out) const
    {
        for (int mu = 0; mu < 4; ++mu)
            out[mu] = detail::make_axis(a0_, order, spec_.depth, spec_.damping_a,
                                        mu == 0 ? (central_ || even_[0]) : even_[mu]);
    }

    template <class F>
    double run(const std::array<detail::AxisGrid, 4>& ax, F&& f) const
    {
        const auto& a0x = ax[0];
        const std::size_t n0 = a0x.x.size();
        std::vector<double> partial(n0, 0.0);
        auto work = [&](std::size_t i0) {
            Momentum4 k{};
            k[0] = a0x.x[i0];
            double acc = 0.0;
            for (std::size_t i1 = 0; i1 < ax[1].x.size(); ++i1) {
                k[1] = ax[1].x[i1];
                const double w01 = a0x.w[i0] * ax[1].w[i1];
                for (std::size_t i2 = 0; i2 < ax[2].x.size(); ++i2) {
                    k[2] = ax[2].x[i2];
                    const double w012 = w01 * ax[2].w[i2];
                    double inner = 0.0;
                    for (std::size_t i3 = 0; i3 < ax[3].x.size(); ++i3) {
                        k[3] = ax[3].x[i3];
                        inner += ax[3].w[i3] * f(i0, i1, i2, i3, k);
                    }
                    acc += w012 * inner;
                }
            }
            partial[i0] = acc;
        };
        const int nthreads = std::min<int>(quadrature_threads(), static_cast<int>(n0));
        if (nthreads <= 1) {
            for (std::size_t i0 = 0; i0 < n0; ++i0) work(i0);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t)
                pool.emplace_back([&] {
                    for (std::size_t i0 = next.fetch_add(1); i0 < n0;
                         i0 = next.fetch_add(1))
                        work(i0);
                });
            for (auto& th : pool) th.join();
        }
        double sum = 0.0;
        for (std::size_t i0 = 0; i0 < n0; ++i0) sum += partial[i0];
        const double norm = 1.0 / std::pow(2.0 * M_PI, 4);
        return sum * norm;
    }

    double a0_;
    QuadratureSpec spec_;
    bool central_;
    std::array<bool, 4> even_{};
    std::array<detail::AxisGrid, 4> axes_;
    std::array<detail::AxisGrid, 4> coarse_axes_;
};

// Generic Brillouin-zone integral of f(k) with the (2pi)^-4 normalization.
// Escalates the per-axis order until the refinement estimate meets the
// tolerance; reports failure at the resource cap.
template <class F>
IntegralResult integrate_bz(F&& f, double a0, QuadratureSpec spec)
{
    spec.validate();
    for (;;) {
        BzGrid grid(a0, spec);
        auto wrap = [&](std::size_t, std::size_t, std::size_t, std::size_t,
                        const Momentum4& k) { return f(k); };
        IntegralResult r = grid.integrate_with_estimate(wrap, wrap);
        const double scale = std::max(std::abs(r.value), 1e-300);
        if (r.error <= spec.rel_tol * scale) return r;
        if (static_cast<std::int64_t>(spec.order) << (spec.depth + 1) > 4096)
            throw QuadratureError("integrate_bz: refinement estimate " +
                                  std::to_string(r.error) +
                                  " above tolerance at the resource cap");
        spec.order *= 2;
    }
}

// Composite Gauss grid on [0, 1/a0] with panels geometrically refined toward
// both endpoints (kernel peak near 1/a0, analytic zero limit at 0). The
// dyadic ladder toward 0 continues past 1/a0-relative refinement down to the
// physical mass scale: the integrands carry structure at lambda ~ m that a
// ladder anchored only at 1/a0 skips once 1/a0 >> m.
struct LambdaGrid {
    double a0;
    int panels_per_half = 8;
    int order = 8;
    std::vector<double> bounds; // ascending panel boundaries, 0 .. 1/a0

    explicit LambdaGrid(double a0_, int panels_half = 8, int order_ = 8,
                        double scale = 1.0)
        : a0(a0_), panels_per_half(panels_half), order(order_)
    {
        if (!(a0 > 0.0)) throw std::invalid_argument("LambdaGrid: a0 must be positive");
        if (!(scale > 0.0)) throw std::invalid_argument("LambdaGrid: bad scale");
        if (panels_per_half < 4 || order < 2 || panels_per_half * order < 8)
            throw std::invalid_argument("LambdaGrid: too coarse");
        const double top = 1.0 / a0;
        int jmax = panels_per_half - 1;
        while (top * 0.5 * std::pow(0.5, jmax) > scale / 16.0) ++jmax;
        bounds.push_back(0.0);
        for (int j = jmax; j >= 0; --j)
            bounds.push_back(top * 0.5 * std::pow(0.5, j));
        for (int j = 1; j <= panels_per_half; ++j) {
            double b = (j == panels_per_half)
                           ? top
                           : top - top * 0.5 * std::pow(0.5, j);
            bounds.push_back(b);
        }
    }
};

namespace detail {

template <class F>
double lambda_pass(F&& g, double lo, double hi, const LambdaGrid& grid, int order)
{
    const auto& rule = gl_rule(order);
    double sum = 0.0;
    for (std::size_t p = 0; p + 1 < grid.bounds.size(); ++p) {
        double plo = std::max(lo, grid.bounds[p]);
        double phi = std::min(hi, grid.bounds[p + 1]);
        if (phi <= plo) continue;
        const double c = 0.5 * (plo + phi), s = 0.5 * (phi - plo);
        for (int i = 0; i < order; ++i)
            sum += s * rule.w[i] * g(c + s * rule.x[i]);
    }
    return sum;
}

} // namespace detail

// Single-pass (no error estimate) variant for hot paths.
template <class F>
double integrate_lambda_value(F&& g, double lo, double hi, const LambdaGrid& grid)
{
    double sign = 1.0;
    if (lo > hi) {
        std::swap(lo, hi);
        sign = -1.0;
    }
    const double top = grid.bounds.back();
    if (lo < -1e-15 || hi > top * (1.0 + 1e-12))
        throw std::invalid_argument("integrate_lambda: interval outside [0, 1/a0]");
    return sign * detail::lambda_pass(g, lo, hi, grid, grid.order);
}

// Signed composite Gauss integral of g over [lo, hi] subseteq [0, 1/a0],
// following the grid's panel layout clipped to the interval. g(0) must be the
// analytic a = infinity limit.
template <class F>
IntegralResult integrate_lambda(F&& g, double lo, double hi, const LambdaGrid& grid)
{
    double sign = 1.0;
    if (lo > hi) {
        std::swap(lo, hi);
        sign = -1.0;
    }
    const double top = grid.bounds.back();
    if (lo < -1e-15 || hi > top * (1.0 + 1e-12))
        throw std::invalid_argument("integrate_lambda: interval outside [0, 1/a0]");

    auto pass = [&](int order) {
        const auto& rule = detail::gl_rule(order);
        double sum = 0.0;
        for (std::size_t p = 0; p + 1 < grid.bounds.size(); ++p) {
            double plo = std::max(lo, grid.bounds[p]);
            double phi = std::min(hi, grid.bounds[p + 1]);
            if (phi <= plo) continue;
            const double c = 0.5 * (plo + phi), s = 0.5 * (phi - plo);
            for (int i = 0; i < order; ++i)
                sum += s * rule.w[i] * g(c + s * rule.x[i]);
        }
        return sum;
    };

    IntegralResult r;
    r.value = sign * pass(grid.order);
    r.error = std::abs(sign * pass(std::max(2, grid.order / 2)) - r.value);
    return r;
}

} // namespace phi4flow
