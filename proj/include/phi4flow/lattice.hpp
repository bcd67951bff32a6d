#pragma once

// Momentum-space geometry of the hypercubic lattice: the lattice momentum
// (hat) map, Brillouin zones, rotations and derivative multi-indices.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace phi4flow {

using Momentum4 = std::array<double, 4>;
using MomentumSet = std::vector<Momentum4>;

inline constexpr double a_infinity = std::numeric_limits<double>::infinity();

inline Momentum4 operator+(const Momentum4& x, const Momentum4& y)
{
    return {x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]};
}

inline Momentum4 operator-(const Momentum4& x)
{
    return {-x[0], -x[1], -x[2], -x[3]};
}

inline Momentum4 operator*(double s, const Momentum4& x)
{
    return {s * x[0], s * x[1], s * x[2], s * x[3]};
}

inline double norm(const Momentum4& x)
{
    return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
}

// Regulator and physics tuple (a0, a, m, f). a = infinity is a distinguished
// value meaning the fully integrated theory; kernels treat it by the analytic
// limit e^{-a^2(.)} -> 0.
struct LatticeParams {
    double a0;
    double a;
    double m;
    double f;

    LatticeParams(double a0_, double a_, double m_, double f_)
        : a0(a0_), a(a_), m(m_), f(f_)
    {
        if (!(a0 > 0.0))
            throw std::invalid_argument("LatticeParams: a0 must be positive");
        if (!(a >= a0))
            throw std::invalid_argument("LatticeParams: need a0 <= a");
        if (!(m > 0.0))
            throw std::invalid_argument("LatticeParams: m must be positive");
        if (!(a0 < 1.0 / m))
            throw std::invalid_argument("LatticeParams: need a0 < 1/m");
        if (!std::isfinite(a0) || !std::isfinite(m) || !std::isfinite(f))
            throw std::invalid_argument("LatticeParams: non-finite field");
    }

    bool integrated() const { return std::isinf(a); }
};

// Derivative multi-index: per external leg, per direction order. The
// implemented scope differentiates a single leg with total order <= 4.
struct MultiIndex {
    std::vector<std::array<int, 4>> legs;

    MultiIndex() = default;

    static MultiIndex zero(std::size_t n_legs)
    {
        MultiIndex w;
        w.legs.assign(n_legs, {0, 0, 0, 0});
        return w;
    }

    // single-leg convenience
    static MultiIndex single(std::size_t leg, const std::array<int, 4>& orders,
                             std::size_t n_legs)
    {
        MultiIndex w = zero(n_legs);
        w.legs[leg] = orders;
        w.validate();
        return w;
    }

    int total() const
    {
        int t = 0;
        for (const auto& l : legs)
            for (int o : l) t += o;
        return t;
    }

    void validate() const
    {
        for (const auto& l : legs)
            for (int o : l)
                if (o < 0) throw std::invalid_argument("MultiIndex: negative order");
        if (total() > 4)
            throw std::invalid_argument("MultiIndex: |w| > 4 out of scope");
    }
};

// Orthogonal 4x4 transformation, validated eagerly at construction.
class Rotation4 {
  public:
    explicit Rotation4(const std::array<std::array<double, 4>, 4>& mat) : o_(mat)
    {
        constexpr double tol = 1e-12;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += o_[k][i] * o_[k][j];
                double want = (i == j) ? 1.0 : 0.0;
                if (std::abs(s - want) > tol)
                    throw std::invalid_argument("Rotation4: not orthogonal to 1e-12");
            }
        }
    }

    static Rotation4 identity()
    {
        std::array<std::array<double, 4>, 4> m{};
        for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
        return Rotation4(m);
    }

    // rotation by theta in the (i,j) coordinate plane
    static Rotation4 givens(int i, int j, double theta)
    {
        if (i < 0 || j < 0 || i > 3 || j > 3 || i == j)
            throw std::invalid_argument("Rotation4::givens: bad plane");
        std::array<std::array<double, 4>, 4> m{};
        for (int k = 0; k < 4; ++k) m[k][k] = 1.0;
        m[i][i] = std::cos(theta);
        m[j][j] = std::cos(theta);
        m[i][j] = -std::sin(theta);
        m[j][i] = std::sin(theta);
        return Rotation4(m);
    }

    // signed coordinate permutation: entry k of the image picks sign[k] * x[perm[k]]
    static Rotation4 signed_permutation(const std::array<int, 4>& perm,
                                        const std::array<int, 4>& sign)
    {
        std::array<std::array<double, 4>, 4> m{};
        for (int k = 0; k < 4; ++k) {
            if (perm[k] < 0 || perm[k] > 3 || (sign[k] != 1 && sign[k] != -1))
                throw std::invalid_argument("Rotation4::signed_permutation: bad input");
            m[k][perm[k]] = static_cast<double>(sign[k]);
        }
        return Rotation4(m);
    }

    Rotation4 transpose() const
    {
        std::array<std::array<double, 4>, 4> m{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m[i][j] = o_[j][i];
        return Rotation4(m);
    }

    Rotation4 compose(const Rotation4& rhs) const
    {
        std::array<std::array<double, 4>, 4> m{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += o_[i][k] * rhs.o_[k][j];
                m[i][j] = s;
            }
        return Rotation4(m);
    }

    double operator()(int i, int j) const { return o_[i][j]; }

  private:
    std::array<std::array<double, 4>, 4> o_;
};

inline Momentum4 rotate(const Rotation4& o, const Momentum4& p)
{
    Momentum4 q{};
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += o(i, j) * p[j];
        q[i] = s;
    }
    return q;
}

struct BrillouinZone {
    double a0;
    explicit BrillouinZone(double a0_) : a0(a0_)
    {
        if (!(a0 > 0.0)) throw std::invalid_argument("BrillouinZone: a0 must be positive");
    }
    double half_width() const { return M_PI / a0; }
};

// hat(p)_mu = (2/a0) sin(a0 p_mu / 2): the Fourier multiplier of the lattice
// difference operator. Odd, 2pi/a0-periodic, bounded by 2/a0 per component.
inline Momentum4 hat_momentum(const Momentum4& p, double a0)
{
    const double s = 2.0 / a0;
    return {s * std::sin(0.5 * a0 * p[0]), s * std::sin(0.5 * a0 * p[1]),
            s * std::sin(0.5 * a0 * p[2]), s * std::sin(0.5 * a0 * p[3])};
}

inline double hat_momentum_sq(const Momentum4& p, double a0)
{
    const double s = 2.0 / a0;
    double t = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        double h = s * std::sin(0.5 * a0 * p[mu]);
        t += h * h;
    }
    return t;
}

// Representative in [-pi/a0, pi/a0)^4 congruent to p modulo 2pi/a0.
inline Momentum4 reduce_to_first_zone(const Momentum4& p, double a0)
{
    const double period = 2.0 * M_PI / a0;
    Momentum4 q{};
    for (int mu = 0; mu < 4; ++mu) {
        double r = std::remainder(p[mu], period); // in [-period/2, period/2]
        if (r >= 0.5 * period) r -= period;       // half-open convention
        q[mu] = r;
    }
    return q;
}

} // namespace phi4flow
