#pragma once

// Globally adaptive cubature over boxes: Gauss-Kronrod (7,15) in one
// dimension, Genz-Malik degree-7/5 rule in two or more. Principal values of
// 1/x poles at the origin are taken by folding, (f(x) - f(-x))/x on [0, W].
//
// Everything here is deterministic: regions are refined in a fixed priority
// order (error, then creation index) and sums are reduced in storage order.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "timeorder/errors.hpp"

namespace timeorder::quad {

using cplx = std::complex<double>;

struct QuadratureResult {
    cplx value{};
    double abs_error = 0.0;
    std::size_t evaluations = 0;
    bool converged = true;  // false means ToleranceNotReached: value is the best estimate

    QuadratureResult& operator+=(const QuadratureResult& o) {
        value += o.value;
        abs_error += o.abs_error;
        evaluations += o.evaluations;
        converged = converged && o.converged;
        return *this;
    }
};

// Stop when error <= max(abs, rel*|value|) or when max_eval is used up.
struct Tolerance {
    double rel = 1e-8;
    double abs = 0.0;
    std::size_t max_eval = 2'000'000;
};

struct IntegrationBox {
    std::vector<double> lower, upper;
    std::vector<bool> pv_pole_at_zero;  // empty means no PV dimension

    std::size_t dim() const { return lower.size(); }
    bool is_pv(std::size_t i) const { return i < pv_pole_at_zero.size() && pv_pole_at_zero[i]; }
    bool any_pv() const { return std::find(pv_pole_at_zero.begin(), pv_pole_at_zero.end(), true) != pv_pole_at_zero.end(); }

    void validate() const {
        if (lower.empty() || lower.size() != upper.size())
            throw InvalidParameter("integration box: lower/upper dimension mismatch");
        if (!pv_pole_at_zero.empty() && pv_pole_at_zero.size() != lower.size())
            throw InvalidParameter("integration box: pv flag count mismatch");
        for (std::size_t i = 0; i < dim(); ++i) {
            if (!(lower[i] < upper[i])) throw InvalidParameter("integration box: lower must be < upper");
            if (is_pv(i) && !(lower[i] < 0.0 && 0.0 < upper[i]))
                throw InvalidParameter("integration box: PV dimension must straddle zero");
        }
    }
};

namespace detail {

inline void check_finite(const cplx& v) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NonFiniteIntegrand("integrand returned a non-finite value");
}

// QUADPACK qk15 abscissae and weights.
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Region {
    std::array<double, N> center{}, half{};
    cplx value{};
    double err = 0.0;
    std::size_t id = 0;
    std::size_t split_axis = 0;
};

template <std::size_t N>
struct RegionOrder {
    bool operator()(const Region<N>& a, const Region<N>& b) const {
        if (a.err != b.err) return a.err < b.err;
        return a.id > b.id;
    }
};

template <std::size_t N>
constexpr std::size_t rule_points() {
    if constexpr (N == 1) return 15;
    else return 1 + 4 * N + 2 * N * (N - 1) + (std::size_t{1} << N);
}

template <class F>
void gk15(F& f, Region<1>& r) {
    const double c = r.center[0], h = r.half[0];
    cplx fc = f(std::array<double, 1>{c});
    check_finite(fc);
    cplx rk = fc * wgk[7];
    cplx rg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const cplx f1 = f(std::array<double, 1>{c - dx});
        const cplx f2 = f(std::array<double, 1>{c + dx});
        check_finite(f1);
        check_finite(f2);
        rk += wgk[j] * (f1 + f2);
        if (j % 2 == 1) rg += wg[j / 2] * (f1 + f2);
    }
    r.value = rk * h;
    r.err = std::abs((rk - rg) * h);
    r.split_axis = 0;
}

// Genz-Malik rule on the box center +- half (weights from Genz & Malik 1980).
template <std::size_t N, class F>
void genz_malik(F& f, Region<N>& r) {
    constexpr double n = static_cast<double>(N);
    const double l2 = std::sqrt(9.0 / 70.0), l4 = std::sqrt(9.0 / 10.0), l5 = std::sqrt(9.0 / 19.0);
    const double w1 = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
    const double w2 = 980.0 / 6561.0;
    const double w3 = (1820.0 - 400.0 * n) / 19683.0;
    const double w4 = 200.0 / 19683.0;
    const double w5 = 6859.0 / 19683.0 / static_cast<double>(std::size_t{1} << N);
    const double e1 = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
    const double e2 = 245.0 / 486.0;
    const double e3 = (265.0 - 100.0 * n) / 1458.0;
    const double e4 = 25.0 / 729.0;
    const double ratio = (l2 * l2) / (l4 * l4);

    auto eval = [&](const std::array<double, N>& x) {
        const cplx v = f(x);
        check_finite(v);
        return v;
    };

    const cplx f0 = eval(r.center);
    cplx s2{}, s3{}, s4{}, s5{};
    double best = -1.0;
    std::size_t axis = 0;
    std::array<double, N> x = r.center;
    for (std::size_t i = 0; i < N; ++i) {
        x[i] = r.center[i] - l2 * r.half[i];
        const cplx a = eval(x);
        x[i] = r.center[i] + l2 * r.half[i];
        const cplx b = eval(x);
        x[i] = r.center[i] - l4 * r.half[i];
        const cplx c = eval(x);
        x[i] = r.center[i] + l4 * r.half[i];
        const cplx d = eval(x);
        x[i] = r.center[i];
        s2 += a + b;
        s3 += c + d;
        const double diff = std::abs(a + b - 2.0 * f0 - ratio * (c + d - 2.0 * f0));
        if (diff > best * (1.0 + 1e-12) ||
            (std::abs(diff - best) <= 1e-12 * best && r.half[i] > r.half[axis])) {
            if (diff > best) best = diff;
            axis = i;
        }
    }
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            for (int si = -1; si <= 1; si += 2) {
                for (int sj = -1; sj <= 1; sj += 2) {
                    x[i] = r.center[i] + si * l4 * r.half[i];
                    x[j] = r.center[j] + sj * l4 * r.half[j];
                    s4 += eval(x);
                }
            }
            x[i] = r.center[i];
            x[j] = r.center[j];
        }
    }
    for (std::size_t m = 0; m < (std::size_t{1} << N); ++m) {
        for (std::size_t i = 0; i < N; ++i)
            x[i] = r.center[i] + ((m >> i) & 1u ? l5 : -l5) * r.half[i];
        s5 += eval(x);
    }
    double vol = 1.0;
    for (std::size_t i = 0; i < N; ++i) vol *= 2.0 * r.half[i];
    const cplx r7 = vol * (w1 * f0 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
    const cplx r5 = vol * (e1 * f0 + e2 * s2 + e3 * s3 + e4 * s4);
    r.value = r7;
    r.err = std::abs(r7 - r5);
    r.split_axis = axis;
}

template <std::size_t N, class F>
void apply_rule(F& f, Region<N>& r) {
    if constexpr (N == 1) gk15(f, r);
    else genz_malik<N>(f, r);
}

} // namespace detail

// Adaptive integral of f(const std::array<double,N>&) over [lo, hi].
template <std::size_t N, class F>
QuadratureResult integrate(F&& f, const std::array<double, N>& lo, const std::array<double, N>& hi,
                           const Tolerance& tol) {
    static_assert(N >= 1, "dimension must be positive");
    using R = detail::Region<N>;
    constexpr std::size_t per = detail::rule_points<N>();

    R root;
    for (std::size_t i = 0; i < N; ++i) {
        if (!(lo[i] < hi[i])) throw InvalidParameter("integration box: lower must be < upper");
        root.center[i] = 0.5 * (lo[i] + hi[i]);
        root.half[i] = 0.5 * (hi[i] - lo[i]);
    }
    detail::apply_rule<N>(f, root);
    std::size_t evals = per;
    std::size_t next_id = 1;

    std::vector<R> heap{root};
    detail::RegionOrder<N> order;
    cplx total = root.value;
    double err = root.err;

    auto resum = [&] {
        total = cplx{};
        err = 0.0;
        for (const auto& r : heap) {
            total += r.value;
            err += r.err;
        }
    };
    auto target = [&] { return std::max(tol.abs, tol.rel * std::abs(total)); };

    std::size_t iter = 0;
    while (err > target() && evals + 2 * per <= tol.max_eval) {
        std::pop_heap(heap.begin(), heap.end(), order);
        R worst = heap.back();
        heap.pop_back();
        const std::size_t ax = worst.split_axis;
        R a = worst, b = worst;
        a.half[ax] = b.half[ax] = 0.5 * worst.half[ax];
        a.center[ax] = worst.center[ax] - a.half[ax];
        b.center[ax] = worst.center[ax] + b.half[ax];
        a.id = next_id++;
        b.id = next_id++;
        detail::apply_rule<N>(f, a);
        detail::apply_rule<N>(f, b);
        evals += 2 * per;
        total += a.value + b.value - worst.value;
        err += a.err + b.err - worst.err;
        heap.push_back(a);
        std::push_heap(heap.begin(), heap.end(), order);
        heap.push_back(b);
        std::push_heap(heap.begin(), heap.end(), order);
        if (++iter % 256 == 0) resum();
    }
    resum();
    QuadratureResult out;
    out.value = total;
    out.abs_error = err;
    out.evaluations = evals;
    out.converged = err <= target();
    return out;
}

template <class F>
QuadratureResult integrate_1d(F&& f, double a, double b, const Tolerance& tol) {
    auto g = [&](const std::array<double, 1>& x) -> cplx { return f(x[0]); };
    return integrate<1>(g, {a}, {b}, tol);
}

// PV of f(x)/x over [-W, W]; f is the regular numerator.
template <class F>
QuadratureResult pv_integrate_1d(F&& f, double W, const Tolerance& tol) {
    if (!(W > 0.0)) throw InvalidParameter("pv_integrate_1d: W must be positive");
    auto g = [&](const std::array<double, 1>& x) -> cplx {
        const double t = x[0];
        return (cplx(f(t)) - cplx(f(-t))) / t;
    };
    return integrate<1>(g, {0.0}, {W}, tol);
}

// PV of f(p,q)/(p q) over [-P, P] x [-Q, Q].
template <class F>
QuadratureResult pv_integrate_2d(F&& f, double P, double Q, const Tolerance& tol) {
    if (!(P > 0.0) || !(Q > 0.0)) throw InvalidParameter("pv_integrate_2d: window must be positive");
    auto g = [&](const std::array<double, 2>& x) -> cplx {
        const double p = x[0], q = x[1];
        return (cplx(f(p, q)) - cplx(f(-p, q)) - cplx(f(p, -q)) + cplx(f(-p, -q))) / (p * q);
    };
    return integrate<2>(g, {0.0, 0.0}, {P, Q}, tol);
}

template <class F>
QuadratureResult pv_integrate_2d(F&& f, double W, const Tolerance& tol) {
    return pv_integrate_2d(std::forward<F>(f), W, W, tol);
}

namespace detail {

// One piece of a PV dimension after splitting [l, u]: either the folded
// symmetric core [0, m] or a one-sided remainder carrying a plain 1/x.
struct PvSegment {
    double lo, hi;
    bool fold;
};

inline std::vector<PvSegment> pv_segments(double l, double u) {
    const double m = std::min(-l, u);
    std::vector<PvSegment> s{{0.0, m, true}};
    if (u > m) s.push_back({m, u, false});
    if (-l > m) s.push_back({l, -m, false});
    return s;
}

template <std::size_t N, class F>
QuadratureResult integrate_box_fixed(F& f, const IntegrationBox& box, const Tolerance& tol) {
    std::array<std::vector<PvSegment>, N> segs;
    for (std::size_t i = 0; i < N; ++i) {
        if (box.is_pv(i)) segs[i] = pv_segments(box.lower[i], box.upper[i]);
        else segs[i] = {{box.lower[i], box.upper[i], false}};
    }
    std::array<bool, N> pv{};
    for (std::size_t i = 0; i < N; ++i) pv[i] = box.is_pv(i);

    QuadratureResult total;
    std::array<std::size_t, N> pick{};
    while (true) {
        std::array<double, N> lo, hi;
        std::array<bool, N> fold{};
        for (std::size_t i = 0; i < N; ++i) {
            const auto& s = segs[i][pick[i]];
            lo[i] = s.lo;
            hi[i] = s.hi;
            fold[i] = s.fold;
        }
        auto g = [&](const std::array<double, N>& x) -> cplx {
            // sum over sign patterns of the folded dimensions
            std::size_t nf = 0;
            std::array<std::size_t, N> fi{};
            double denom = 1.0;
            for (std::size_t i = 0; i < N; ++i) {
                if (fold[i]) fi[nf++] = i;
                if (pv[i]) denom *= x[i];
            }
            cplx acc{};
            std::array<double, N> y;
            for (std::size_t m = 0; m < (std::size_t{1} << nf); ++m) {
                y = x;
                double sgn = 1.0;
                for (std::size_t k = 0; k < nf; ++k) {
                    if ((m >> k) & 1u) {
                        y[fi[k]] = -y[fi[k]];
                        sgn = -sgn;
                    }
                }
                acc += sgn * cplx(f(std::span<const double>(y.data(), N)));
            }
            return acc / denom;
        };
        total += integrate<N>(g, lo, hi, tol);
        std::size_t i = 0;
        for (; i < N; ++i) {
            if (++pick[i] < segs[i].size()) break;
            pick[i] = 0;
        }
        if (i == N) break;
    }
    return total;
}

} // namespace detail

// Integral over a runtime box of f(std::span<const double>); PV-flagged
// dimensions receive the 1/x kernel. Supports up to four dimensions.
template <class F>
QuadratureResult integrate_nd(F&& f, const IntegrationBox& box, const Tolerance& tol) {
    box.validate();
    switch (box.dim()) {
    case 1: return detail::integrate_box_fixed<1>(f, box, tol);
    case 2: return detail::integrate_box_fixed<2>(f, box, tol);
    case 3: return detail::integrate_box_fixed<3>(f, box, tol);
    case 4: return detail::integrate_box_fixed<4>(f, box, tol);
    default: throw InvalidParameter("integrate_nd supports 1 to 4 dimensions");
    }
}

} // namespace timeorder::quad
