#pragma once

// Magnus kernels J1, G2a, G2b, J3, K3 and the corrected JSA.
//
// The kernel templates work in tau-scaled detunings and take any coupling
// callable C(xa, xb, xp) -> complex; the ProcessSpec overloads wrap them and
// return grids in absolute units (seconds), the way the kernels are written
// in the continuum theory.
//
// Two treatments of the spectator frequency (w_d in G2a, w_c in G2b, both in
// J3) are offered:
//   Continuum - the spectator runs over the real line. Integration variables
//               are shifted so the pump factors pin a bounded box.
//   Grid      - the spectator is summed over the mode grid with its spacing.
//               These are the exact Magnus terms of the discretized mode
//               system the oracle propagates.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "timeorder/grid.hpp"
#include "timeorder/model.hpp"
#include "timeorder/parallel.hpp"
#include "timeorder/quadrature.hpp"

namespace timeorder {

struct KernelOptions {
    double rel_tol = 1e-6;
    double window = 6.0;       // half-width of pump-pinned variables
    double pv_window = 24.0;   // continuum PV cutoff; sinc tails are not pump-pinned
    std::size_t max_eval = 400'000;
    double abs_floor = 1e-14;  // multiplied by the natural scale |F|^n
    SpectatorMode spectator = SpectatorMode::Continuum;
    unsigned jobs = 1;
};

// Scaled kernel values with per-point error estimates.
struct KernelPoints {
    Eigen::MatrixXcd values;
    Eigen::MatrixXd error;
    std::vector<std::size_t> evals;
    std::vector<char> ok;

    void resize(Eigen::Index r, Eigen::Index c) {
        values = Eigen::MatrixXcd::Zero(r, c);
        error = Eigen::MatrixXd::Zero(r, c);
        evals.assign(static_cast<std::size_t>(r * c), 0);
        ok.assign(static_cast<std::size_t>(r * c), 1);
    }
    void store(Eigen::Index i, Eigen::Index j, const quad::QuadratureResult& q) {
        values(i, j) = q.value;
        error(i, j) = q.abs_error;
        const auto k = static_cast<std::size_t>(i * values.cols() + j);
        evals[k] = q.evaluations;
        ok[k] = q.converged ? 1 : 0;
    }
    std::size_t evaluations() const {
        std::size_t s = 0;
        for (auto e : evals) s += e;
        return s;
    }
    bool converged() const { return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; }); }
};

struct J3Points {
    KernelPoints total;
    Eigen::MatrixXcd product, pv;
};

namespace kernels {

inline quad::Tolerance tolerance(const KernelOptions& o, double scale, int order) {
    return {o.rel_tol, o.abs_floor * std::pow(scale, order), o.max_eval};
}

template <class C>
Eigen::MatrixXcd j1(const C& F, Topology topo, const Axis& A, const Axis& B) {
    Eigen::MatrixXcd J(A.size(), B.size());
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < B.size(); ++j) {
            const double a = A.x[i], b = B.x[j];
            J(i, j) = topo == Topology::Pair ? F(a, b, a + b) : F(a, b, b - a);
        }
    return J;
}

// G2 on the a axis: rows and columns both index A.
template <class C>
KernelPoints g2a(const C& F, Topology topo, const Axis& A, const Axis& B, const KernelOptions& o, double scale) {
    const auto n = static_cast<Eigen::Index>(A.size());
    KernelPoints out;
    out.resize(n, n);
    const auto tol = tolerance(o, scale, 2);
    const double W = o.window;
    parallel_for(static_cast<std::size_t>(n * n), o.jobs, [&](std::size_t k) {
        const Eigen::Index i = static_cast<Eigen::Index>(k) / n, m = static_cast<Eigen::Index>(k) % n;
        const double a = A.x[i], ap = A.x[m];
        quad::QuadratureResult r;
        if (o.spectator == SpectatorMode::Continuum) {
            if (topo == Topology::Pair) {
                // u = x_d + p
                const double u0 = -0.5 * (a + ap);
                auto h = [&](const std::array<double, 2>& v) -> cplx {
                    const double u = v[0], p = v[1];
                    const cplx plus = F(a, u - p, a + u) * std::conj(F(ap, u - p, ap + u));
                    const cplx minus = F(a, u + p, a + u) * std::conj(F(ap, u + p, ap + u));
                    return (plus - minus) / p;
                };
                r = quad::integrate<2>(h, {u0 - W, 0.0}, {u0 + W, o.pv_window}, tol);
            } else {
                // u = x_q + p
                const double u0 = 0.5 * (a + ap);
                auto h = [&](const std::array<double, 2>& v) -> cplx {
                    const double u = v[0], p = v[1];
                    const cplx plus = F(ap, u - p, u - ap) * std::conj(F(a, u - p, u - a));
                    const cplx minus = F(ap, u + p, u - ap) * std::conj(F(a, u + p, u - a));
                    return (plus - minus) / p;
                };
                r = quad::integrate<2>(h, {u0 - W, 0.0}, {u0 + W, o.pv_window}, tol);
            }
        } else {
            for (const double d : B.x) {
                quad::QuadratureResult s;
                if (topo == Topology::Pair) {
                    const double P = std::max(std::abs(a + d), std::abs(ap + d)) + W;
                    s = quad::pv_integrate_1d(
                        [&](double p) { return F(a, d, a + d + p) * std::conj(F(ap, d, ap + d + p)); }, P, tol);
                } else {
                    const double P = std::max(std::abs(d - ap), std::abs(d - a)) + W;
                    s = quad::pv_integrate_1d(
                        [&](double p) { return F(ap, d, d - ap + p) * std::conj(F(a, d, d - a + p)); }, P, tol);
                }
                s.value *= B.dx;
                s.abs_error *= B.dx;
                r += s;
            }
        }
        out.store(i, m, r);
    });
    return out;
}

// G2 on the b axis: rows and columns both index B.
template <class C>
KernelPoints g2b(const C& F, Topology topo, const Axis& A, const Axis& B, const KernelOptions& o, double scale) {
    const auto n = static_cast<Eigen::Index>(B.size());
    KernelPoints out;
    out.resize(n, n);
    const auto tol = tolerance(o, scale, 2);
    const double W = o.window;
    parallel_for(static_cast<std::size_t>(n * n), o.jobs, [&](std::size_t k) {
        const Eigen::Index i = static_cast<Eigen::Index>(k) / n, m = static_cast<Eigen::Index>(k) % n;
        const double b = B.x[i], bp = B.x[m];
        quad::QuadratureResult r;
        if (o.spectator == SpectatorMode::Continuum) {
            const double u0 = -0.5 * (b + bp);
            auto h = [&](const std::array<double, 2>& v) -> cplx {
                const double u = v[0], p = v[1];
                if (topo == Topology::Pair) {
                    // u = x_c + p
                    const cplx plus = F(u - p, b, b + u) * std::conj(F(u - p, bp, bp + u));
                    const cplx minus = F(u + p, b, b + u) * std::conj(F(u + p, bp, bp + u));
                    return (plus - minus) / p;
                }
                // u = p - x_q
                const cplx plus = F(p - u, b, b + u) * std::conj(F(p - u, bp, bp + u));
                const cplx minus = F(-p - u, b, b + u) * std::conj(F(-p - u, bp, bp + u));
                return (minus - plus) / p;
            };
            r = quad::integrate<2>(h, {u0 - W, 0.0}, {u0 + W, o.pv_window}, tol);
        } else {
            for (const double c : A.x) {
                quad::QuadratureResult s;
                if (topo == Topology::Pair) {
                    const double P = std::max(std::abs(b + c), std::abs(bp + c)) + W;
                    s = quad::pv_integrate_1d(
                        [&](double p) { return F(c, b, b + c + p) * std::conj(F(c, bp, bp + c + p)); }, P, tol);
                } else {
                    const double P = std::max(std::abs(b - c), std::abs(bp - c)) + W;
                    s = quad::pv_integrate_1d(
                        [&](double p) { return -F(c, b, b - c + p) * std::conj(F(c, bp, bp - c + p)); }, P, tol);
                }
                s.value *= A.dx;
                s.abs_error *= A.dx;
                r += s;
            }
        }
        out.store(i, m, r);
    });
    return out;
}

// J3 = (+-pi^2/3) * product term + double-PV term; plus sign for pair
// processes, minus for conversion.
template <class C>
J3Points j3(const C& F, Topology topo, const Axis& A, const Axis& B, const KernelOptions& o, double scale) {
    const auto na = static_cast<Eigen::Index>(A.size()), nb = static_cast<Eigen::Index>(B.size());
    J3Points out;
    out.total.resize(na, nb);
    out.product = Eigen::MatrixXcd::Zero(na, nb);
    out.pv = Eigen::MatrixXcd::Zero(na, nb);
    const auto tol = tolerance(o, scale, 3);
    const double W = o.window, Pw = o.pv_window;
    const double sgn = topo == Topology::Pair ? 1.0 : -1.0;
    const double pi2_3 = sgn * std::numbers::pi * std::numbers::pi / 3.0;

    Eigen::MatrixXcd prod_grid;
    if (o.spectator == SpectatorMode::Grid) {
        const Eigen::MatrixXcd J = j1(F, topo, A, B);
        prod_grid = pi2_3 * (J * J.adjoint() * J) * (A.dx * B.dx);
    }

    parallel_for(static_cast<std::size_t>(na * nb), o.jobs, [&](std::size_t k) {
        const Eigen::Index i = static_cast<Eigen::Index>(k) / nb, j = static_cast<Eigen::Index>(k) % nb;
        const double a = A.x[i], b = B.x[j];
        quad::QuadratureResult prod, pv;
        auto continuum = [&](const quad::Tolerance& t) {
            auto tp = t;
            tp.abs /= std::abs(pi2_3);  // prod is scaled afterwards
            if (topo == Topology::Pair) {
                const double c0 = (a - 2.0 * b) / 3.0, d0 = (b - 2.0 * a) / 3.0;
                auto fp = [&](const std::array<double, 2>& v) -> cplx {
                    const double c = v[0], d = v[1];
                    return std::conj(F(c, d, c + d)) * F(a, d, a + d) * F(c, b, b + c);
                };
                prod = quad::integrate<2>(fp, {c0 - W, d0 - W}, {c0 + W, d0 + W}, tp);
                // u = x_d + p, w = x_c + q
                const double u0 = (b - 2.0 * a) / 3.0, w0 = (a - 2.0 * b) / 3.0;
                auto fv = [&](const std::array<double, 4>& v) -> cplx {
                    const double u = v[0], w = v[1], p = v[2], q = v[3];
                    const cplx ap = F(a, u - p, a + u), am = F(a, u + p, a + u);
                    const cplx bq = F(w - q, b, b + w), bm = F(w + q, b, b + w);
                    const cplx s = std::conj(F(w - q, u - p, u + w)) * ap * bq
                                 - std::conj(F(w - q, u + p, u + w)) * am * bq
                                 - std::conj(F(w + q, u - p, u + w)) * ap * bm
                                 + std::conj(F(w + q, u + p, u + w)) * am * bm;
                    return s / (p * q);
                };
                pv = quad::integrate<4>(fv, {u0 - W, w0 - W, 0.0, 0.0}, {u0 + W, w0 + W, Pw, Pw}, t);
            } else {
                const double c0 = (a + 2.0 * b) / 3.0, d0 = (2.0 * a + b) / 3.0;
                auto fp = [&](const std::array<double, 2>& v) -> cplx {
                    const double c = v[0], d = v[1];
                    return std::conj(F(c, d, d - c)) * F(a, d, d - a) * F(c, b, b - c);
                };
                prod = quad::integrate<2>(fp, {c0 - W, d0 - W}, {c0 + W, d0 + W}, tp);
                // u = x_d - q, w = p - x_c
                const double u0 = (2.0 * a + b) / 3.0, w0 = -(a + 2.0 * b) / 3.0;
                auto fv = [&](const std::array<double, 4>& v) -> cplx {
                    const double u = v[0], w = v[1], p = v[2], q = v[3];
                    const cplx aq = F(a, u + q, u - a), am = F(a, u - q, u - a);
                    const cplx bp = F(p - w, b, b + w), bm = F(-p - w, b, b + w);
                    const cplx s = std::conj(F(p - w, u + q, u + w)) * aq * bp
                                 - std::conj(F(-p - w, u + q, u + w)) * aq * bm
                                 - std::conj(F(p - w, u - q, u + w)) * am * bp
                                 + std::conj(F(-p - w, u - q, u + w)) * am * bm;
                    return s / (p * q);
                };
                pv = quad::integrate<4>(fv, {u0 - W, w0 - W, 0.0, 0.0}, {u0 + W, w0 + W, Pw, Pw}, t);
            }
            prod.value *= pi2_3;
            prod.abs_error *= std::abs(pi2_3);
        };
        if (o.spectator == SpectatorMode::Continuum) {
            auto t1 = tol;
            t1.abs = 0.5 * tol.abs;  // the two parts share the floor
            continuum(t1);
            // the parts may cancel and their errors add; tighten both so the sum meets rel_tol
            const double tot = std::abs(prod.value + pv.value), sum = std::abs(prod.value) + std::abs(pv.value);
            const double target = std::max(tol.rel * tot, tol.abs);
            if (prod.abs_error + pv.abs_error > target && tot > 0.0) {
                auto t2 = t1;
                t2.rel = 0.5 * tol.rel * tot / sum;
                const std::size_t first = prod.evaluations + pv.evaluations;
                continuum(t2);
                pv.evaluations += first;
            }
        } else {
            prod.value = prod_grid(i, j);
            prod.evaluations = 1;
            const double w = A.dx * B.dx;
            for (const double c : A.x) {
                for (const double d : B.x) {
                    quad::QuadratureResult s;
                    if (topo == Topology::Pair) {
                        const double P = std::abs(a + d) + W, Q = std::abs(b + c) + W;
                        s = quad::pv_integrate_2d(
                            [&](double p, double q) {
                                return std::conj(F(c, d, c + d + p + q)) * F(a, d, a + d + p) * F(c, b, b + c + q);
                            },
                            P, Q, tol);
                    } else {
                        const double P = std::abs(c - b) + W, Q = std::abs(d - a) + W;
                        s = quad::pv_integrate_2d(
                            [&](double p, double q) {
                                return std::conj(F(c, d, d - c + p - q)) * F(a, d, d - a - q) * F(c, b, b - c + p);
                            },
                            P, Q, tol);
                    }
                    s.value *= w;
                    s.abs_error *= w;
                    pv += s;
                }
            }
        }
        out.product(i, j) = prod.value;
        out.pv(i, j) = pv.value;
        quad::QuadratureResult tot = prod;
        tot += pv;
        if (o.spectator == SpectatorMode::Continuum)
            tot.converged = tot.abs_error <= std::max(tol.rel * std::abs(tot.value), tol.abs);
        out.total.store(i, j, tot);
    });
    return out;
}

} // namespace kernels

// ---- ProcessSpec-level API (absolute units) ----

namespace detail {

inline Axis axis_a(const ProcessSpec& s, const FrequencyGrid& g) {
    return scaled_axis(g, s.dispersion.a.nu, s.pump.tau);
}
inline Axis axis_b(const ProcessSpec& s, const FrequencyGrid& g) {
    return scaled_axis(g, s.dispersion.b.nu, s.pump.tau);
}

inline ComplexGrid2D make_grid(const ProcessSpec& s, const FrequencyGrid& r, const FrequencyGrid& c,
                               const char* name, const KernelOptions* o) {
    ComplexGrid2D g;
    g.rows = r;
    g.cols = c;
    g.meta.kernel = name;
    g.meta.topology = topology_of(s.kind);
    g.meta.epsilon = s.epsilon;
    g.meta.tau = s.pump.tau;
    if (o) {
        g.meta.rel_tol = o->rel_tol;
        g.meta.window = o->window;
        g.meta.pv_window = o->pv_window;
        g.meta.spectator = o->spectator;
    }
    return g;
}

inline void fill(ComplexGrid2D& g, const KernelPoints& k, double tau) {
    g.values = tau * k.values;
    g.meta.error = tau * k.error;
    g.meta.worst_error = g.meta.error.size() ? g.meta.error.maxCoeff() : 0.0;
    g.meta.converged = k.converged();
    g.meta.evaluations = k.evaluations();
}

} // namespace detail

inline ComplexGrid2D j1_grid(const ProcessSpec& s, const FrequencyGrid& ga, const FrequencyGrid& gb) {
    validate(s);
    ga.validate();
    gb.validate();
    const auto F = make_scaled_coupling(s);
    auto g = detail::make_grid(s, ga, gb, "J1", nullptr);
    g.values = s.pump.tau * kernels::j1(F, topology_of(s.kind), detail::axis_a(s, ga), detail::axis_b(s, gb));
    g.meta.error = Eigen::MatrixXd::Zero(g.values.rows(), g.values.cols());
    return g;
}

inline std::pair<ComplexGrid2D, ComplexGrid2D> g2_grids(const ProcessSpec& s, const FrequencyGrid& ga,
                                                        const FrequencyGrid& gb, const KernelOptions& o = {}) {
    validate(s);
    ga.validate();
    gb.validate();
    const auto F = make_scaled_coupling(s);
    const auto A = detail::axis_a(s, ga), B = detail::axis_b(s, gb);
    const auto topo = topology_of(s.kind);
    auto a = detail::make_grid(s, ga, ga, "G2a", &o);
    auto b = detail::make_grid(s, gb, gb, "G2b", &o);
    detail::fill(a, kernels::g2a(F, topo, A, B, o, F.scale()), s.pump.tau);
    detail::fill(b, kernels::g2b(F, topo, A, B, o, F.scale()), s.pump.tau);
    return {std::move(a), std::move(b)};
}

inline ComplexGrid2D j3_grid(const ProcessSpec& s, const FrequencyGrid& ga, const FrequencyGrid& gb,
                             const KernelOptions& o = {}) {
    validate(s);
    ga.validate();
    gb.validate();
    const auto F = make_scaled_coupling(s);
    auto g = detail::make_grid(s, ga, gb, "J3", &o);
    const auto r = kernels::j3(F, topology_of(s.kind), detail::axis_a(s, ga), detail::axis_b(s, gb), o, F.scale());
    detail::fill(g, r.total, s.pump.tau);
    g.meta.parts["product"] = s.pump.tau * r.product;
    g.meta.parts["pv"] = s.pump.tau * r.pv;
    return g;
}

// K3 from the grids themselves: the intermediate frequency integral is the
// plain matrix product times the grid spacing.
//   pair:       K3 = pi (G2a J1 d_a + J1 G2b^T d_b)
//   conversion: K3 = pi (J1 G2b^T d_b - G2a^T J1 d_a)
inline ComplexGrid2D k3_grid(const ComplexGrid2D& j1, const ComplexGrid2D& g2a, const ComplexGrid2D& g2b) {
    j1.check();
    g2a.check();
    g2b.check();
    require_same(g2a.rows, j1.rows, "G2a rows vs J1 rows");
    require_same(g2a.cols, j1.rows, "G2a cols vs J1 rows");
    require_same(g2b.rows, j1.cols, "G2b rows vs J1 cols");
    require_same(g2b.cols, j1.cols, "G2b cols vs J1 cols");
    const double da = j1.rows.spacing(), db = j1.cols.spacing();
    ComplexGrid2D k;
    k.rows = j1.rows;
    k.cols = j1.cols;
    k.meta = g2a.meta;
    k.meta.kernel = "K3";
    k.meta.topology = j1.meta.topology;
    k.meta.error.resize(0, 0);
    k.meta.parts.clear();
    k.meta.evaluations = 0;
    k.meta.worst_error = 0.0;
    const double pi = std::numbers::pi;
    if (j1.meta.topology == Topology::Pair)
        k.values = pi * (g2a.values * j1.values * da + j1.values * g2b.values.transpose() * db);
    else
        k.values = pi * (j1.values * g2b.values.transpose() * db - g2a.values.transpose() * j1.values * da);
    return k;
}

// J = J1 + J3 - i K3
inline ComplexGrid2D jsa_corrected(const ComplexGrid2D& j1, const ComplexGrid2D& j3, const ComplexGrid2D& k3) {
    j1.check();
    j3.check();
    k3.check();
    require_same(j1.rows, j3.rows, "J3 rows");
    require_same(j1.cols, j3.cols, "J3 cols");
    require_same(j1.rows, k3.rows, "K3 rows");
    require_same(j1.cols, k3.cols, "K3 cols");
    ComplexGrid2D J;
    J.rows = j1.rows;
    J.cols = j1.cols;
    J.meta = j3.meta;
    J.meta.kernel = "J";
    J.meta.parts.clear();
    J.values = j1.values + j3.values - cplx(0.0, 1.0) * k3.values;
    const double m1 = j1.values.cwiseAbs().maxCoeff();
    J.meta.max_correction_ratio = m1 > 0.0 ? (J.values - j1.values).cwiseAbs().maxCoeff() / m1 : 0.0;
    return J;
}

} // namespace timeorder
