#pragma once

// Ground truth for the Magnus machinery: the discretized quadratic
// Hamiltonian
//     H(t) = sum_ij sqrt(d_a d_b) f_ij(t) a_i^dag b_j^dag + h.c.   (pair)
//     f_ij(t) = int dx_p F(x_i, x_j, x_p) exp(i (x_i + x_j - x_p) t)
// propagated in the Heisenberg picture on the doubled space with classic
// fixed-step RK4, dM/dt = -i Mh(t) M, M(-T) = I. Time is in units of tau.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "timeorder/disentangle.hpp"
#include "timeorder/grid.hpp"
#include "timeorder/model.hpp"
#include "timeorder/parallel.hpp"
#include "timeorder/quadrature.hpp"

namespace timeorder {

struct PropagationConfig {
    double time_span = 16.0;   // integrate over [-T, T]
    std::size_t steps = 4000;
    int order = 4;             // only classic RK4 is provided
    FrequencyGrid ga, gb;
    double pump_window = 8.0;  // x_p half-width of the coupling integral
    double rel_tol = 1e-12;
    unsigned jobs = 1;

    void validate() const {
        if (!(time_span >= 6.0)) throw ValidationError("oracle.time_span must be at least 6");
        if (steps < 100) throw ValidationError("oracle.steps must be at least 100");
        if (order != 4) throw ValidationError("oracle.order must be 4");
        if (!(pump_window > 0.0)) throw ValidationError("oracle.pump_window must be positive");
        ga.validate();
        gb.validate();
    }
};

namespace oracle {

// sqrt(dx_a dx_b) f_ij(t), the instantaneous coupling matrix.
template <class C>
Eigen::MatrixXcd coupling_matrix(const C& F, Topology topo, const Axis& A, const Axis& B, double t, double Wp,
                                 const quad::Tolerance& tol) {
    Eigen::MatrixXcd S(A.size(), B.size());
    const double w = std::sqrt(A.dx * B.dx);
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t j = 0; j < B.size(); ++j) {
            const double a = A.x[i], b = B.x[j];
            const double outer = topo == Topology::Pair ? a + b : b - a;
            const auto r = quad::integrate_1d(
                [&](double xp) { return F(a, b, xp) * std::polar(1.0, -xp * t); }, -Wp, Wp, tol);
            S(i, j) = w * std::polar(1.0, outer * t) * r.value;
        }
    }
    return S;
}

inline Eigen::MatrixXcd hamiltonian_block(const Eigen::MatrixXcd& S, Topology topo) {
    const auto na = S.rows(), nb = S.cols();
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(na + nb, na + nb);
    if (topo == Topology::Pair) {
        M.topRightCorner(na, nb) = S;
        M.bottomLeftCorner(nb, na) = -S.adjoint();
    } else {
        M.topRightCorner(na, nb) = S.conjugate();
        M.bottomLeftCorner(nb, na) = S.transpose();
    }
    return M;
}

// Coupling matrices on the time nodes t_k = -T + k T/steps, k = 0..2 steps:
// everything an RK4 run with `steps` steps (or steps/2^m) needs.
struct CouplingTable {
    Topology topology = Topology::Pair;
    double T = 0.0;
    std::size_t steps = 0;
    Eigen::Index na = 0, nb = 0;
    std::vector<Eigen::MatrixXcd> S;
};

template <class C>
CouplingTable build_table(const C& F, Topology topo, const Axis& A, const Axis& B, const PropagationConfig& cfg,
                          double scale) {
    CouplingTable tab;
    tab.topology = topo;
    tab.T = cfg.time_span;
    tab.steps = cfg.steps;
    tab.na = static_cast<Eigen::Index>(A.size());
    tab.nb = static_cast<Eigen::Index>(B.size());
    const std::size_t nodes = 2 * cfg.steps + 1;
    tab.S.resize(nodes);
    const double dt = cfg.time_span / static_cast<double>(cfg.steps);
    const quad::Tolerance tol{cfg.rel_tol, 1e-16 * scale, 200'000};
    parallel_for(nodes, cfg.jobs, [&](std::size_t k) {
        const double t = -cfg.time_span + static_cast<double>(k) * dt;
        tab.S[k] = coupling_matrix(F, topo, A, B, t, cfg.pump_window, tol);
    });
    return tab;
}

// RK4 using every `stride`-th table step; couplings are multiplied by lambda.
inline BogoliubovTransform propagate(const CouplingTable& tab, std::size_t stride = 1, double lambda = 1.0) {
    if (stride == 0 || tab.steps % stride != 0) throw InvalidParameter("stride must divide the table step count");
    const std::size_t steps = tab.steps / stride;
    const double h = 2.0 * tab.T / static_cast<double>(steps);
    const Eigen::Index n = tab.na + tab.nb;
    const cplx mi(0.0, -1.0);
    auto B = [&](std::size_t node) -> Eigen::MatrixXcd { return (mi * lambda) * hamiltonian_block(tab.S[node], tab.topology); };
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t k0 = 2 * s * stride;
        const Eigen::MatrixXcd B0 = B(k0), B1 = B(k0 + stride), B2 = B(k0 + 2 * stride);
        const Eigen::MatrixXcd k1 = B0 * M;
        const Eigen::MatrixXcd k2 = B1 * (M + 0.5 * h * k1);
        const Eigen::MatrixXcd k3 = B1 * (M + 0.5 * h * k2);
        const Eigen::MatrixXcd k4 = B2 * (M + h * k3);
        M += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    BogoliubovTransform t{M, tab.na, tab.nb, tab.topology, "rk4"};
    if (!M.allFinite()) throw NumericalInstability("propagation diverged");
    return t;
}

} // namespace oracle

// The instantaneous coupling matrix sqrt(d_a d_b) f(t), t in units of tau.
inline Eigen::MatrixXcd hamiltonian_coupling_matrix(const ProcessSpec& s, const FrequencyGrid& ga,
                                                    const FrequencyGrid& gb, double t, double pump_window = 8.0,
                                                    double rel_tol = 1e-12) {
    validate(s);
    const auto F = make_scaled_coupling(s);
    const auto A = scaled_axis(ga, s.dispersion.a.nu, s.pump.tau);
    const auto B = scaled_axis(gb, s.dispersion.b.nu, s.pump.tau);
    return oracle::coupling_matrix(F, topology_of(s.kind), A, B, t, pump_window,
                                   quad::Tolerance{rel_tol, 1e-16 * F.scale(), 200'000});
}

inline oracle::CouplingTable coupling_table(const ProcessSpec& s, const PropagationConfig& cfg) {
    validate(s);
    cfg.validate();
    const auto F = make_scaled_coupling(s);
    const auto A = scaled_axis(cfg.ga, s.dispersion.a.nu, s.pump.tau);
    const auto B = scaled_axis(cfg.gb, s.dispersion.b.nu, s.pump.tau);
    return oracle::build_table(F, topology_of(s.kind), A, B, cfg, F.scale());
}

inline BogoliubovTransform exact_propagate(const ProcessSpec& s, const PropagationConfig& cfg) {
    auto t = oracle::propagate(coupling_table(s, cfg));
    if (t.pseudo_unitarity_residual() > 1e-6)
        throw NumericalInstability("exact propagation lost pseudo-unitarity; increase oracle.steps");
    return t;
}

inline BogoliubovTransform taylor_propagate(const DiscretizedGenerator& omega1) {
    if (parity_of(omega1) == Parity::Conversion || parity_of(omega1) == Parity::Mixed)
        throw ParityViolation("taylor_propagate expects a squeeze-only first-order generator");
    return exponentiate(omega1, "exp(Omega1)");
}

struct TransformComparison {
    double frobenius = 0.0;
    double max_abs = 0.0;
    std::array<double, 4> block_frobenius{};  // A, B, C, D
    std::array<double, 4> block_max{};
    double residual_exact = 0.0;
    double residual_approx = 0.0;
};

inline TransformComparison compare_transforms(const BogoliubovTransform& exact, const BogoliubovTransform& approx) {
    if (exact.na != approx.na || exact.nb != approx.nb || exact.topology != approx.topology ||
        exact.matrix.rows() != approx.matrix.rows())
        throw ShapeMismatch("transforms have different shapes");
    const Eigen::MatrixXcd D = exact.matrix - approx.matrix;
    TransformComparison c;
    c.frobenius = D.norm();
    c.max_abs = D.cwiseAbs().maxCoeff();
    const auto na = exact.na, nb = exact.nb;
    const std::array<Eigen::MatrixXcd, 4> blocks = {D.topLeftCorner(na, na), D.topRightCorner(na, nb),
                                                    D.bottomLeftCorner(nb, na), D.bottomRightCorner(nb, nb)};
    for (std::size_t k = 0; k < 4; ++k) {
        c.block_frobenius[k] = blocks[k].norm();
        c.block_max[k] = blocks[k].size() ? blocks[k].cwiseAbs().maxCoeff() : 0.0;
    }
    c.residual_exact = exact.pseudo_unitarity_residual();
    c.residual_approx = approx.pseudo_unitarity_residual();
    return c;
}

struct LogGenerator {
    DiscretizedGenerator squeeze;  // odd Magnus orders
    DiscretizedGenerator fc;       // even Magnus orders
    DiscretizedGenerator total() const { return squeeze + fc; }
};

// Principal matrix logarithm mapped back to generator form.
inline LogGenerator extract_log_generator(const BogoliubovTransform& t) {
    const auto n = t.matrix.rows();
    const Eigen::MatrixXcd D = t.matrix - Eigen::MatrixXcd::Identity(n, n);
    const double dist = Eigen::JacobiSVD<Eigen::MatrixXcd>(D).singularValues()(0);
    if (!(dist < 1.0)) throw LogBranchFailure("transform too far from identity for the principal logarithm");
    const Eigen::MatrixXcd L = t.matrix.log();
    const auto g = from_doubled(L, t.topology, t.na, t.nb);
    return {squeeze_part(g), fc_part(g)};
}

} // namespace timeorder
