#pragma once

// Quadratic generators in matrix form, their commutator algebra on the
// doubled mode space, and the squeeze x frequency-conversion factorization.
//
// A generator is
//     Omega = -2 pi i [ sum S_ij a_i^dag b_j^dag + h.c. + sum A_ik a_i^dag a_k + sum B_jl b_j^dag b_l ]
// for pair topology, and with S_ij a_i b_j^dag + h.c. for conversion. S, A, B
// carry the grid measure (S = J sqrt(d_a d_b), A = G2a d_a, B = G2b d_b).
//
// Doubled-space images (Heisenberg action on v):
//     pair, v = (a; b^dag):   L = -2 pi i [[A, S], [-S^dag, -B^T]]
//     conversion, v = (a; b): L = -2 pi i [[A, conj(S)], [S^T, B]]
// L respects brackets, L([X,Y]) = [L(X), L(Y)], and exp(X) exp(Y) maps to
// exp(L(X)) exp(L(Y)).

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "timeorder/errors.hpp"
#include "timeorder/grid.hpp"
#include "timeorder/model.hpp"

namespace timeorder {

struct DiscretizedGenerator {
    Topology topology = Topology::Pair;
    Eigen::MatrixXcd squeeze;  // N_a x N_b (conversion: the a -> b coefficients)
    Eigen::MatrixXcd fc_a;     // N_a x N_a
    Eigen::MatrixXcd fc_b;     // N_b x N_b

    static DiscretizedGenerator zero(Topology t, Eigen::Index na, Eigen::Index nb) {
        return {t, Eigen::MatrixXcd::Zero(na, nb), Eigen::MatrixXcd::Zero(na, na), Eigen::MatrixXcd::Zero(nb, nb)};
    }
    Eigen::Index na() const { return squeeze.rows(); }
    Eigen::Index nb() const { return squeeze.cols(); }

    double squeeze_norm() const { return squeeze.norm(); }
    double fc_norm() const { return std::sqrt(fc_a.squaredNorm() + fc_b.squaredNorm()); }
    double norm() const { return std::sqrt(squeeze.squaredNorm() + fc_a.squaredNorm() + fc_b.squaredNorm()); }

    bool same_shape(const DiscretizedGenerator& o) const {
        return topology == o.topology && na() == o.na() && nb() == o.nb();
    }
    void check_shape() const {
        if (fc_a.rows() != na() || fc_a.cols() != na() || fc_b.rows() != nb() || fc_b.cols() != nb())
            throw ShapeMismatch("generator blocks have inconsistent sizes");
    }
};

inline void require_same_shape(const DiscretizedGenerator& x, const DiscretizedGenerator& y) {
    if (!x.same_shape(y)) throw GridMismatch("generators have different shapes or topologies");
}

inline DiscretizedGenerator operator+(const DiscretizedGenerator& x, const DiscretizedGenerator& y) {
    require_same_shape(x, y);
    return {x.topology, x.squeeze + y.squeeze, x.fc_a + y.fc_a, x.fc_b + y.fc_b};
}
inline DiscretizedGenerator operator-(const DiscretizedGenerator& x, const DiscretizedGenerator& y) {
    require_same_shape(x, y);
    return {x.topology, x.squeeze - y.squeeze, x.fc_a - y.fc_a, x.fc_b - y.fc_b};
}
inline DiscretizedGenerator operator*(double s, const DiscretizedGenerator& x) {
    return {x.topology, s * x.squeeze, s * x.fc_a, s * x.fc_b};
}

inline DiscretizedGenerator squeeze_part(const DiscretizedGenerator& x) {
    auto z = DiscretizedGenerator::zero(x.topology, x.na(), x.nb());
    z.squeeze = x.squeeze;
    return z;
}
inline DiscretizedGenerator fc_part(const DiscretizedGenerator& x) {
    auto z = DiscretizedGenerator::zero(x.topology, x.na(), x.nb());
    z.fc_a = x.fc_a;
    z.fc_b = x.fc_b;
    return z;
}

inline Eigen::MatrixXcd doubled_matrix(const DiscretizedGenerator& g) {
    g.check_shape();
    const Eigen::Index na = g.na(), nb = g.nb();
    Eigen::MatrixXcd M(na + nb, na + nb);
    M.topLeftCorner(na, na) = g.fc_a;
    if (g.topology == Topology::Pair) {
        M.topRightCorner(na, nb) = g.squeeze;
        M.bottomLeftCorner(nb, na) = -g.squeeze.adjoint();
        M.bottomRightCorner(nb, nb) = -g.fc_b.transpose();
    } else {
        M.topRightCorner(na, nb) = g.squeeze.conjugate();
        M.bottomLeftCorner(nb, na) = g.squeeze.transpose();
        M.bottomRightCorner(nb, nb) = g.fc_b;
    }
    return cplx(0.0, -2.0 * std::numbers::pi) * M;
}

// Inverse of doubled_matrix on its image. The redundant lower-left block is
// averaged with its partner so round-off stays symmetric.
inline DiscretizedGenerator from_doubled(const Eigen::MatrixXcd& L, Topology t, Eigen::Index na, Eigen::Index nb) {
    if (L.rows() != na + nb || L.cols() != na + nb) throw ShapeMismatch("doubled matrix has the wrong size");
    const Eigen::MatrixXcd M = L * cplx(0.0, 1.0 / (2.0 * std::numbers::pi));
    DiscretizedGenerator g;
    g.topology = t;
    g.fc_a = M.topLeftCorner(na, na);
    if (t == Topology::Pair) {
        g.squeeze = 0.5 * (M.topRightCorner(na, nb) - M.bottomLeftCorner(nb, na).adjoint());
        g.fc_b = -M.bottomRightCorner(nb, nb).transpose();
    } else {
        g.squeeze = 0.5 * (M.topRightCorner(na, nb).conjugate() + M.bottomLeftCorner(nb, na).transpose());
        g.fc_b = M.bottomRightCorner(nb, nb);
    }
    return g;
}

// ---- Bogoliubov transforms ----

struct BogoliubovTransform {
    Eigen::MatrixXcd matrix;  // (N_a + N_b) square, acting on v
    Eigen::Index na = 0, nb = 0;
    Topology topology = Topology::Pair;
    std::string provenance;

    static BogoliubovTransform identity(Topology t, Eigen::Index na, Eigen::Index nb, std::string why = "identity") {
        return {Eigen::MatrixXcd::Identity(na + nb, na + nb), na, nb, t, std::move(why)};
    }

    Eigen::MatrixXcd A() const { return matrix.topLeftCorner(na, na); }
    Eigen::MatrixXcd B() const { return matrix.topRightCorner(na, nb); }
    Eigen::MatrixXcd C() const { return matrix.bottomLeftCorner(nb, na); }
    Eigen::MatrixXcd D() const { return matrix.bottomRightCorner(nb, nb); }

    Eigen::VectorXd metric() const {
        Eigen::VectorXd k = Eigen::VectorXd::Ones(na + nb);
        if (topology == Topology::Pair) k.tail(nb).setConstant(-1.0);
        return k;
    }

    // max |M K M^dag - K| relative to the largest squared row norm of M
    double pseudo_unitarity_residual() const {
        const Eigen::VectorXd k = metric();
        const Eigen::MatrixXcd R = matrix * k.asDiagonal() * matrix.adjoint() - Eigen::MatrixXcd(k.asDiagonal());
        const double scale = std::max(1.0, matrix.rowwise().squaredNorm().maxCoeff());
        return R.cwiseAbs().maxCoeff() / scale;
    }
};

inline BogoliubovTransform operator*(const BogoliubovTransform& x, const BogoliubovTransform& y) {
    if (x.na != y.na || x.nb != y.nb || x.topology != y.topology)
        throw ShapeMismatch("transforms have different shapes");
    return {x.matrix * y.matrix, x.na, x.nb, x.topology, x.provenance + " * " + y.provenance};
}

inline BogoliubovTransform exponentiate(const DiscretizedGenerator& g, const std::string& provenance = "exp") {
    const Eigen::MatrixXcd L = doubled_matrix(g);
    BogoliubovTransform t{L.exp(), g.na(), g.nb(), g.topology, provenance};
    if (!t.matrix.allFinite()) throw NumericalInstability("matrix exponential overflowed");
    const double r = t.pseudo_unitarity_residual();
    if (r > 1e-8) throw NumericalInstability("pseudo-unitarity residual " + std::to_string(r) + " after exponentiation");
    return t;
}

// exp(X) exp(Y)
inline BogoliubovTransform exponentiate_generator(const DiscretizedGenerator& x, const DiscretizedGenerator& y) {
    require_same_shape(x, y);
    return exponentiate(x, "exp(X)") * exponentiate(y, "exp(Y)");
}

// ---- commutator algebra ----

enum class Parity { Zero, Squeeze, Conversion, Mixed };

inline Parity parity_of(const DiscretizedGenerator& g, double rel = 1e-12) {
    const double s = g.squeeze_norm(), f = g.fc_norm(), n = std::max(s, f);
    if (n == 0.0) return Parity::Zero;
    if (f <= rel * n) return Parity::Squeeze;
    if (s <= rel * n) return Parity::Conversion;
    return Parity::Mixed;
}

// [x, y] = x y - y x. When both inputs have definite parity the result's
// parity is forced (squeeze x squeeze -> fc, fc x fc -> fc, squeeze x fc ->
// squeeze); a forbidden part above round-off raises ParityViolation.
inline DiscretizedGenerator commutator_bracket(const DiscretizedGenerator& x, const DiscretizedGenerator& y) {
    require_same_shape(x, y);
    const Eigen::MatrixXcd Lx = doubled_matrix(x), Ly = doubled_matrix(y);
    const Eigen::MatrixXcd Lc = Lx * Ly - Ly * Lx;
    DiscretizedGenerator c = from_doubled(Lc, x.topology, x.na(), x.nb());
    const Parity px = parity_of(x), py = parity_of(y);
    if (px == Parity::Zero || py == Parity::Zero) return DiscretizedGenerator::zero(x.topology, x.na(), x.nb());
    if (px == Parity::Mixed || py == Parity::Mixed) return c;
    const bool expect_squeeze = (px == Parity::Squeeze) != (py == Parity::Squeeze);
    const double bound = 1e-12 * std::max(1.0, 2.0 * (2.0 * std::numbers::pi) * x.norm() * y.norm());
    if (expect_squeeze) {
        if (c.fc_norm() > bound) throw ParityViolation("bracket of opposite parities produced a conversion part");
        c.fc_a.setZero();
        c.fc_b.setZero();
    } else {
        if (c.squeeze_norm() > bound) throw ParityViolation("bracket of equal parities produced a squeeze part");
        c.squeeze.setZero();
    }
    return c;
}

// Omega_1, Omega_2, Omega_3 from kernel grids (absolute units).
inline std::array<DiscretizedGenerator, 3> build_generators(const ComplexGrid2D& j1, const ComplexGrid2D& g2a,
                                                            const ComplexGrid2D& g2b, const ComplexGrid2D& j3) {
    j1.check();
    g2a.check();
    g2b.check();
    j3.check();
    require_same(g2a.rows, j1.rows, "G2a vs J1 rows");
    require_same(g2a.cols, j1.rows, "G2a vs J1 rows");
    require_same(g2b.rows, j1.cols, "G2b vs J1 cols");
    require_same(g2b.cols, j1.cols, "G2b vs J1 cols");
    require_same(j3.rows, j1.rows, "J3 vs J1 rows");
    require_same(j3.cols, j1.cols, "J3 vs J1 cols");
    const auto t = j1.meta.topology;
    const auto na = j1.values.rows(), nb = j1.values.cols();
    const double da = j1.rows.spacing(), db = j1.cols.spacing(), w = std::sqrt(da * db);
    auto o1 = DiscretizedGenerator::zero(t, na, nb);
    auto o2 = o1, o3 = o1;
    o1.squeeze = j1.values * w;
    o2.fc_a = g2a.values * da;
    o2.fc_b = g2b.values * db;
    o3.squeeze = j3.values * w;
    return {o1, o2, o3};
}

inline void require_parity(const DiscretizedGenerator& g, Parity want, const char* name) {
    const Parity p = parity_of(g);
    if (p != Parity::Zero && p != want) throw ParityViolation(std::string(name) + " has the wrong parity");
}

struct Factorization {
    DiscretizedGenerator X;  // squeeze generator, U_sq = exp(X)
    DiscretizedGenerator Y;  // conversion generator, U_fc = exp(Y)
};

// U = exp(X) exp(Y) with X = O1 + O3 - [O1,O2]/2, Y = O2.
inline Factorization factorize_third_order(const DiscretizedGenerator& o1, const DiscretizedGenerator& o2,
                                           const DiscretizedGenerator& o3) {
    require_same_shape(o1, o2);
    require_same_shape(o1, o3);
    require_parity(o1, Parity::Squeeze, "Omega1");
    require_parity(o2, Parity::Conversion, "Omega2");
    require_parity(o3, Parity::Squeeze, "Omega3");
    Factorization f{o1 + o3 - 0.5 * commutator_bracket(o1, o2), o2};
    if (f.X.fc_norm() > 1e-12 * std::max(1.0, f.X.norm())) throw ParityViolation("X acquired a conversion part");
    return f;
}

// Fifth-order split, from BCH with X odd and Y even:
//   Y = O2 + O4 - [O1,[O1,O2]]/12
//   X = O1 + O3 - [O1,O2]/2 + O5 - [O1,O4]/2 - [O3,O2]/2
//       + [O2,[O2,O1]]/6 + [O1,[O1,[O1,O2]]]/24
inline Factorization fifth_order_combination(const DiscretizedGenerator& o1, const DiscretizedGenerator& o2,
                                             const DiscretizedGenerator& o3, const DiscretizedGenerator& o4,
                                             const DiscretizedGenerator& o5) {
    require_same_shape(o1, o2);
    require_same_shape(o1, o3);
    require_same_shape(o1, o4);
    require_same_shape(o1, o5);
    require_parity(o1, Parity::Squeeze, "Omega1");
    require_parity(o2, Parity::Conversion, "Omega2");
    require_parity(o3, Parity::Squeeze, "Omega3");
    require_parity(o4, Parity::Conversion, "Omega4");
    require_parity(o5, Parity::Squeeze, "Omega5");
    auto br = [](const DiscretizedGenerator& x, const DiscretizedGenerator& y) { return commutator_bracket(x, y); };
    const auto c12 = br(o1, o2);
    const auto c1_12 = br(o1, c12);
    Factorization f;
    f.Y = o2 + o4 - (1.0 / 12.0) * c1_12;
    f.X = o1 + o3 - 0.5 * c12 + o5 - 0.5 * br(o1, o4) - 0.5 * br(o3, o2) + (1.0 / 6.0) * br(o2, br(o2, o1)) +
          (1.0 / 24.0) * br(o1, c1_12);
    if (f.X.fc_norm() > 1e-12 * std::max(1.0, f.X.norm())) throw ParityViolation("X acquired a conversion part");
    if (f.Y.squeeze_norm() > 1e-12 * std::max(1.0, f.Y.norm())) throw ParityViolation("Y acquired a squeeze part");
    return f;
}

// Seed reshaping by the conversion part: f <- f - 2 pi i (G2 f) d.
inline std::pair<Eigen::VectorXcd, Eigen::VectorXcd> seed_reshape(const Eigen::VectorXcd& fa, const Eigen::VectorXcd& fb,
                                                                  const ComplexGrid2D& g2a, const ComplexGrid2D& g2b) {
    g2a.check();
    g2b.check();
    if (fa.size() != g2a.values.cols() || fb.size() != g2b.values.cols() || g2a.values.rows() != g2a.values.cols() ||
        g2b.values.rows() != g2b.values.cols())
        throw GridMismatch("seed length does not match its G2 grid");
    const cplx k(0.0, -2.0 * std::numbers::pi);
    return {fa + k * (g2a.values * fa) * g2a.cols.spacing(), fb + k * (g2b.values * fb) * g2b.cols.spacing()};
}

} // namespace timeorder
