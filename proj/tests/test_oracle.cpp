#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "timeorder/magnus.hpp"
#include "timeorder/oracle.hpp"

using namespace timeorder;
using Catch::Approx;

TEST_CASE("broad phase matching coupling has a closed form", "[oracle]") {
    // f_ij(t) = -eps sqrt(dxa dxb) exp(i (a + b) t - t^2/4)
    const auto s = fixtures::spdc(0.4, PhaseMatchingShape::Broad);
    const auto ga = fixtures::grid_a(s, 3, 1.5), gb = fixtures::grid_b(s, 4, 1.5);
    const auto A = scaled_axis(ga, s.dispersion.a.nu, s.pump.tau), B = scaled_axis(gb, s.dispersion.b.nu, s.pump.tau);
    const double peak = 0.4 * std::sqrt(A.dx * B.dx);
    for (double t : {-7.0, -1.3, 0.0, 2.5, 9.0}) {
        const auto S = hamiltonian_coupling_matrix(s, ga, gb, t);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 4; ++j) {
                const cplx want = -0.4 * std::sqrt(A.dx * B.dx) *
                                  std::exp(cplx(-t * t / 4.0, (A.x[static_cast<std::size_t>(i)] + B.x[static_cast<std::size_t>(j)]) * t));
                CHECK(std::abs(S(i, j) - want) <= 1e-8 * peak);
            }
    }
}

TEST_CASE("RK4 self-convergence and pseudo-unitarity", "[oracle]") {
    const auto s = fixtures::spdc(0.3);
    PropagationConfig pc;
    pc.ga = fixtures::grid_a(s, 3, 2.0);
    pc.gb = fixtures::grid_b(s, 3, 2.0);
    pc.steps = 400;
    const auto tab = coupling_table(s, pc);
    const auto m1 = oracle::propagate(tab, 1), m2 = oracle::propagate(tab, 2), m4 = oracle::propagate(tab, 4);
    const double ratio = (m4.matrix - m2.matrix).norm() / (m2.matrix - m1.matrix).norm();
    CHECK(ratio == Approx(16.0).margin(3.0));
    CHECK(m1.pseudo_unitarity_residual() < 1e-8);
    CHECK_THROWS_AS(oracle::propagate(tab, 3), InvalidParameter);
}

TEST_CASE("exact two-photon block matches first order", "[oracle]") {
    const auto s = fixtures::spdc(0.2);
    const auto ga = fixtures::grid_a(s, 3, 2.0), gb = fixtures::grid_b(s, 3, 2.0);
    PropagationConfig pc;
    pc.ga = ga;
    pc.gb = gb;
    pc.steps = 400;
    const auto tab = coupling_table(s, pc);
    const auto O = build_generators(j1_grid(s, ga, gb), ComplexGrid2D{ga, ga, Eigen::MatrixXcd::Zero(3, 3), {}},
                                    ComplexGrid2D{gb, gb, Eigen::MatrixXcd::Zero(3, 3), {}},
                                    ComplexGrid2D{ga, gb, Eigen::MatrixXcd::Zero(3, 3), {}});
    const Eigen::MatrixXcd L1 = doubled_matrix(O[0]);
    auto residual = [&](double lam) {
        const auto M = oracle::propagate(tab, 1, lam);
        return (M.B() / lam - L1.topRightCorner(3, 3)).cwiseAbs().maxCoeff();
    };
    const double r1 = residual(1.0), r2 = residual(0.5);
    CHECK(std::log2(r1 / r2) == Approx(2.0).margin(0.3));
}

TEST_CASE("log of exp round trip", "[oracle]") {
    std::mt19937 rng(11);
    for (auto t : {Topology::Pair, Topology::Conversion}) {
        auto g = DiscretizedGenerator::zero(t, 3, 2);
        g.squeeze = fixtures::random_matrix(3, 2, rng, 0.02);
        const Eigen::MatrixXcd a = fixtures::random_matrix(3, 3, rng, 0.02), b = fixtures::random_matrix(2, 2, rng, 0.02);
        g.fc_a = 0.5 * (a + a.adjoint());
        g.fc_b = 0.5 * (b + b.adjoint());
        const auto L = extract_log_generator(exponentiate(g));
        CHECK((L.total() - g).norm() < 1e-12 * g.norm());
        CHECK((L.squeeze.squeeze - g.squeeze).norm() < 1e-12 * g.norm());
    }
}

TEST_CASE("log refuses transforms far from identity", "[oracle]") {
    auto g = DiscretizedGenerator::zero(Topology::Pair, 1, 1);
    g.squeeze(0, 0) = cplx(0.0, 3.0 / (2.0 * std::numbers::pi));
    CHECK_THROWS_AS(extract_log_generator(exponentiate(g)), LogBranchFailure);
}

TEST_CASE("transform comparison and guards", "[oracle]") {
    auto g = DiscretizedGenerator::zero(Topology::Pair, 2, 1);
    g.squeeze(1, 0) = 0.01;
    const auto x = exponentiate(g), y = BogoliubovTransform::identity(Topology::Pair, 2, 1);
    const auto c = compare_transforms(x, y);
    CHECK(c.frobenius == Approx((x.matrix - y.matrix).norm()));
    CHECK(c.block_max[1] == Approx(std::abs(x.B()(1, 0))));
    CHECK(c.residual_exact < 1e-14);
    CHECK(c.residual_approx == 0.0);
    CHECK_THROWS_AS(compare_transforms(x, BogoliubovTransform::identity(Topology::Pair, 1, 2)), ShapeMismatch);

    auto fc = DiscretizedGenerator::zero(Topology::Pair, 2, 1);
    fc.fc_a(0, 0) = 1.0;
    CHECK_THROWS_AS(taylor_propagate(fc), ParityViolation);
    CHECK(taylor_propagate(g).matrix == x.matrix);

    PropagationConfig pc;
    pc.ga = fixtures::grid_a(fixtures::spdc(0.1), 2);
    pc.gb = fixtures::grid_b(fixtures::spdc(0.1), 2);
    pc.steps = 50;
    CHECK_THROWS_AS(exact_propagate(fixtures::spdc(0.1), pc), ValidationError);
}
