#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "timeorder/disentangle.hpp"

using namespace timeorder;
using Catch::Approx;

namespace {

DiscretizedGenerator random_squeeze(Topology t, Eigen::Index na, Eigen::Index nb, std::mt19937& g, double s) {
    auto x = DiscretizedGenerator::zero(t, na, nb);
    x.squeeze = fixtures::random_matrix(na, nb, g, s);
    return x;
}

DiscretizedGenerator random_fc(Topology t, Eigen::Index na, Eigen::Index nb, std::mt19937& g, double s) {
    auto x = DiscretizedGenerator::zero(t, na, nb);
    const Eigen::MatrixXcd a = fixtures::random_matrix(na, na, g, s), b = fixtures::random_matrix(nb, nb, g, s);
    x.fc_a = 0.5 * (a + a.adjoint());
    x.fc_b = 0.5 * (b + b.adjoint());
    return x;
}

double transform_distance(const BogoliubovTransform& x, const BogoliubovTransform& y) {
    return (x.matrix - y.matrix).norm();
}

} // namespace

TEST_CASE("two-mode squeezing closed form", "[disentangle]") {
    const double r = 0.7;
    auto g = DiscretizedGenerator::zero(Topology::Pair, 1, 1);
    g.squeeze(0, 0) = cplx(0.0, r / (2.0 * std::numbers::pi));
    const auto t = exponentiate(g);
    CHECK(t.A()(0, 0).real() == Approx(std::cosh(r)).epsilon(1e-14));
    CHECK(t.B()(0, 0).real() == Approx(std::sinh(r)).epsilon(1e-14));
    CHECK(t.C()(0, 0).real() == Approx(std::sinh(r)).epsilon(1e-14));
    CHECK(t.D()(0, 0).real() == Approx(std::cosh(r)).epsilon(1e-14));
    CHECK(t.pseudo_unitarity_residual() < 1e-14);
}

TEST_CASE("beam splitter closed form", "[disentangle]") {
    const double th = 0.4;
    auto g = DiscretizedGenerator::zero(Topology::Conversion, 1, 1);
    g.squeeze(0, 0) = cplx(0.0, th / (2.0 * std::numbers::pi));
    const auto t = exponentiate(g);
    CHECK(t.A()(0, 0).real() == Approx(std::cos(th)).epsilon(1e-14));
    CHECK(t.B()(0, 0).real() == Approx(-std::sin(th)).epsilon(1e-14));
    CHECK(t.C()(0, 0).real() == Approx(std::sin(th)).epsilon(1e-14));
    CHECK((t.matrix * t.matrix.adjoint() - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("doubled matrix round trip", "[disentangle]") {
    std::mt19937 rng(1);
    for (auto t : {Topology::Pair, Topology::Conversion}) {
        const auto x = random_squeeze(t, 3, 2, rng, 1.0) + random_fc(t, 3, 2, rng, 1.0);
        const auto y = from_doubled(doubled_matrix(x), t, 3, 2);
        CHECK((y - x).norm() < 1e-14 * x.norm());
    }
}

TEST_CASE("bracket parity rules and Jacobi identity", "[disentangle]") {
    std::mt19937 rng(2);
    for (auto t : {Topology::Pair, Topology::Conversion}) {
        const auto s1 = random_squeeze(t, 3, 4, rng, 0.1), s2 = random_squeeze(t, 3, 4, rng, 0.1);
        const auto f1 = random_fc(t, 3, 4, rng, 0.1);
        CHECK(parity_of(commutator_bracket(s1, s2)) == Parity::Conversion);
        CHECK(parity_of(commutator_bracket(s1, f1)) == Parity::Squeeze);
        CHECK(parity_of(commutator_bracket(f1, f1)) == Parity::Zero);

        const auto x = s1 + f1, y = s2, z = random_fc(t, 3, 4, rng, 0.1) + random_squeeze(t, 3, 4, rng, 0.1);
        const auto jac = commutator_bracket(x, commutator_bracket(y, z)) + commutator_bracket(y, commutator_bracket(z, x)) +
                         commutator_bracket(z, commutator_bracket(x, y));
        CHECK(jac.norm() < 1e-13);
        // antisymmetry
        CHECK((commutator_bracket(x, y) + commutator_bracket(y, x)).norm() < 1e-15);
    }
}

TEST_CASE("exp respects products of commuting generators", "[disentangle]") {
    std::mt19937 rng(3);
    const auto x = random_fc(Topology::Pair, 3, 3, rng, 0.05);
    const auto ex = exponentiate(x), e2 = exponentiate(2.0 * x);
    CHECK(transform_distance(ex * ex, e2) < 1e-13);
    CHECK(e2.pseudo_unitarity_residual() < 1e-13);
}

TEST_CASE("third-order factorization error scales as eps^4", "[disentangle]") {
    std::mt19937 rng(4);
    for (auto t : {Topology::Pair, Topology::Conversion}) {
        const auto R1 = random_squeeze(t, 3, 3, rng, 0.3), R3 = random_squeeze(t, 3, 3, rng, 0.3),
                   R5 = random_squeeze(t, 3, 3, rng, 0.3);
        const auto R2 = random_fc(t, 3, 3, rng, 0.3), R4 = random_fc(t, 3, 3, rng, 0.3);
        auto err = [&](double e) {
            const auto o1 = e * R1, o2 = (e * e) * R2, o3 = std::pow(e, 3) * R3;
            const auto o4 = std::pow(e, 4) * R4, o5 = std::pow(e, 5) * R5;
            const auto exact = exponentiate(o1 + o2 + o3 + o4 + o5);
            const auto f3 = factorize_third_order(o1, o2, o3);
            const auto f5 = fifth_order_combination(o1, o2, o3, o4, o5);
            return std::pair{transform_distance(exact, exponentiate_generator(f3.X, f3.Y)),
                             transform_distance(exact, exponentiate_generator(f5.X, f5.Y))};
        };
        const auto [a3, a5] = err(0.08);
        const auto [b3, b5] = err(0.04);
        CHECK(a3 / b3 == Approx(16.0).epsilon(0.15));
        CHECK(a5 / b5 == Approx(64.0).epsilon(0.15));
    }
}

TEST_CASE("factorization rejects wrong parities", "[disentangle]") {
    std::mt19937 rng(5);
    const auto s = random_squeeze(Topology::Pair, 2, 2, rng, 0.1);
    const auto f = random_fc(Topology::Pair, 2, 2, rng, 0.1);
    CHECK_THROWS_AS(factorize_third_order(f, f, s), ParityViolation);
    CHECK_THROWS_AS(factorize_third_order(s, s, s), ParityViolation);
    const auto other = random_squeeze(Topology::Pair, 3, 2, rng, 0.1);
    CHECK_THROWS_AS(commutator_bracket(s, other), GridMismatch);
    CHECK_THROWS_AS(exponentiate(s) * exponentiate(other), ShapeMismatch);
}

TEST_CASE("seed reshaping by the conversion part", "[disentangle]") {
    const FrequencyGrid g{5.0, 1.0, 3, 'a'};  // spacing 1
    ComplexGrid2D ga{g, g, Eigen::MatrixXcd::Identity(3, 3), {}};
    ComplexGrid2D gb{g, g, 2.0 * Eigen::MatrixXcd::Identity(3, 3), {}};
    Eigen::VectorXcd fa(3), fb(3);
    fa << 1.0, 0.0, 2.0;
    fb << 0.0, 1.0, 0.0;
    const auto [ra, rb] = seed_reshape(fa, fb, ga, gb);
    const cplx k(0.0, -2.0 * std::numbers::pi);
    CHECK((ra - (1.0 + k) * fa).norm() < 1e-14);
    CHECK((rb - (1.0 + 2.0 * k) * fb).norm() < 1e-14);
    CHECK_THROWS_AS(seed_reshape(Eigen::VectorXcd::Zero(2), fb, ga, gb), GridMismatch);
}
