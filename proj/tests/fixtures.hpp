#pragma once

// Shared test setups. tau = 1 ps and L = 0.4 mm; the group velocities give
// linear phase coefficients L/(2 tau v) of 2.4 (a), 1.2 (b) and 1.6 (pump).

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "timeorder/grid.hpp"
#include "timeorder/model.hpp"

namespace fixtures {

using namespace timeorder;

inline constexpr double tau = 1e-12;
inline constexpr double length = 4e-4;

inline double velocity_for(double s) { return length / (2.0 * tau * s); }

inline ProcessSpec spdc(double eps, PhaseMatchingShape shape = PhaseMatchingShape::Sinc) {
    ProcessSpec s;
    s.kind = ProcessKind::SPDC_TypeII;
    s.pump = {2.4e15, tau, 1.0};
    s.dispersion.a = {1.2e15, 5e6, velocity_for(2.4), std::nullopt};
    s.dispersion.b = {1.2e15, 5e6, velocity_for(1.2), std::nullopt};
    s.dispersion.p = {2.4e15, 1e7, velocity_for(1.6), std::nullopt};
    s.epsilon = eps;
    s.length = length;
    s.shape = shape;
    return s;
}

inline ProcessSpec fc(double eps) {
    ProcessSpec s;
    s.kind = ProcessKind::FC;
    s.pump = {0.8e15, tau, 1.0};
    s.dispersion.a = {1.2e15, 5e6, velocity_for(2.4), std::nullopt};
    s.dispersion.b = {2.0e15, 9e6, velocity_for(1.2), std::nullopt};
    s.dispersion.p = {0.8e15, 4e6, velocity_for(1.6), std::nullopt};
    s.epsilon = eps;
    s.length = length;
    return s;
}

inline ProcessSpec sfwm(double eps) {
    ProcessSpec s;
    s.kind = ProcessKind::SFWM;
    s.pump = {1.2e15, tau, 1.0};
    s.dispersion.a = {1.1e15, 5e6, velocity_for(2.4), 1e-25};
    s.dispersion.b = {1.3e15, 7e6, velocity_for(1.2), std::nullopt};
    s.dispersion.p = {1.2e15, 6e6, velocity_for(1.6), 2e-25};
    s.epsilon = eps;
    s.length = length;
    return s;
}

// Grid centered on the mode reference with half-width given in units of 1/tau.
inline FrequencyGrid grid(double center, std::size_t points, double scaled_half_width, char label) {
    return {center, scaled_half_width / tau, points, label};
}

inline FrequencyGrid grid_a(const ProcessSpec& s, std::size_t n, double hw = 3.0) {
    return grid(s.dispersion.a.nu, n, hw, 'a');
}
inline FrequencyGrid grid_b(const ProcessSpec& s, std::size_t n, double hw = 3.0) {
    return grid(s.dispersion.b.nu, n, hw, 'b');
}

inline Eigen::MatrixXcd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937& g, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXcd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = {n(g), n(g)};
    return m;
}

inline double rel_max_diff(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    const double s = std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
    return s > 0 ? (x - y).cwiseAbs().maxCoeff() / s : 0.0;
}

} // namespace fixtures
