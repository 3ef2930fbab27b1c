#pragma once

// Laboratory parameters -> dimensionless coupling and pump parameters.
//
//   process   width parameter      from sigma (spectral std. dev.)
//   SPDC/FC   tau                  tau  = 1/(sqrt(2) sigma)
//   SFWM      tau~ (of alpha~)     tau~ = 1/(2 sigma)

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include "timeorder/errors.hpp"
#include "timeorder/model.hpp"
#include "timeorder/quadrature.hpp"

namespace timeorder {

inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double speed_of_light = 299792458.0;            // m/s

struct LabParameters {
    double pulse_energy = 0.0;  // J
    double sigma = 0.0;         // rad/s
    double area = 0.0;          // m^2
    double length = 0.0;        // m
    std::optional<double> chi2; // m/V
    std::optional<double> chi3; // m^2/V^2
    double n_a = 1.0, n_b = 1.0, n_c = 1.0;
    double nu_a = 0.0, nu_b = 0.0, nu_c = 0.0;  // rad/s
    double v_a = 0.0, v_b = 0.0, v_c = 0.0;     // group velocities, informational
    std::optional<double> kappa_c;              // s^2/m
    bool type_one = false;                      // type-I SPDC convention

    void validate() const {
        auto need = [](bool ok, const char* what) {
            if (!ok) throw InvalidParameter(what);
        };
        need(pulse_energy >= 0.0 && std::isfinite(pulse_energy), "lab.pulse_energy must be non-negative");
        need(sigma > 0.0, "lab.sigma must be positive");
        need(area > 0.0, "lab.area must be positive");
        need(length > 0.0, "lab.length must be positive");
        need(n_a > 0.0 && n_b > 0.0 && n_c > 0.0, "lab refractive indices must be positive");
        need(chi2.has_value() != chi3.has_value(), "exactly one of lab.chi2 and lab.chi3 must be set");
    }
};

inline double tau_from_sigma_chi2(double sigma) { return 1.0 / (std::numbers::sqrt2 * sigma); }
inline double tau_from_sigma_chi3(double sigma) { return 1.0 / (2.0 * sigma); }

// Peak field of a Gaussian pulse, E0 = sqrt((U/sqrt(pi)) sigma / (2 eps0 n_c c A)).
inline double field_amplitude_from_energy(const LabParameters& p) {
    if (!(p.pulse_energy >= 0.0) || !(p.sigma > 0.0) || !(p.area > 0.0) || !(p.n_c > 0.0))
        throw InvalidParameter("field amplitude needs U >= 0 and positive sigma, area, n_c");
    const double num = p.pulse_energy / std::sqrt(std::numbers::pi) * p.sigma;
    return std::sqrt(num / (2.0 * vacuum_permittivity * p.n_c * speed_of_light * p.area));
}

inline double epsilon_chi2(const LabParameters& p) {
    p.validate();
    if (!p.chi2) throw InvalidParameter("epsilon_chi2 needs lab.chi2");
    if (!(p.nu_a > 0.0) || !(p.nu_b > 0.0)) throw InvalidParameter("lab.nu_a and lab.nu_b must be positive");
    const double pi = std::numbers::pi, c = speed_of_light;
    const double tau = tau_from_sigma_chi2(p.sigma);
    const double geom = std::sqrt(pi * p.nu_b * p.nu_a /
                                  (std::pow(4.0 * pi, 3) * vacuum_permittivity * p.area * c * c * c * p.n_a * p.n_b * p.n_c));
    const double energy = std::sqrt(p.pulse_energy / std::sqrt(pi / 2.0) / tau);
    const double eps = 2.0 * p.length * (*p.chi2) * geom * energy;
    return p.type_one ? 0.5 * eps : eps;
}

inline double epsilon_chi3(const LabParameters& p) {
    p.validate();
    if (!p.chi3) throw InvalidParameter("epsilon_chi3 needs lab.chi3");
    if (!(p.nu_a > 0.0) || !(p.nu_b > 0.0)) throw InvalidParameter("lab.nu_a and lab.nu_b must be positive");
    const double pi = std::numbers::pi, c = speed_of_light;
    const double pre = 3.0 * (*p.chi3) / (vacuum_permittivity * p.area * std::pow(4.0 * pi, 2) * p.n_c * c * c);
    return pre * std::sqrt(p.nu_a * p.nu_b / (p.n_a * p.n_b)) * (std::numbers::sqrt2 * p.pulse_energy) * p.length *
           std::sqrt(pi) * 2.0 * p.sigma;
}

// Phi~(dk) = int_{-L/2}^{L/2} dz/L exp(i dk z) / sqrt(1 - i kappa z sigma^2)
inline cplx gvd_phase_matching(double delta_k, const LabParameters& p, double rel_tol = 1e-13) {
    if (!(p.length > 0.0)) throw InvalidParameter("lab.length must be positive");
    const double kappa = p.kappa_c.value_or(0.0), s2 = p.sigma * p.sigma, L = p.length;
    // integrate in u = z/L over [-1/2, 1/2]
    auto f = [&](double u) {
        const double z = u * L;
        return std::polar(1.0, delta_k * z) / std::sqrt(cplx(1.0, -kappa * z * s2));
    };
    const auto r = quad::integrate_1d(f, -0.5, 0.5, quad::Tolerance{rel_tol, 1e-300, 2'000'000});
    return r.value;
}

} // namespace timeorder
