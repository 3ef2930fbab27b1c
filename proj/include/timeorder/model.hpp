#pragma once

// Physical process description: pump, dispersion, phase matching and the
// coupling F(w_a, w_b, w_p) for SPDC, SFWM and FC.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "timeorder/errors.hpp"

namespace timeorder {

using cplx = std::complex<double>;

enum class ProcessKind { SPDC_TypeII, SPDC_TypeI, SFWM, FC };

// Sinc is the uniform-crystal phase matching; Broad replaces it by 1.
enum class PhaseMatchingShape { Sinc, Broad };

// Pair processes create a†b†; conversion processes move a -> b.
enum class Topology { Pair, Conversion };

inline Topology topology_of(ProcessKind k) {
    return k == ProcessKind::FC ? Topology::Conversion : Topology::Pair;
}

inline std::string_view to_string(ProcessKind k) {
    switch (k) {
    case ProcessKind::SPDC_TypeII: return "spdc-type2";
    case ProcessKind::SPDC_TypeI: return "spdc-type1";
    case ProcessKind::SFWM: return "sfwm";
    case ProcessKind::FC: return "fc";
    }
    return "?";
}

inline std::optional<ProcessKind> parse_process_kind(std::string_view s) {
    if (s == "spdc-type2" || s == "spdc") return ProcessKind::SPDC_TypeII;
    if (s == "spdc-type1") return ProcessKind::SPDC_TypeI;
    if (s == "sfwm") return ProcessKind::SFWM;
    if (s == "fc") return ProcessKind::FC;
    return std::nullopt;
}

// Gaussian pump. For SFWM, `nu` is the pump carrier and `tau` is the width
// parameter of the two-photon amplitude centered at 2*nu.
struct PumpSpectrum {
    double nu = 0.0;              // rad/s
    double tau = 0.0;             // s
    double amplitude_scale = 1.0;
};

struct ModeDispersion {
    double nu = 0.0;              // reference frequency [rad/s]
    double k_ref = 0.0;           // [1/m]
    double group_velocity = 0.0;  // [m/s]
    std::optional<double> gvd;    // kappa [s^2/m]

    double k(double omega) const {
        const double d = omega - nu;
        double v = k_ref + d / group_velocity;
        if (gvd) v += 0.5 * (*gvd) * d * d;
        return v;
    }
};

struct DispersionModel {
    ModeDispersion a, b, p;
};

struct ProcessSpec {
    ProcessKind kind = ProcessKind::SPDC_TypeII;
    PumpSpectrum pump;
    DispersionModel dispersion;
    double epsilon = 0.0;
    double length = 0.0;  // m
    PhaseMatchingShape shape = PhaseMatchingShape::Sinc;
};

// Center of the pump amplitude in the variable the coupling takes as w_p
// (for SFWM that variable is w_+ = w_a + w_b).
inline double pump_center(const ProcessSpec& s) {
    return s.kind == ProcessKind::SFWM ? 2.0 * s.pump.nu : s.pump.nu;
}

// alpha(w) = amplitude_scale * tau/sqrt(pi) * exp(-tau^2 (w - nu)^2)
inline cplx pump_amplitude(double omega, const PumpSpectrum& pump) {
    const double d = pump.tau * (omega - pump.nu);
    return pump.amplitude_scale * pump.tau / std::sqrt(std::numbers::pi) * std::exp(-d * d);
}

inline double phase_mismatch(double wa, double wb, double wp, const ProcessSpec& s) {
    const auto& D = s.dispersion;
    switch (s.kind) {
    case ProcessKind::SPDC_TypeII:
    case ProcessKind::SPDC_TypeI:
        return D.a.k(wa) + D.b.k(wb) - D.p.k(wp);
    case ProcessKind::SFWM:
        return D.a.k(wa) + D.b.k(wb) - 2.0 * D.p.k(0.5 * wp);
    case ProcessKind::FC:
        return D.b.k(wb) - D.a.k(wa) - D.p.k(wp);
    }
    return 0.0;
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

inline double phase_matching(double delta_k, double L) { return sinc(0.5 * delta_k * L); }

namespace detail {
inline cplx coupling_unsym(double wa, double wb, double wp, const ProcessSpec& s) {
    PumpSpectrum p = s.pump;
    p.nu = pump_center(s);
    const double phi =
        s.shape == PhaseMatchingShape::Broad ? 1.0 : phase_matching(phase_mismatch(wa, wb, wp, s), s.length);
    return -s.epsilon * pump_amplitude(wp, p) * phi;
}
} // namespace detail

// F = -eps * alpha(w_p) * Phi. Type-I returns the a<->b symmetrized coupling.
inline cplx coupling_F(double wa, double wb, double wp, const ProcessSpec& s) {
    if (s.kind == ProcessKind::SPDC_TypeI)
        return 0.5 * (detail::coupling_unsym(wa, wb, wp, s) + detail::coupling_unsym(wb, wa, wp, s));
    return detail::coupling_unsym(wa, wb, wp, s);
}

// Every violated constraint, as "key: message" strings.
inline std::vector<std::string> validation_errors(const ProcessSpec& s) {
    std::vector<std::string> e;
    auto pos = [&](double v, const char* key) {
        if (!(v > 0.0) || !std::isfinite(v)) e.push_back(std::string(key) + " must be positive");
    };
    pos(s.pump.tau, "pump.tau");
    pos(s.pump.nu, "pump.nu");
    if (!(s.pump.amplitude_scale >= 0.0)) e.push_back("pump.amplitude_scale must be non-negative");
    pos(s.length, "process.length");
    if (!(s.epsilon >= 0.0) || !std::isfinite(s.epsilon)) e.push_back("process.epsilon must be non-negative");
    const auto& D = s.dispersion;
    pos(D.a.group_velocity, "mode.a.group_velocity");
    pos(D.b.group_velocity, "mode.b.group_velocity");
    pos(D.p.group_velocity, "mode.p.group_velocity");
    pos(D.a.nu, "mode.a.nu");
    pos(D.b.nu, "mode.b.nu");
    pos(D.p.nu, "mode.p.nu");
    if (!e.empty()) return e;

    const double rel = 1e-9;
    if (std::abs(D.p.nu - s.pump.nu) > rel * s.pump.nu) e.push_back("mode.p.nu must equal pump.nu");
    double energy = 0.0, scale = 0.0;
    switch (s.kind) {
    case ProcessKind::SPDC_TypeII:
    case ProcessKind::SPDC_TypeI:
        energy = D.a.nu + D.b.nu - D.p.nu;
        scale = D.p.nu;
        break;
    case ProcessKind::SFWM:
        energy = D.a.nu + D.b.nu - 2.0 * D.p.nu;
        scale = 2.0 * D.p.nu;
        break;
    case ProcessKind::FC:
        energy = D.b.nu - D.a.nu - D.p.nu;
        scale = D.b.nu;
        break;
    }
    if (std::abs(energy) > rel * scale) e.push_back("mode reference frequencies violate energy conservation");
    const double dk = phase_mismatch(D.a.nu, D.b.nu, s.kind == ProcessKind::SFWM ? 2.0 * D.p.nu : D.p.nu, s);
    const double kscale = std::max({std::abs(D.a.k_ref), std::abs(D.b.k_ref), std::abs(D.p.k_ref), 1.0});
    if (std::abs(dk) > rel * kscale) e.push_back("mode k_ref values are not phase matched at the reference frequencies");
    return e;
}

inline void validate(const ProcessSpec& s) {
    const auto e = validation_errors(s);
    if (e.empty()) return;
    std::string msg;
    for (const auto& m : e) msg += (msg.empty() ? "" : "; ") + m;
    throw ValidationError(msg);
}

// The coupling in tau-scaled detunings x = tau*(w - reference), divided by tau.
// Phase argument DeltaK*L/2 = c0 + sum over modes of sign*(s*x + q*x^2).
struct ScaledCoupling {
    ProcessKind kind = ProcessKind::SPDC_TypeII;
    PhaseMatchingShape shape = PhaseMatchingShape::Sinc;
    double amp = 0.0;  // -eps * amplitude_scale / sqrt(pi)
    double c0 = 0.0;
    double ca = 0.0, cb = 0.0, cp = 0.0;  // linear coefficients, signs included
    double qa = 0.0, qb = 0.0, qp = 0.0;  // quadratic coefficients, signs included

    double phase(double xa, double xb, double xp) const {
        return c0 + (ca + qa * xa) * xa + (cb + qb * xb) * xb + (cp + qp * xp) * xp;
    }

    cplx raw(double xa, double xb, double xp) const {
        const double phi = shape == PhaseMatchingShape::Broad ? 1.0 : sinc(phase(xa, xb, xp));
        return amp * std::exp(-xp * xp) * phi;
    }

    cplx operator()(double xa, double xb, double xp) const {
        if (kind == ProcessKind::SPDC_TypeI) return 0.5 * (raw(xa, xb, xp) + raw(xb, xa, xp));
        return raw(xa, xb, xp);
    }

    // Typical magnitude of F, used for absolute error floors.
    double scale() const { return std::abs(amp); }
};

inline ScaledCoupling make_scaled_coupling(const ProcessSpec& s) {
    ScaledCoupling c;
    c.kind = s.kind;
    c.shape = s.shape;
    c.amp = -s.epsilon * s.pump.amplitude_scale / std::sqrt(std::numbers::pi);
    const double tau = s.pump.tau, L = s.length;
    const auto& D = s.dispersion;
    auto lin = [&](const ModeDispersion& m) { return L / (2.0 * tau * m.group_velocity); };
    auto quad = [&](const ModeDispersion& m) { return m.gvd ? L * (*m.gvd) / (4.0 * tau * tau) : 0.0; };
    double sa = +1, sb = +1, sp = -1, pq = 1.0;
    switch (s.kind) {
    case ProcessKind::SPDC_TypeII:
    case ProcessKind::SPDC_TypeI:
        c.c0 = 0.5 * L * (D.a.k_ref + D.b.k_ref - D.p.k_ref);
        break;
    case ProcessKind::SFWM:
        // 2 k_p(w_+/2) expands to 2k_p + d_+/v_p + kappa d_+^2 / 4
        c.c0 = 0.5 * L * (D.a.k_ref + D.b.k_ref - 2.0 * D.p.k_ref);
        pq = 0.5;
        break;
    case ProcessKind::FC:
        c.c0 = 0.5 * L * (D.b.k_ref - D.a.k_ref - D.p.k_ref);
        sa = -1;
        break;
    }
    c.ca = sa * lin(D.a);
    c.cb = sb * lin(D.b);
    c.cp = sp * lin(D.p);
    c.qa = sa * quad(D.a);
    c.qb = sb * quad(D.b);
    c.qp = sp * pq * quad(D.p);
    return c;
}

} // namespace timeorder
