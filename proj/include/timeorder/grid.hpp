#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "timeorder/errors.hpp"
#include "timeorder/model.hpp"

namespace timeorder {

// Uniform grid of absolute frequencies, center +- half_width.
struct FrequencyGrid {
    double center = 0.0;      // rad/s
    double half_width = 0.0;  // rad/s
    std::size_t points = 0;
    char label = 'a';

    double spacing() const { return 2.0 * half_width / static_cast<double>(points - 1); }
    double offset(std::size_t i) const {
        return (static_cast<double>(i) - 0.5 * static_cast<double>(points - 1)) * spacing();
    }
    double omega(std::size_t i) const { return center + offset(i); }

    void validate() const {
        const std::string k = std::string("grid.") + label;
        if (points < 2) throw ValidationError(k + ".points must be at least 2");
        if (!(half_width > 0.0) || !std::isfinite(half_width)) throw ValidationError(k + ".half_width must be positive");
        if (!(center > 0.0) || !std::isfinite(center)) throw ValidationError(k + ".center must be positive");
    }

    bool operator==(const FrequencyGrid& o) const {
        return center == o.center && half_width == o.half_width && points == o.points;
    }
};

// Grid in tau-scaled detunings x = tau*(w - reference).
struct Axis {
    std::vector<double> x;
    double dx = 0.0;
    std::size_t size() const { return x.size(); }
};

inline Axis scaled_axis(const FrequencyGrid& g, double reference, double tau) {
    Axis a;
    const double x0 = tau * (g.center - reference);
    a.dx = tau * g.spacing();
    a.x.resize(g.points);
    for (std::size_t i = 0; i < g.points; ++i)
        a.x[i] = x0 + (static_cast<double>(i) - 0.5 * static_cast<double>(g.points - 1)) * a.dx;
    return a;
}

enum class SpectatorMode { Continuum, Grid };

inline const char* to_string(SpectatorMode m) { return m == SpectatorMode::Grid ? "grid" : "continuum"; }

struct GridMeta {
    std::string kernel;
    Topology topology = Topology::Pair;
    double epsilon = 0.0;
    double tau = 0.0;
    double rel_tol = 0.0;
    double window = 0.0;
    double pv_window = 0.0;
    SpectatorMode spectator = SpectatorMode::Continuum;
    double worst_error = 0.0;   // largest per-point absolute error estimate
    bool converged = true;      // every point reached its tolerance
    std::size_t evaluations = 0;
    double max_correction_ratio = 0.0;  // set by jsa_corrected
    Eigen::MatrixXd error;      // per-point absolute error estimates (empty if exact)
    std::map<std::string, Eigen::MatrixXcd> parts;  // diagnostic summands
};

// Complex function on grid_row x grid_col, in absolute units (seconds).
struct ComplexGrid2D {
    FrequencyGrid rows, cols;
    Eigen::MatrixXcd values;
    GridMeta meta;

    void check() const {
        if (values.rows() != static_cast<Eigen::Index>(rows.points) ||
            values.cols() != static_cast<Eigen::Index>(cols.points))
            throw GridMismatch("grid values do not match their axes");
        if (!values.allFinite()) throw NumericalInstability("grid contains non-finite values");
    }
};

inline void require_same(const FrequencyGrid& a, const FrequencyGrid& b, const char* what) {
    if (!(a == b)) throw GridMismatch(std::string("incompatible grids: ") + what);
}

} // namespace timeorder
