#pragma once

// Batch commands behind the `timeorder` executable.
//
// Exit codes: 0 ok, 2 validation or parse error, 3 a quadrature or
// convergence tolerance was not met (outputs are still written), 4 I/O or
// malformed input.

#include <optional>
#include <string>
#include <vector>

#include "timeorder/config.hpp"

namespace timeorder {

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_tolerance = 3, exit_io = 4 };

struct JsaRun {
    std::vector<std::string> files;  // written, in order
    bool converged = true;
    double max_correction_ratio = 0.0;
    bool correction_below_floor = false;
    bool g2_below_floor = false;
};

// Writes CSV grids, optional PNG heatmaps and manifest.json into out_dir.
JsaRun run_jsa(const RunConfig& cfg, int order, const std::string& out_dir, unsigned jobs, bool render);

struct OracleRow {
    double epsilon = 0.0;
    double taylor_error = 0.0;        // |M - exp(O1)|_F
    double third_order_error = 0.0;   // |M - exp(O1 + O2 + O3)|_F
    double factorized_error = 0.0;    // |M - exp(X) exp(Y)|_F
    double first_order_residual = 0.0;  // max |M_sq / lambda - L(O1)_sq|, squeeze blocks
    double pseudo_unitarity = 0.0;
};

struct OracleReport {
    std::vector<OracleRow> rows;
    std::optional<double> taylor_exponent, third_order_exponent, factorized_exponent, first_order_exponent;
};

// Kernels are evaluated once in grid spectator mode at the config epsilon and
// rescaled by powers of epsilon/epsilon_config for every sweep point.
OracleReport run_oracle_compare(const RunConfig& cfg, const std::string& out_dir, unsigned jobs);

// Least-squares slope of log(err) against log(eps); nullopt if fewer than
// two usable (positive) points.
std::optional<double> loglog_slope(const std::vector<double>& eps, const std::vector<double>& err);

int run_cli(int argc, char** argv);

} // namespace timeorder
