#include "timeorder/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "json.hpp"

#include "timeorder/disentangle.hpp"
#include "timeorder/io.hpp"
#include "timeorder/magnus.hpp"
#include "timeorder/oracle.hpp"
#include "timeorder/physparams.hpp"

namespace timeorder {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json mode_json(const ModeDispersion& m) {
    json j = {{"nu", m.nu}, {"k_ref", m.k_ref}, {"group_velocity", m.group_velocity}};
    if (m.gvd) j["gvd"] = *m.gvd;
    return j;
}

json grid_json(const FrequencyGrid& g) {
    return {{"center", g.center}, {"half_width", g.half_width}, {"points", g.points}, {"spacing", g.spacing()}};
}

json lab_json(const LabParameters& l) {
    json j = {{"pulse_energy", l.pulse_energy}, {"sigma", l.sigma}, {"area", l.area}, {"length", l.length},
              {"n_a", l.n_a}, {"n_b", l.n_b}, {"n_c", l.n_c}, {"type_one", l.type_one}};
    if (l.chi2) j["chi2"] = *l.chi2;
    if (l.chi3) j["chi3"] = *l.chi3;
    if (l.kappa_c) j["kappa_c"] = *l.kappa_c;
    return j;
}

// Every tunable after defaults are filled in.
json normalized_json(const RunConfig& c) {
    const auto& s = c.spec;
    const auto& q = c.quadrature;
    json j;
    j["process"] = {{"kind", std::string(to_string(s.kind))},
                    {"length", s.length},
                    {"epsilon", s.epsilon},
                    {"phase_matching", s.shape == PhaseMatchingShape::Broad ? "broad" : "sinc"}};
    j["pump"] = {{"nu", s.pump.nu}, {"tau", s.pump.tau}, {"amplitude_scale", s.pump.amplitude_scale}};
    j["mode"] = {{"a", mode_json(s.dispersion.a)}, {"b", mode_json(s.dispersion.b)}, {"p", mode_json(s.dispersion.p)}};
    j["grid"] = {{"a", grid_json(c.ga)}, {"b", grid_json(c.gb)}};
    j["quadrature"] = {{"rel_tol", q.rel_tol},     {"window", q.window},       {"pv_window", q.pv_window},
                       {"max_eval", q.max_eval},   {"abs_floor", q.abs_floor}, {"spectator", to_string(q.spectator)}};
    j["output"] = {{"directory", c.output.directory},
                   {"formats", c.output.formats},
                   {"render", c.output.render},
                   {"channels", c.output.channels}};
    if (c.oracle)
        j["oracle"] = {{"time_span", c.oracle->time_span},
                       {"steps", c.oracle->steps},
                       {"pump_window", c.oracle->pump_window},
                       {"epsilons", c.oracle->epsilons}};
    if (c.lab) j["lab"] = lab_json(*c.lab);
    return j;
}

json kernel_json(const ComplexGrid2D& g) {
    json j = {{"worst_error", g.meta.worst_error},
              {"converged", g.meta.converged},
              {"evaluations", g.meta.evaluations},
              {"max_abs", g.values.size() ? g.values.cwiseAbs().maxCoeff() : 0.0}};
    if (g.meta.error.size()) {
        Eigen::Index r = 0, c = 0;
        g.meta.error.maxCoeff(&r, &c);
        j["worst_point"] = {{"omega_row", g.rows.omega(static_cast<std::size_t>(r))},
                            {"omega_col", g.cols.omega(static_cast<std::size_t>(c))}};
    }
    return j;
}

void make_dir(const std::string& d) {
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec || !fs::is_directory(d)) throw IOError("cannot create output directory " + d);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out << text;
    if (!out) throw IOError("write failed for " + path);
}

// Re-throws e as the same error type with a kernel name prefixed.
template <class... E>
[[noreturn]] void rethrow_with(const Error& e, const std::string& ctx) {
    const std::string msg = ctx + ": " + e.what();
    (
        [&] {
            if (dynamic_cast<const E*>(&e)) throw E(msg);
        }(),
        ...);
    throw NumericalInstability(msg);
}

template <class Fn>
auto kernel_step(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        rethrow_with<ValidationError, InvalidParameter, GridMismatch, ShapeMismatch, NonFiniteIntegrand,
                     ParityViolation, LogBranchFailure, NumericalInstability>(e, name);
    }
}

std::string fmt_num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

ComplexGrid2D error_grid(const ComplexGrid2D& g) {
    ComplexGrid2D e;
    e.rows = g.rows;
    e.cols = g.cols;
    e.meta.kernel = g.meta.kernel + "_error";
    e.values = g.meta.error.cast<cplx>();
    return e;
}

} // namespace

JsaRun run_jsa(const RunConfig& cfg, int order, const std::string& out_dir, unsigned jobs, bool render) {
    if (order != 1 && order != 3) throw ValidationError("--order must be 1 or 3");
    const auto t0 = std::chrono::steady_clock::now();
    make_dir(out_dir);
    KernelOptions opts = cfg.quadrature;
    opts.jobs = std::max(1u, jobs);
    const auto& s = cfg.spec;
    JsaRun run;

    json manifest;
    manifest["config_text"] = cfg.source_text;
    manifest["config"] = normalized_json(cfg);
    manifest["order"] = order;
    manifest["jobs"] = opts.jobs;
    manifest["trivial"] = s.epsilon == 0.0 || s.pump.amplitude_scale == 0.0;

    auto put = [&](const ComplexGrid2D& g, bool with_error) {
        const std::string f = (fs::path(out_dir) / (g.meta.kernel + ".csv")).string();
        write_csv(g, f);
        run.files.push_back(f);
        if (with_error && g.meta.error.size()) {
            const std::string fe = (fs::path(out_dir) / (g.meta.kernel + "_error.csv")).string();
            write_csv(error_grid(g), fe);
            run.files.push_back(fe);
        }
        manifest["kernels"][g.meta.kernel] = kernel_json(g);
        if (!g.meta.converged) run.converged = false;
    };

    const ComplexGrid2D j1 = kernel_step("J1", [&] { return j1_grid(s, cfg.ga, cfg.gb); });
    put(j1, false);
    const ComplexGrid2D* shown = &j1;
    ComplexGrid2D J;

    if (order == 3) {
        auto [g2a, g2b] = kernel_step("G2", [&] { return g2_grids(s, cfg.ga, cfg.gb, opts); });
        put(g2a, true);
        put(g2b, true);
        const ComplexGrid2D j3 = kernel_step("J3", [&] { return j3_grid(s, cfg.ga, cfg.gb, opts); });
        put(j3, true);
        const ComplexGrid2D k3 = kernel_step("K3", [&] { return k3_grid(j1, g2a, g2b); });
        put(k3, false);
        J = kernel_step("J", [&] { return jsa_corrected(j1, j3, k3); });
        put(J, false);
        shown = &J;

        const double max_j1 = j1.values.cwiseAbs().maxCoeff();
        const double max_corr = (J.values - j1.values).cwiseAbs().maxCoeff();
        // K3 inherits the G2 point errors through the matrix products
        const double k3_err = std::numbers::pi * max_j1 *
                              (g2a.meta.worst_error * static_cast<double>(cfg.ga.points) * cfg.ga.spacing() +
                               g2b.meta.worst_error * static_cast<double>(cfg.gb.points) * cfg.gb.spacing());
        const double floor = 10.0 * opts.rel_tol * max_j1 + j3.meta.worst_error + k3_err;
        const double scale = make_scaled_coupling(s).scale();
        const double g2_natural = s.pump.tau * scale * scale;
        const double max_g2 = std::max(g2a.values.cwiseAbs().maxCoeff(), g2b.values.cwiseAbs().maxCoeff());
        const double g2_floor =
            10.0 * opts.rel_tol * g2_natural + std::max(g2a.meta.worst_error, g2b.meta.worst_error);
        run.max_correction_ratio = J.meta.max_correction_ratio;
        run.correction_below_floor = max_corr <= floor;
        run.g2_below_floor = max_g2 <= g2_floor;
        manifest["max_correction_ratio"] = run.max_correction_ratio;
        manifest["max_correction"] = max_corr;
        manifest["correction_floor"] = floor;
        manifest["g2_natural_scale"] = g2_natural;
        manifest["g2_floor"] = g2_floor;
        manifest["flags"] = {{"correction_below_tolerance_floor", run.correction_below_floor},
                             {"g2_below_tolerance_floor", run.g2_below_floor}};
    }

    if (render || cfg.output.render) {
        for (const auto& ch : cfg.output.channels) {
            const std::string f = (fs::path(out_dir) / (shown->meta.kernel + "_" + ch + ".png")).string();
            render_png(*shown, parse_channel(ch), f);
            run.files.push_back(f);
        }
    }

    manifest["converged"] = run.converged;
    manifest["files"] = run.files;
    manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string mf = (fs::path(out_dir) / "manifest.json").string();
    write_text(mf, manifest.dump(2) + "\n");
    run.files.push_back(mf);
    return run;
}

std::optional<double> loglog_slope(const std::vector<double>& eps, const std::vector<double>& err) {
    std::vector<std::pair<double, double>> p;
    for (std::size_t k = 0; k < std::min(eps.size(), err.size()); ++k)
        if (eps[k] > 0.0 && err[k] > 0.0) p.emplace_back(std::log(eps[k]), std::log(err[k]));
    if (p.size() < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (auto [x, y] : p) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(p.size());
    my /= static_cast<double>(p.size());
    double sxx = 0, sxy = 0;
    for (auto [x, y] : p) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

OracleReport run_oracle_compare(const RunConfig& cfg, const std::string& out_dir, unsigned jobs) {
    if (!cfg.oracle) throw ValidationError("oracle-compare needs an [oracle] section");
    const auto t0 = std::chrono::steady_clock::now();
    make_dir(out_dir);
    const auto& oc = *cfg.oracle;
    std::vector<double> sweep = oc.epsilons;
    if (sweep.empty()) sweep = {cfg.spec.epsilon, 0.5 * cfg.spec.epsilon, 0.25 * cfg.spec.epsilon};
    const double eps_ref = *std::max_element(sweep.begin(), sweep.end());

    OracleReport rep;
    rep.rows.resize(sweep.size());
    for (std::size_t k = 0; k < sweep.size(); ++k) rep.rows[k].epsilon = sweep[k];

    KernelOptions opts = cfg.quadrature;
    opts.spectator = SpectatorMode::Grid;
    opts.jobs = std::max(1u, jobs);
    PropagationConfig pc;
    pc.time_span = oc.time_span;
    pc.steps = oc.steps;
    pc.pump_window = oc.pump_window;
    pc.ga = cfg.ga;
    pc.gb = cfg.gb;
    pc.jobs = opts.jobs;
    pc.validate();

    if (eps_ref > 0.0) {
        ProcessSpec ref = cfg.spec;
        ref.epsilon = eps_ref;
        const auto j1 = kernel_step("J1", [&] { return j1_grid(ref, cfg.ga, cfg.gb); });
        const auto [g2a, g2b] = kernel_step("G2", [&] { return g2_grids(ref, cfg.ga, cfg.gb, opts); });
        const auto j3 = kernel_step("J3", [&] { return j3_grid(ref, cfg.ga, cfg.gb, opts); });
        const auto O = build_generators(j1, g2a, g2b, j3);
        const Eigen::MatrixXcd L1 = doubled_matrix(O[0]);
        const auto tab = kernel_step("oracle", [&] { return coupling_table(ref, pc); });
        const auto na = L1.rows() - static_cast<Eigen::Index>(cfg.gb.points);
        const auto nb = static_cast<Eigen::Index>(cfg.gb.points);

        for (auto& row : rep.rows) {
            const double lam = row.epsilon / eps_ref;
            if (lam == 0.0) continue;
            const auto M = oracle::propagate(tab, 1, lam);
            const auto o1 = lam * O[0], o2 = (lam * lam) * O[1], o3 = (lam * lam * lam) * O[2];
            const auto taylor = exponentiate(o1, "exp(O1)");
            const auto third = exponentiate(o1 + o2 + o3, "exp(O1+O2+O3)");
            const auto f = factorize_third_order(o1, o2, o3);
            const auto fact = exponentiate_generator(f.X, f.Y);
            row.taylor_error = (M.matrix - taylor.matrix).norm();
            row.third_order_error = (M.matrix - third.matrix).norm();
            row.factorized_error = (M.matrix - fact.matrix).norm();
            const double rb = (M.matrix.topRightCorner(na, nb) / lam - L1.topRightCorner(na, nb)).cwiseAbs().maxCoeff();
            const double rc =
                (M.matrix.bottomLeftCorner(nb, na) / lam - L1.bottomLeftCorner(nb, na)).cwiseAbs().maxCoeff();
            row.first_order_residual = std::max(rb, rc);
            row.pseudo_unitarity = M.pseudo_unitarity_residual();
        }
    }

    std::vector<double> e, t, th, fa, fo;
    for (const auto& r : rep.rows) {
        e.push_back(r.epsilon);
        t.push_back(r.taylor_error);
        th.push_back(r.third_order_error);
        fa.push_back(r.factorized_error);
        fo.push_back(r.first_order_residual);
    }
    rep.taylor_exponent = loglog_slope(e, t);
    rep.third_order_exponent = loglog_slope(e, th);
    rep.factorized_exponent = loglog_slope(e, fa);
    rep.first_order_exponent = loglog_slope(e, fo);

    std::string csv = "epsilon,taylor_error,third_order_error,factorized_error,first_order_residual,pseudo_unitarity\n";
    for (const auto& r : rep.rows)
        csv += fmt_num(r.epsilon) + "," + fmt_num(r.taylor_error) + "," + fmt_num(r.third_order_error) + "," +
               fmt_num(r.factorized_error) + "," + fmt_num(r.first_order_residual) + "," +
               fmt_num(r.pseudo_unitarity) + "\n";
    write_text((fs::path(out_dir) / "oracle_compare.csv").string(), csv);

    auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };
    auto within = [](const std::optional<double>& v, double want, double tol) -> json {
        return v ? json(std::abs(*v - want) <= tol) : json(nullptr);
    };
    json verdict = {
        {"exponents",
         {{"taylor", opt(rep.taylor_exponent)},
          {"third_order", opt(rep.third_order_exponent)},
          {"factorized", opt(rep.factorized_exponent)},
          {"first_order_residual", opt(rep.first_order_exponent)}}},
        {"expected", {{"taylor", 2.0}, {"third_order", 4.0}, {"factorized", 4.0}, {"first_order_residual", 2.0}}},
        {"within_tolerance",
         {{"taylor", within(rep.taylor_exponent, 2.0, 0.3)},
          {"third_order", within(rep.third_order_exponent, 4.0, 0.5)},
          {"factorized", within(rep.factorized_exponent, 4.0, 0.5)},
          {"first_order_residual", within(rep.first_order_exponent, 2.0, 0.3)}}},
        {"epsilons", e},
        {"config", normalized_json(cfg)},
        {"spectator", "grid"},
        {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    write_text((fs::path(out_dir) / "verdict.json").string(), verdict.dump(2) + "\n");
    return rep;
}

namespace {

json params_json(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    json j = {{"kind", std::string(to_string(s.kind))},
              {"epsilon", s.epsilon},
              {"tau", s.pump.tau},
              {"source", cfg.lab ? "lab" : "config"}};
    const bool sfwm = s.kind == ProcessKind::SFWM;
    j["sigma"] = sfwm ? 1.0 / (2.0 * s.pump.tau) : 1.0 / (std::numbers::sqrt2 * s.pump.tau);
    if (cfg.lab) {
        j["lab"] = lab_json(*cfg.lab);
        j["field_amplitude"] = field_amplitude_from_energy(*cfg.lab);
    }
    return j;
}

int code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const InvalidParameter*>(&e))
        return exit_validation;
    if (dynamic_cast<const IOError*>(&e) || dynamic_cast<const MalformedCSV*>(&e)) return exit_io;
    return exit_tolerance;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Time-ordering corrections to photon-pair generation and frequency conversion"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format = "csv", input, output, channel = "abs";
    int order = 3;
    unsigned jobs = 1;
    bool render = false;

    auto* jsa = app.add_subcommand("jsa", "kernel grids and the corrected JSA");
    jsa->add_option("--config", config_path, "config file")->required();
    jsa->add_option("--order", order, "Magnus order")->check(CLI::IsMember({1, 3}));
    jsa->add_option("--out", out_dir, "output directory (overrides output.directory)");
    jsa->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    jsa->add_option("--format", format, "grid format")->check(CLI::IsMember({"csv"}));
    jsa->add_flag("--render", render, "write PNG heatmaps");

    auto* cmp = app.add_subcommand("oracle-compare", "Magnus truncations against the exact propagator");
    cmp->add_option("--config", config_path, "config file")->required();
    cmp->add_option("--out", out_dir, "output directory (overrides output.directory)");
    cmp->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* ren = app.add_subcommand("render", "heatmap of a grid CSV");
    ren->add_option("--input", input, "grid CSV")->required();
    ren->add_option("--output", output, "PNG path")->required();
    ren->add_option("--channel", channel, "abs|phase|re|im")->check(CLI::IsMember({"abs", "phase", "re", "im"}));

    auto* par = app.add_subcommand("params", "dimensionless parameters from a config's lab section");
    par->add_option("--config", config_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*ren) {
            render_png(read_csv(input), parse_channel(channel), output);
            return exit_ok;
        }
        const RunConfig cfg = parse_config(config_path);
        const std::string dir = out_dir.empty() ? cfg.output.directory : out_dir;
        if (*par) {
            std::cout << params_json(cfg).dump(2) << "\n";
            return exit_ok;
        }
        if (*jsa) {
            const auto r = run_jsa(cfg, order, dir, jobs, render);
            if (!r.converged) {
                std::cerr << "warning: some quadrature points did not reach rel_tol; see manifest.json\n";
                return exit_tolerance;
            }
            return exit_ok;
        }
        if (*cmp) {
            const auto r = run_oracle_compare(cfg, dir, jobs);
            for (const auto& row : r.rows)
                std::cout << "eps=" << row.epsilon << " taylor=" << row.taylor_error
                          << " third=" << row.third_order_error << " factorized=" << row.factorized_error << "\n";
            return exit_ok;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return code_for(e);
    }
    return exit_ok;
}

} // namespace timeorder
