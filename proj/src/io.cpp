#include "timeorder/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace timeorder {

namespace {

std::string num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_field(std::string_view f, std::size_t line) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    if (!f.empty() && f.front() == '+') f.remove_prefix(1);
    double v = 0.0;
    auto r = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || r.ec != std::errc() || r.ptr != f.data() + f.size() || !std::isfinite(v))
        throw MalformedCSV("line " + std::to_string(line) + ": bad number '" + std::string(f) + "'");
    return v;
}

// Reconstruct a uniform grid from its distinct values in first-seen order.
FrequencyGrid infer_axis(const std::vector<double>& distinct, char label) {
    FrequencyGrid g;
    g.label = label;
    g.points = distinct.size();
    if (g.points < 2) throw MalformedCSV(std::string("axis ") + label + " needs at least 2 distinct values");
    const double lo = distinct.front(), hi = distinct.back();
    if (!(hi > lo)) throw MalformedCSV(std::string("axis ") + label + " must increase");
    g.center = 0.5 * (lo + hi);
    g.half_width = 0.5 * (hi - lo);
    const double tol = 1e-9 * std::max(std::abs(lo), std::abs(hi));
    for (std::size_t i = 0; i < g.points; ++i)
        if (std::abs(g.omega(i) - distinct[i]) > tol + 1e-6 * g.spacing())
            throw MalformedCSV(std::string("axis ") + label + " is not uniformly spaced");
    return g;
}

} // namespace

void write_csv(const ComplexGrid2D& g, const std::string& path) {
    g.check();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out << "omega_a,omega_b,re,im\n";
    for (Eigen::Index i = 0; i < g.values.rows(); ++i)
        for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
            const cplx v = g.values(i, j);
            out << num(g.rows.omega(static_cast<std::size_t>(i))) << ',' << num(g.cols.omega(static_cast<std::size_t>(j)))
                << ',' << num(v.real()) << ',' << num(v.imag()) << '\n';
        }
    if (!out) throw IOError("write failed for " + path);
}

ComplexGrid2D read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw MalformedCSV("empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "omega_a,omega_b,re,im") throw MalformedCSV("expected header omega_a,omega_b,re,im");

    struct Row {
        double wa, wb;
        cplx v;
    };
    std::vector<Row> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        std::array<std::string_view, 4> f;
        std::string_view rest(line);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto c = rest.find(',');
            if (k < 3) {
                if (c == std::string_view::npos) throw MalformedCSV("line " + std::to_string(n) + ": expected 4 fields");
                f[k] = rest.substr(0, c);
                rest.remove_prefix(c + 1);
            } else {
                if (c != std::string_view::npos) throw MalformedCSV("line " + std::to_string(n) + ": expected 4 fields");
                f[k] = rest;
            }
        }
        rows.push_back({parse_field(f[0], n), parse_field(f[1], n), {parse_field(f[2], n), parse_field(f[3], n)}});
    }
    if (rows.empty()) throw MalformedCSV("no data rows");

    std::vector<double> wb;
    for (const auto& r : rows) {
        if (r.wa != rows.front().wa) break;
        wb.push_back(r.wb);
    }
    if (rows.size() % wb.size() != 0) throw MalformedCSV("row count is not a multiple of the omega_b count");
    const std::size_t na = rows.size() / wb.size();
    std::vector<double> wa(na);
    for (std::size_t i = 0; i < na; ++i) {
        wa[i] = rows[i * wb.size()].wa;
        for (std::size_t j = 0; j < wb.size(); ++j) {
            const auto& r = rows[i * wb.size() + j];
            if (r.wa != wa[i] || r.wb != wb[j]) throw MalformedCSV("rows are not a row-major grid");
        }
    }

    ComplexGrid2D g;
    g.rows = infer_axis(wa, 'a');
    g.cols = infer_axis(wb, 'b');
    g.values.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(wb.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        g.values(static_cast<Eigen::Index>(k / wb.size()), static_cast<Eigen::Index>(k % wb.size())) = rows[k].v;
    g.meta.kernel = "csv";
    return g;
}

Channel parse_channel(const std::string& s) {
    if (s == "abs") return Channel::Abs;
    if (s == "phase") return Channel::Phase;
    if (s == "re") return Channel::Re;
    if (s == "im") return Channel::Im;
    throw ValidationError("channel must be abs, phase, re or im");
}

const char* to_string(Channel c) {
    switch (c) {
    case Channel::Abs: return "abs";
    case Channel::Phase: return "phase";
    case Channel::Re: return "re";
    case Channel::Im: return "im";
    }
    return "?";
}

RGB viridis(double t) {
    static constexpr unsigned char anchors[17][3] = {
        {68, 1, 84},    {72, 24, 106},  {71, 45, 123},  {66, 64, 134},  {59, 82, 139},  {51, 99, 141},
        {44, 114, 142}, {38, 130, 142}, {33, 145, 140}, {31, 160, 136}, {40, 174, 128}, {63, 188, 115},
        {94, 201, 98},  {132, 212, 75}, {173, 220, 48}, {216, 226, 25}, {253, 231, 37}};
    if (!(t >= 0.0)) t = 0.0;
    if (t > 1.0) t = 1.0;
    const double s = t * 16.0;
    const int k = std::min(15, static_cast<int>(s));
    const double f = s - k;
    auto mix = [&](int c) {
        return static_cast<unsigned char>(std::lround(anchors[k][c] + f * (anchors[k + 1][c] - anchors[k][c])));
    };
    return {mix(0), mix(1), mix(2)};
}

} // namespace timeorder
