#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "timeorder/io.hpp"

namespace timeorder {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

double channel_value(cplx v, Channel c) {
    switch (c) {
    case Channel::Abs: return std::abs(v);
    case Channel::Phase: return std::arg(v);
    case Channel::Re: return v.real();
    case Channel::Im: return v.imag();
    }
    return 0.0;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void render_png(const ComplexGrid2D& g, Channel c, const std::string& path) {
    g.check();
    const auto nr = g.values.rows(), nc = g.values.cols();

    double lo = 0.0, hi = 0.0;
    if (c == Channel::Phase) {
        lo = -std::numbers::pi;
        hi = std::numbers::pi;
    } else {
        double m = 0.0;
        for (Eigen::Index i = 0; i < nr; ++i)
            for (Eigen::Index j = 0; j < nc; ++j) m = std::max(m, std::abs(channel_value(g.values(i, j), c)));
        hi = m;
        lo = c == Channel::Abs ? 0.0 : -m;
    }

    std::vector<unsigned char> pixels(static_cast<std::size_t>(nr * nc * 3));
    for (Eigen::Index row = 0; row < nr; ++row) {
        const Eigen::Index i = nr - 1 - row;  // omega_a increases upward
        for (Eigen::Index j = 0; j < nc; ++j) {
            const double v = channel_value(g.values(i, j), c);
            const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            const RGB px = viridis(t);
            auto* p = &pixels[static_cast<std::size_t>((row * nc + j) * 3)];
            p[0] = px.r;
            p[1] = px.g;
            p[2] = px.b;
        }
    }

    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IOError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IOError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IOError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IOError("libpng failed writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(nc), static_cast<png_uint_32>(nr), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    const std::vector<std::pair<std::string, std::string>> kv = {
        {"Channel", to_string(c)},
        {"Kernel", g.meta.kernel},
        {"OmegaA", fmt(g.rows.omega(0)) + " " + fmt(g.rows.omega(g.rows.points - 1)) + " (bottom to top)"},
        {"OmegaB", fmt(g.cols.omega(0)) + " " + fmt(g.cols.omega(g.cols.points - 1)) + " (left to right)"},
        {"ColorScale", "viridis " + fmt(lo) + " " + fmt(hi)},
    };
    std::vector<png_text> text(kv.size());
    for (std::size_t k = 0; k < kv.size(); ++k) {
        text[k].compression = PNG_TEXT_COMPRESSION_NONE;
        text[k].key = const_cast<char*>(kv[k].first.c_str());
        text[k].text = const_cast<char*>(kv[k].second.c_str());
        text[k].text_length = kv[k].second.size();
    }
    png_set_text(png, info, text.data(), static_cast<int>(text.size()));
    png_write_info(png, info);
    for (Eigen::Index row = 0; row < nr; ++row)
        png_write_row(png, &pixels[static_cast<std::size_t>(row * nc * 3)]);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace timeorder
