#pragma once

// CSV grids (omega_a,omega_b,re,im, row-major) and PNG heatmaps.

#include <string>

#include "timeorder/grid.hpp"

namespace timeorder {

void write_csv(const ComplexGrid2D& g, const std::string& path);

// Infers both axes from the omega columns; throws MalformedCSV.
ComplexGrid2D read_csv(const std::string& path);

enum class Channel { Abs, Phase, Re, Im };

Channel parse_channel(const std::string& s);
const char* to_string(Channel c);

// One pixel per grid point; omega_a increases upward, omega_b to the right.
// Axis ranges and the color scale go into tEXt chunks.
void render_png(const ComplexGrid2D& g, Channel c, const std::string& path);

struct RGB {
    unsigned char r, g, b;
};
RGB viridis(double t);  // t clamped to [0, 1]

} // namespace timeorder
