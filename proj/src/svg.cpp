#include "mctf/svg.hpp"

#include <cstdio>
#include <stdexcept>

namespace mctf {

std::string render_group_map(int grid_side, const std::vector<int>& group_of_patch, int cell_px) {
    if (static_cast<int>(group_of_patch.size()) != grid_side * grid_side)
        throw std::invalid_argument("render_group_map: patch count != grid_side^2");

    const int extent = grid_side * cell_px;
    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  extent, extent, extent, extent);
    svg += buf;

    // Golden-angle hue walk keeps neighboring group ids visually distinct.
    const int inset = 2;
    for (int y = 0; y < grid_side; ++y) {
        for (int x = 0; x < grid_side; ++x) {
            const int group = group_of_patch[y * grid_side + x];
            const int hue = (group * 137) % 360;
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                          "fill=\"hsl(%d,55%%,88%%)\" stroke=\"hsl(%d,75%%,38%%)\" "
                          "stroke-width=\"2\"/>\n",
                          x * cell_px + inset, y * cell_px + inset, cell_px - 2 * inset,
                          cell_px - 2 * inset, hue, hue);
            svg += buf;
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace mctf
