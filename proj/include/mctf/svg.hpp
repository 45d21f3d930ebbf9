#pragma once

#include <string>
#include <vector>

namespace mctf {

/// SVG of the patch grid with one border color per fusion group.
/// group_of_patch[i] is the group id of patch i in row-major grid order;
/// the palette is a fixed function of the group id.
std::string render_group_map(int grid_side, const std::vector<int>& group_of_patch,
                             int cell_px = 28);

}  // namespace mctf
