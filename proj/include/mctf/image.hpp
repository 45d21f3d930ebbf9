#pragma once

#include <cstdint>
#include <string>

#include "mctf/matrix.hpp"

namespace mctf {

/// Loads a binary PPM (P6) or PGM (P5) image with 8-bit samples. Returns an
/// H x (W*3) matrix of interleaved RGB in [0, 1]; grayscale is replicated
/// across the three channels.
Matrix load_image(const std::string& path);

/// Seeded random image, values uniform in [0, 1).
Matrix random_image(int size, std::uint32_t seed);

}  // namespace mctf
