#include "mctf/image.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "mctf/rng.hpp"

namespace mctf {

namespace {

// Next whitespace-delimited integer, skipping '#' comment lines.
int read_header_int(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw std::runtime_error("malformed image header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace

Matrix load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);
    char p, kind;
    in.get(p);
    in.get(kind);
    if (!in || p != 'P' || (kind != '5' && kind != '6'))
        throw std::runtime_error("unsupported image format (want binary PPM P6 or PGM P5): " +
                                 path);
    const bool color = kind == '6';
    const int width = read_header_int(in);
    const int height = read_header_int(in);
    const int maxval = read_header_int(in);
    if (maxval <= 0 || maxval > 255)
        throw std::runtime_error("unsupported sample depth (maxval " + std::to_string(maxval) +
                                 "): " + path);
    // Header ends with exactly one whitespace byte, already consumed by
    // read_header_int's terminating get().

    const std::size_t samples =
        static_cast<std::size_t>(width) * height * (color ? 3 : 1);
    std::vector<unsigned char> raw(samples);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(samples));
    if (!in) throw std::runtime_error("image data truncated: " + path);

    Matrix out(height, width * 3);
    const float scale = 1.0f / static_cast<float>(maxval);
    for (int y = 0; y < height; ++y) {
        float* row = out.row(y);
        for (int x = 0; x < width; ++x) {
            if (color) {
                const std::size_t base = (static_cast<std::size_t>(y) * width + x) * 3;
                for (int ch = 0; ch < 3; ++ch)
                    row[x * 3 + ch] = static_cast<float>(raw[base + ch]) * scale;
            } else {
                const float v =
                    static_cast<float>(raw[static_cast<std::size_t>(y) * width + x]) * scale;
                row[x * 3 + 0] = v;
                row[x * 3 + 1] = v;
                row[x * 3 + 2] = v;
            }
        }
    }
    return out;
}

Matrix random_image(int size, std::uint32_t seed) {
    Rng rng(seed);
    Matrix out(size, size * 3);
    for (float& v : out.data()) v = rng.uniform(0.0f, 1.0f);
    return out;
}

}  // namespace mctf
