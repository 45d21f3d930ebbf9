#include "mctf/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mctf {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("weight file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("weight file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

float read_f32(std::istream& in) {
    const std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_weights(const ModelWeights& weights, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(weights.entries().size()));
    for (const auto& [name, tensor] : weights.entries()) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        if (tensor.rows() == 1) {  // vectors round-trip as rank 1
            write_u32(out, 1);
            write_u64(out, static_cast<std::uint64_t>(tensor.cols()));
        } else {
            write_u32(out, 2);
            write_u64(out, static_cast<std::uint64_t>(tensor.rows()));
            write_u64(out, static_cast<std::uint64_t>(tensor.cols()));
        }
        for (float v : tensor.data()) write_f32(out, v);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a weight file (bad magic): " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported weight format version " + std::to_string(version));
    const std::uint32_t count = read_u32(in);

    ModelWeights weights;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw std::runtime_error("weight file truncated");
        const std::uint32_t rank = read_u32(in);
        if (rank != 1 && rank != 2)
            throw std::runtime_error("tensor " + name + ": unsupported rank " +
                                     std::to_string(rank));
        std::uint64_t rows = 1, cols;
        if (rank == 1) {
            cols = read_u64(in);
        } else {
            rows = read_u64(in);
            cols = read_u64(in);
        }
        Matrix m(static_cast<int>(rows), static_cast<int>(cols));
        for (float& v : m.data()) v = read_f32(in);
        weights.put(std::move(name), std::move(m));
    }
    return weights;
}

}  // namespace mctf
