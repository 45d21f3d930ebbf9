#pragma once

#include <string>

#include "mctf/vit.hpp"

namespace mctf {

/// Binary tensor container; see docs/weight-format.md for the byte layout.
/// Little-endian throughout, float32 payloads, tensors kept in table order.
void save_weights(const ModelWeights& weights, const std::string& path);
ModelWeights load_weights(const std::string& path);

}  // namespace mctf
