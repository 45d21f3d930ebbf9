#pragma once

#include <span>
#include <vector>

#include "mctf/matrix.hpp"

namespace mctf {

/// Token features plus the per-token trackers that ride along through fusion:
/// size (constituent count) and informativeness (mean attention weight).
struct TokenState {
    Matrix features;            // N x C
    std::vector<int> sizes;     // >= 1, sum conserved across fusion
    std::vector<float> info;    // > 0 after clamping
    bool cls_present = true;    // index 0 is the class token and never fuses

    int tokens() const { return features.rows(); }
    int channels() const { return features.cols(); }

    /// Throws if the tracker lengths disagree with the feature row count.
    void validate() const;
};

/// Per-criterion temperatures and enable flags. A disabled criterion
/// contributes a factor of 1 (power 0), which is how the criteria-subset
/// ablations are expressed.
struct CriteriaTemperatures {
    float tau_sim = 1.0f / 20.0f;
    float tau_info = 1.0f;
    float tau_size = 1.0f / 40.0f;
    bool enable_sim = true;
    bool enable_info = true;
    bool enable_size = true;
};

/// Pairwise attraction weights between a source split (rows) and a target
/// split (columns). All entries are positive and finite.
struct AttractionMatrix {
    Matrix weights;  // N_src x N_tgt

    int sources() const { return weights.rows(); }
    int targets() const { return weights.cols(); }
};

/// Informativeness values are floored here before any division.
inline constexpr float kInfoFloor = 1e-8f;

/// Cosine remapped to [0, 1]: 1/2 (cos + 1). Zero-norm vectors take cosine 0.
float similarity_weight(std::span<const float> x_i, std::span<const float> x_j);

/// 1 / (a_i * a_j) after floor clamping; grows without bound near zero.
float informativeness_weight(float a_i, float a_j);

/// 1 / (s_i * s_j); equals 1 only for two unfused tokens.
float size_weight(int s_i, int s_j);

/// Multi-criteria attraction between the source and target token views
/// (index lists into `state`; the class token must not appear in either).
/// Entry (i, j) is the product over enabled criteria of weight^tau.
AttractionMatrix attraction_matrix(const TokenState& state, std::span<const int> source,
                                   std::span<const int> target, const CriteriaTemperatures& temps);

}  // namespace mctf
