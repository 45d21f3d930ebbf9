#include "mctf/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mctf {

void TokenState::validate() const {
    const auto n = static_cast<std::size_t>(features.rows());
    if (sizes.size() != n || info.size() != n)
        throw ShapeError("TokenState: tracker lengths disagree with feature rows");
    for (int s : sizes) {
        if (s < 1) throw std::invalid_argument("TokenState: size < 1");
    }
}

float similarity_weight(std::span<const float> x_i, std::span<const float> x_j) {
    if (x_i.size() != x_j.size()) throw ShapeError("similarity_weight: length mismatch");
    float dot = 0.0f, ni = 0.0f, nj = 0.0f;
    for (std::size_t k = 0; k < x_i.size(); ++k) {
        dot += x_i[k] * x_j[k];
        ni += x_i[k] * x_i[k];
        nj += x_j[k] * x_j[k];
    }
    if (ni == 0.0f || nj == 0.0f) return 0.5f;  // zero-norm: cosine taken as 0
    float cosv = dot / (std::sqrt(ni) * std::sqrt(nj));
    cosv = std::clamp(cosv, -1.0f, 1.0f);
    return 0.5f * (cosv + 1.0f);
}

float informativeness_weight(float a_i, float a_j) {
    const float ai = std::max(a_i, kInfoFloor);
    const float aj = std::max(a_j, kInfoFloor);
    return 1.0f / (ai * aj);
}

float size_weight(int s_i, int s_j) {
    return 1.0f / (static_cast<float>(s_i) * static_cast<float>(s_j));
}

AttractionMatrix attraction_matrix(const TokenState& state, std::span<const int> source,
                                   std::span<const int> target,
                                   const CriteriaTemperatures& temps) {
    state.validate();
    if ((temps.enable_sim && temps.tau_sim <= 0.0f) ||
        (temps.enable_info && temps.tau_info <= 0.0f) ||
        (temps.enable_size && temps.tau_size <= 0.0f))
        throw std::invalid_argument("attraction_matrix: enabled temperature must be positive");

    AttractionMatrix out;
    out.weights = Matrix(static_cast<int>(source.size()), static_cast<int>(target.size()));
    if (source.empty() || target.empty()) return out;

    // Normalizing once turns the cosine into a plain dot product per pair.
    Matrix unit = l2_normalize_rows(state.features);

    for (int i = 0; i < out.sources(); ++i) {
        const int si = source[i];
        const float* xi = unit.row(si);
        for (int j = 0; j < out.targets(); ++j) {
            const int tj = target[j];
            float w = 1.0f;
            if (temps.enable_sim) {
                const float* xj = unit.row(tj);
                float dot = 0.0f;  // zero-norm rows stay zero, so their cosine is 0 here
                for (int k = 0; k < unit.cols(); ++k) dot += xi[k] * xj[k];
                const float sim = 0.5f * (std::clamp(dot, -1.0f, 1.0f) + 1.0f);
                w *= std::pow(sim, temps.tau_sim);
            }
            if (temps.enable_info)
                w *= std::pow(informativeness_weight(state.info[si], state.info[tj]),
                              temps.tau_info);
            if (temps.enable_size)
                w *= std::pow(size_weight(state.sizes[si], state.sizes[tj]), temps.tau_size);
            // Keep entries strictly positive for the matching stage.
            out.weights.at(i, j) = std::max(w, 1e-30f);
        }
    }
    if (!out.weights.all_finite())
        throw std::runtime_error("attraction_matrix: non-finite weight");
    return out;
}

}  // namespace mctf
