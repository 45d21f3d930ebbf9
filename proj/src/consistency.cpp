#include "mctf/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mctf {

double cross_entropy(std::span<const float> logits, int label) {
    if (label < 0 || label >= static_cast<int>(logits.size()))
        throw std::out_of_range("cross_entropy: label out of range");
    const float mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (float v : logits) sum += std::exp(static_cast<double>(v - mx));
    const double log_prob = static_cast<double>(logits[label] - mx) - std::log(sum);
    return std::max(0.0, -log_prob);
}

int sample_r_prime(int r, Rng& rng, bool inclusive) {
    if (r <= 0) return 0;
    return rng.uniform_int(inclusive ? r + 1 : r);
}

namespace {

double max_softmax_prob(std::span<const float> logits) {
    const float mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (float v : logits) sum += std::exp(static_cast<double>(v - mx));
    return 1.0 / sum;  // exp(mx - mx) / sum
}

}  // namespace

ConsistencyBatchResult consistency_loss(const ModelWeights& weights, const ViTConfig& config,
                                        const TokenState& x, int label, double lambda,
                                        double beta_conf, Rng& rng, bool inclusive_r_prime,
                                        std::optional<int> forced_r_prime) {
    if (config.r_per_layer < 1)
        throw std::invalid_argument("consistency_loss: r_per_layer must be >= 1");

    ConsistencyBatchResult res;
    res.r_prime_drawn =
        forced_r_prime ? *forced_r_prime : sample_r_prime(config.r_per_layer, rng, inclusive_r_prime);

    ModelTrace trace_fixed, trace_random;
    const std::vector<float> logits_fixed = model_forward(x, weights, config, &trace_fixed);

    ViTConfig cfg_random = config;
    cfg_random.r_per_layer = res.r_prime_drawn;
    const std::vector<float> logits_random = model_forward(x, weights, cfg_random, &trace_random);

    res.ce_fixed = cross_entropy(logits_fixed, label);
    res.ce_random = cross_entropy(logits_random, label);

    double mse = 0.0;
    for (std::size_t i = 0; i < trace_fixed.final_cls.size(); ++i) {
        const double d = static_cast<double>(trace_fixed.final_cls[i]) -
                         static_cast<double>(trace_random.final_cls[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(trace_fixed.final_cls.size());
    res.mse_cls = mse;

    res.gated = max_softmax_prob(logits_fixed) <= beta_conf;
    res.total = res.ce_fixed + res.ce_random + (res.gated ? 0.0 : lambda * res.mse_cls);
    return res;
}

}  // namespace mctf
