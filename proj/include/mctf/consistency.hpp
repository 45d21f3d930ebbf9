#pragma once

#include <optional>
#include <span>

#include "mctf/rng.hpp"
#include "mctf/vit.hpp"

namespace mctf {

/// -log softmax(logits)[label]; stabilized, always >= 0.
double cross_entropy(std::span<const float> logits, int label);

/// Uniform draw from {0, ..., r-1}; r == 0 returns 0. The strict r' < r
/// reading; pass inclusive = true for {0, ..., r}.
int sample_r_prime(int r, Rng& rng, bool inclusive = false);

/// One evaluation of the token-reduction-consistency objective.
struct ConsistencyBatchResult {
    double ce_fixed = 0.0;   // CE of the r forward
    double ce_random = 0.0;  // CE of the r' forward
    double mse_cls = 0.0;    // MSE between the two final class tokens
    int r_prime_drawn = 0;
    bool gated = false;      // true when the MSE term was omitted
    double total = 0.0;
};

/// Runs f(x; r) and f(x; r'), takes CE on both, and adds lambda * MSE between
/// the final-layer class tokens unless the confidence of the r forward is at
/// or below beta_conf (the gate). Typical coefficients: lambda 1 for
/// tiny-width models, 3 for small-width; beta_conf 0.4. forced_r_prime
/// bypasses the draw (used to pin r' in tests).
ConsistencyBatchResult consistency_loss(const ModelWeights& weights, const ViTConfig& config,
                                        const TokenState& x, int label, double lambda,
                                        double beta_conf, Rng& rng,
                                        bool inclusive_r_prime = false,
                                        std::optional<int> forced_r_prime = std::nullopt);

}  // namespace mctf
