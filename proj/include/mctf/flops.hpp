#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mctf/vit.hpp"

namespace mctf {

/// Per-layer MAC breakdown. One MAC is reported as one FLOP throughout.
struct LayerMacs {
    int tokens_in = 0;
    int tokens_out = 0;
    std::uint64_t attention_macs = 0;
    std::uint64_t mlp_macs = 0;
    std::uint64_t mctf_overhead_macs = 0;
};

struct FlopsReport {
    std::vector<LayerMacs> per_layer;
    std::uint64_t stem_macs = 0;
    std::uint64_t head_macs = 0;
    std::uint64_t overhead_macs = 0;   // total across layers, always tallied
    bool overhead_included = false;    // whether total_macs folds it in
    std::uint64_t total_macs = 0;
    std::uint64_t baseline_total_macs = 0;
    double reduction_percent = 0.0;

    double gmacs() const { return static_cast<double>(total_macs) * 1e-9; }
};

/// MACs of one full transformer block on n tokens:
/// QKV 3nC^2 + scores n^2 C + attention*V n^2 C + projection nC^2 + MLP
/// 2*ratio*nC^2. Norms, softmax and GELU are excluded by convention.
std::uint64_t block_macs(int n_tokens, int channels, int heads, float mlp_ratio);

/// Sums stem, per-block MACs at each layer's token count, and the head, and
/// reports the reduction against the r = 0 baseline of the same config.
/// Precise attention additionally charges the recomputed attention on the
/// fused counts; approximated mode leaves the aggregation in the separate
/// overhead bucket (attraction weights at (N/2)^2 C per matching pass plus
/// pooling), folded into the total only when include_overhead is set.
FlopsReport model_macs(const ViTConfig& config, std::span<const int> schedule,
                       bool include_overhead = false);

/// CSV with one row per layer.
std::string flops_report_csv(const FlopsReport& report);

}  // namespace mctf
