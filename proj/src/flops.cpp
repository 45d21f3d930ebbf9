#include "mctf/flops.hpp"

#include <cstdio>
#include <stdexcept>

namespace mctf {

namespace {

std::uint64_t sq(std::uint64_t v) { return v * v; }

struct BlockParts {
    std::uint64_t attention = 0;
    std::uint64_t mlp = 0;
};

BlockParts block_parts(int n_tokens, int channels, float mlp_ratio) {
    const std::uint64_t n = static_cast<std::uint64_t>(n_tokens);
    const std::uint64_t c = static_cast<std::uint64_t>(channels);
    BlockParts parts;
    parts.attention = 3 * n * c * c    // QKV projections
                      + sq(n) * c      // attention scores
                      + sq(n) * c      // attention * V
                      + n * c * c;     // output projection
    parts.mlp = static_cast<std::uint64_t>(2.0f * mlp_ratio * static_cast<float>(n)) * c * c;
    return parts;
}

std::uint64_t stem_macs(const ViTConfig& config) {
    const std::uint64_t patch_dim =
        static_cast<std::uint64_t>(3) * config.patch_size * config.patch_size;
    return static_cast<std::uint64_t>(config.num_patches()) * patch_dim * config.embed_dim;
}

std::uint64_t head_macs(const ViTConfig& config) {
    return static_cast<std::uint64_t>(config.embed_dim) * config.num_classes;
}

}  // namespace

std::uint64_t block_macs(int n_tokens, int channels, int heads, float mlp_ratio) {
    if (n_tokens < 1) throw std::invalid_argument("block_macs: n_tokens < 1");
    (void)heads;  // head count redistributes the same MACs
    const BlockParts parts = block_parts(n_tokens, channels, mlp_ratio);
    return parts.attention + parts.mlp;
}

FlopsReport model_macs(const ViTConfig& config, std::span<const int> schedule,
                       bool include_overhead) {
    config.validate();
    if (static_cast<int>(schedule.size()) != config.depth)
        throw std::invalid_argument("model_macs: schedule length != depth");

    FlopsReport report;
    report.stem_macs = stem_macs(config);
    report.head_macs = head_macs(config);
    report.overhead_included = include_overhead;

    const std::uint64_t c = static_cast<std::uint64_t>(config.embed_dim);
    std::uint64_t blocks = 0;
    for (int l = 0; l < config.depth; ++l) {
        const int n = schedule[l];
        const int r_eff = effective_r(n, config);
        LayerMacs layer;
        layer.tokens_in = n;
        layer.tokens_out = n - r_eff;
        const BlockParts parts = block_parts(n, config.embed_dim, config.mlp_ratio);
        layer.attention_macs = parts.attention;
        layer.mlp_macs = parts.mlp;
        if (config.attention_mode == AttentionMode::kPrecise && r_eff > 0) {
            // Recomputed QK on the fused tokens instead of map aggregation.
            const std::uint64_t fused = static_cast<std::uint64_t>(layer.tokens_out);
            layer.attention_macs += 3 * fused * c * c + sq(fused) * c;
        }
        if (r_eff > 0) {
            const std::uint64_t half = static_cast<std::uint64_t>(n) / 2;
            const int passes = config.matching_mode == MatchingMode::kBidirectional ? 2 : 1;
            layer.mctf_overhead_macs = static_cast<std::uint64_t>(passes) * sq(half) * c  // attraction
                                       + 2 * static_cast<std::uint64_t>(r_eff) * c;       // pooling
        }
        report.overhead_macs += layer.mctf_overhead_macs;
        blocks += layer.attention_macs + layer.mlp_macs;
        report.per_layer.push_back(layer);
    }

    report.total_macs = report.stem_macs + blocks + report.head_macs;
    if (include_overhead) report.total_macs += report.overhead_macs;

    ViTConfig base = config;
    base.r_per_layer = 0;
    const int n0 = config.tokens();
    report.baseline_total_macs =
        stem_macs(base) +
        static_cast<std::uint64_t>(config.depth) *
            block_macs(n0, config.embed_dim, config.heads, config.mlp_ratio) +
        head_macs(base);
    report.reduction_percent =
        100.0 * (1.0 - static_cast<double>(report.total_macs) /
                           static_cast<double>(report.baseline_total_macs));
    return report;
}

std::string flops_report_csv(const FlopsReport& report) {
    std::string csv = "layer,tokens_in,tokens_out,attention_macs,mlp_macs,mctf_overhead_macs\n";
    char line[160];
    for (std::size_t l = 0; l < report.per_layer.size(); ++l) {
        const LayerMacs& m = report.per_layer[l];
        std::snprintf(line, sizeof(line), "%zu,%d,%d,%llu,%llu,%llu\n", l, m.tokens_in,
                      m.tokens_out, static_cast<unsigned long long>(m.attention_macs),
                      static_cast<unsigned long long>(m.mlp_macs),
                      static_cast<unsigned long long>(m.mctf_overhead_macs));
        csv += line;
    }
    return csv;
}

}  // namespace mctf
