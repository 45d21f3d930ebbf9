#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mctf/fusion.hpp"
#include "mctf/rng.hpp"

namespace mctf {

enum class AttentionMode { kApproximated, kPrecise };

/// Architecture hyperparameters plus the reduction knobs.
struct ViTConfig {
    int depth = 12;
    int embed_dim = 384;
    int heads = 6;
    float mlp_ratio = 4.0f;
    int image_size = 224;
    int patch_size = 16;
    int num_classes = 1000;
    int r_per_layer = 0;
    int safeguard_min_tokens = 10;
    AttentionMode attention_mode = AttentionMode::kApproximated;
    MatchingMode matching_mode = MatchingMode::kBidirectional;
    PoolingMode pooling_mode = PoolingMode::kWeighted;
    CriteriaTemperatures criteria;
    bool proportional_attention = true;

    int patches_per_side() const { return image_size / patch_size; }
    int num_patches() const { return patches_per_side() * patches_per_side(); }
    int tokens() const { return num_patches() + 1; }
    int head_dim() const { return embed_dim / heads; }
    int mlp_hidden() const { return static_cast<int>(mlp_ratio * embed_dim); }

    /// Throws on inconsistent dimensions.
    void validate() const;
};

ViTConfig deit_tiny();
ViTConfig deit_small();
ViTConfig deit_base();
ViTConfig preset_config(const std::string& name);  // "deit-t" | "deit-s" | "deit-b"

/// Named tensor table. Linear weights are stored input x output so they
/// right-multiply row-major activations; vectors are 1 x N.
class ModelWeights {
public:
    void put(std::string name, Matrix tensor);
    const Matrix& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    const std::vector<std::pair<std::string, Matrix>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, Matrix>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Expected tensor names and shapes for a config, in layout order.
std::vector<std::pair<std::string, std::pair<int, int>>> weight_layout(const ViTConfig& config);

/// Checks every layout tensor is present with the right shape; throws naming
/// the first offender.
void validate_weights(const ModelWeights& weights, const ViTConfig& config);

/// Synthetic weights for deterministic desk-scale runs: every tensor
/// uniform in [-0.02, 0.02] from the seed.
ModelWeights random_weights(const ViTConfig& config, std::uint32_t seed);

/// Per-block record: token counts, the informativeness scores the fusion
/// plan used, and the plan itself. The head-averaged pre-fusion attention
/// map is kept only when the forward was asked to capture it.
struct BlockTrace {
    int tokens_in = 0;
    int tokens_out = 0;
    int r_requested = 0;
    int r_effective = 0;
    std::vector<float> informativeness;
    FusionPlan plan;
    Matrix attention_mean;  // empty unless capture_attention
};

struct ModelTrace {
    std::vector<int> schedule;  // tokens entering each block
    int final_tokens = 0;
    std::vector<BlockTrace> blocks;
    std::vector<float> final_cls;  // class-token embedding after the final norm
    std::vector<float> logits;
};

/// Patch embedding: linear projection of flattened patches, class token
/// prepended, positional embeddings added. Sizes and info start at 1.
/// The image is row-major H x W x 3 (interleaved channels) in one row.
TokenState patch_embed(const Matrix& image_hwc, int image_size, const ModelWeights& weights,
                       const ViTConfig& config);

/// One transformer block with MCTF applied to its incoming tokens using the
/// block's own attention map. r_effective must already respect the caller's
/// safeguard; 0 gives a vanilla block.
TokenState block_forward(const TokenState& state, int block_index, const ModelWeights& weights,
                         const ViTConfig& config, int r_effective, BlockTrace* trace = nullptr,
                         bool capture_attention = false);

/// Full forward: depth blocks with the per-block safeguarded budget, final
/// norm, class-token head. Returns the logits; the trace records the
/// schedule and the fusion plans.
std::vector<float> model_forward(const TokenState& tokens, const ModelWeights& weights,
                                 const ViTConfig& config, ModelTrace* trace = nullptr,
                                 bool capture_attention = false);

/// Reduction budget for a block entering with n_tokens total.
int effective_r(int n_tokens, const ViTConfig& config);

/// Token counts entering each block for a config (matches ModelTrace).
std::vector<int> token_schedule(const ViTConfig& config);

}  // namespace mctf
