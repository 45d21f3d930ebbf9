#include "mctf/vit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mctf {

void ViTConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("ViTConfig: depth < 1");
    if (embed_dim % heads != 0) throw std::invalid_argument("ViTConfig: embed_dim % heads != 0");
    if (image_size % patch_size != 0)
        throw std::invalid_argument("ViTConfig: image_size % patch_size != 0");
    if (safeguard_min_tokens < 1)
        throw std::invalid_argument("ViTConfig: safeguard_min_tokens < 1");
    if (num_classes < 1) throw std::invalid_argument("ViTConfig: num_classes < 1");
    if (r_per_layer < 0) throw std::invalid_argument("ViTConfig: r_per_layer < 0");
}

ViTConfig deit_tiny() {
    ViTConfig c;
    c.embed_dim = 192;
    c.heads = 3;
    return c;
}

ViTConfig deit_small() {
    ViTConfig c;
    c.embed_dim = 384;
    c.heads = 6;
    return c;
}

ViTConfig deit_base() {
    ViTConfig c;
    c.embed_dim = 768;
    c.heads = 12;
    return c;
}

ViTConfig preset_config(const std::string& name) {
    if (name == "deit-t") return deit_tiny();
    if (name == "deit-s") return deit_small();
    if (name == "deit-b") return deit_base();
    throw std::invalid_argument("unknown preset: " + name);
}

void ModelWeights::put(std::string name, Matrix tensor) {
    auto it = index_.find(name);
    if (it != index_.end()) {
        entries_[it->second].second = std::move(tensor);
        return;
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(tensor));
}

const Matrix& ModelWeights::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("missing tensor: " + name);
    return entries_[it->second].second;
}

bool ModelWeights::contains(const std::string& name) const { return index_.count(name) > 0; }

std::vector<std::pair<std::string, std::pair<int, int>>> weight_layout(const ViTConfig& config) {
    const int c = config.embed_dim;
    const int hidden = config.mlp_hidden();
    const int patch_dim = 3 * config.patch_size * config.patch_size;
    std::vector<std::pair<std::string, std::pair<int, int>>> layout;
    layout.push_back({"patch_embed.weight", {patch_dim, c}});
    layout.push_back({"patch_embed.bias", {1, c}});
    layout.push_back({"cls_token", {1, c}});
    layout.push_back({"pos_embed", {config.tokens(), c}});
    for (int i = 0; i < config.depth; ++i) {
        const std::string p = "blocks." + std::to_string(i) + ".";
        layout.push_back({p + "norm1.weight", {1, c}});
        layout.push_back({p + "norm1.bias", {1, c}});
        layout.push_back({p + "qkv.weight", {c, 3 * c}});
        layout.push_back({p + "qkv.bias", {1, 3 * c}});
        layout.push_back({p + "proj.weight", {c, c}});
        layout.push_back({p + "proj.bias", {1, c}});
        layout.push_back({p + "norm2.weight", {1, c}});
        layout.push_back({p + "norm2.bias", {1, c}});
        layout.push_back({p + "mlp.fc1.weight", {c, hidden}});
        layout.push_back({p + "mlp.fc1.bias", {1, hidden}});
        layout.push_back({p + "mlp.fc2.weight", {hidden, c}});
        layout.push_back({p + "mlp.fc2.bias", {1, c}});
    }
    layout.push_back({"norm.weight", {1, c}});
    layout.push_back({"norm.bias", {1, c}});
    layout.push_back({"head.weight", {c, config.num_classes}});
    layout.push_back({"head.bias", {1, config.num_classes}});
    return layout;
}

void validate_weights(const ModelWeights& weights, const ViTConfig& config) {
    for (const auto& [name, shape] : weight_layout(config)) {
        if (!weights.contains(name)) throw std::invalid_argument("missing tensor: " + name);
        const Matrix& t = weights.get(name);
        if (t.rows() != shape.first || t.cols() != shape.second)
            throw ShapeError("tensor " + name + ": expected " + std::to_string(shape.first) +
                             "x" + std::to_string(shape.second) + ", got " +
                             std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
    }
}

ModelWeights random_weights(const ViTConfig& config, std::uint32_t seed) {
    config.validate();
    Rng rng(seed);
    ModelWeights w;
    for (const auto& [name, shape] : weight_layout(config)) {
        Matrix t(shape.first, shape.second);
        for (float& v : t.data()) v = rng.uniform(-0.02f, 0.02f);
        w.put(name, std::move(t));
    }
    return w;
}

namespace {

void add_bias_rows(Matrix& m, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != m.cols()) throw ShapeError("bias shape mismatch");
    for (int i = 0; i < m.rows(); ++i) {
        float* row = m.row(i);
        const float* b = bias.row(0);
        for (int j = 0; j < m.cols(); ++j) row[j] += b[j];
    }
}

Matrix slice_cols(const Matrix& m, int offset, int width) {
    Matrix out(m.rows(), width);
    for (int i = 0; i < m.rows(); ++i) {
        const float* src = m.row(i) + offset;
        std::copy(src, src + width, out.row(i));
    }
    return out;
}

Matrix linear(const Matrix& x, const ModelWeights& w, const std::string& prefix) {
    Matrix out = matmul(x, w.get(prefix + ".weight"));
    add_bias_rows(out, w.get(prefix + ".bias"));
    return out;
}

Matrix norm(const Matrix& x, const ModelWeights& w, const std::string& prefix) {
    const Matrix& gain = w.get(prefix + ".weight");
    const Matrix& shift = w.get(prefix + ".bias");
    return layer_norm(x, gain.row_span(0), shift.row_span(0));
}

struct AttentionMaps {
    std::vector<Matrix> per_head;  // softmaxed, N x N each
    Matrix head_mean;              // N x N
    std::vector<float> column_means;
};

// Per-head proportional attention over the given tokens plus the
// informativeness scores (column means of the head-averaged map).
AttentionMaps attention_maps(const Matrix& normed, const std::vector<int>& sizes,
                             int block_index, const ModelWeights& weights,
                             const ViTConfig& config, std::vector<Matrix>* values_out) {
    const int n = normed.rows();
    const int c = config.embed_dim;
    const int dh = config.head_dim();
    const std::string p = "blocks." + std::to_string(block_index) + ".qkv";
    Matrix qkv = matmul(normed, weights.get(p + ".weight"));
    add_bias_rows(qkv, weights.get(p + ".bias"));

    std::optional<std::vector<float>> log_sizes;
    if (config.proportional_attention) {
        log_sizes.emplace(n);
        for (int i = 0; i < n; ++i) (*log_sizes)[i] = std::log(static_cast<float>(sizes[i]));
    }

    AttentionMaps maps;
    maps.per_head.reserve(config.heads);
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    for (int h = 0; h < config.heads; ++h) {
        Matrix q = slice_cols(qkv, h * dh, dh);
        Matrix k = slice_cols(qkv, c + h * dh, dh);
        if (values_out) values_out->push_back(slice_cols(qkv, 2 * c + h * dh, dh));
        Matrix logits = matmul_nt(q, k);
        for (float& v : logits.data()) v *= scale;
        maps.per_head.push_back(row_softmax(
            logits, log_sizes ? std::optional<std::span<const float>>(*log_sizes) : std::nullopt));
    }

    maps.head_mean = Matrix(n, n);
    const float inv_heads = 1.0f / static_cast<float>(config.heads);
    for (const Matrix& a : maps.per_head)
        for (std::size_t i = 0; i < a.size(); ++i) maps.head_mean.data()[i] += a.data()[i];
    for (float& v : maps.head_mean.data()) v *= inv_heads;

    maps.column_means.assign(n, 0.0f);
    for (int i = 0; i < n; ++i) {
        const float* row = maps.head_mean.row(i);
        for (int j = 0; j < n; ++j) maps.column_means[j] += row[j];
    }
    const float inv_n = 1.0f / static_cast<float>(n);
    for (float& v : maps.column_means) v *= inv_n;
    return maps;
}

Matrix concat_heads(const std::vector<Matrix>& heads) {
    const int n = heads[0].rows();
    int c = 0;
    for (const Matrix& h : heads) c += h.cols();
    Matrix out(n, c);
    int offset = 0;
    for (const Matrix& h : heads) {
        for (int i = 0; i < n; ++i)
            std::copy(h.row(i), h.row(i) + h.cols(), out.row(i) + offset);
        offset += h.cols();
    }
    return out;
}

Matrix mlp_block(const Matrix& x, int block_index, const ModelWeights& weights) {
    const std::string p = "blocks." + std::to_string(block_index) + ".";
    Matrix hidden = gelu(linear(norm(x, weights, p + "norm2"), weights, p + "mlp.fc1"));
    return linear(hidden, weights, p + "mlp.fc2");
}

}  // namespace

TokenState patch_embed(const Matrix& image_hwc, int image_size, const ModelWeights& weights,
                       const ViTConfig& config) {
    if (image_size != config.image_size)
        throw ShapeError("patch_embed: image size does not match config");
    if (image_hwc.rows() != image_size || image_hwc.cols() != image_size * 3)
        throw ShapeError("patch_embed: expected " + std::to_string(image_size) + "x" +
                         std::to_string(image_size) + "x3 image");

    const int p = config.patch_size;
    const int side = config.patches_per_side();
    const int patch_dim = 3 * p * p;
    Matrix patches(config.num_patches(), patch_dim);
    for (int ty = 0; ty < side; ++ty) {
        for (int tx = 0; tx < side; ++tx) {
            float* dst = patches.row(ty * side + tx);
            int k = 0;
            for (int py = 0; py < p; ++py) {
                const float* src = image_hwc.row(ty * p + py) + tx * p * 3;
                for (int j = 0; j < p * 3; ++j) dst[k++] = src[j];
            }
        }
    }

    Matrix projected = matmul(patches, weights.get("patch_embed.weight"));
    add_bias_rows(projected, weights.get("patch_embed.bias"));

    TokenState state;
    state.cls_present = true;
    state.features = Matrix(config.tokens(), config.embed_dim);
    const Matrix& cls = weights.get("cls_token");
    std::copy(cls.row(0), cls.row(0) + cls.cols(), state.features.row(0));
    for (int i = 0; i < projected.rows(); ++i)
        std::copy(projected.row(i), projected.row(i) + projected.cols(),
                  state.features.row(i + 1));
    state.features = add(state.features, weights.get("pos_embed"));
    state.sizes.assign(config.tokens(), 1);
    state.info.assign(config.tokens(), 1.0f);
    return state;
}

TokenState block_forward(const TokenState& state, int block_index, const ModelWeights& weights,
                         const ViTConfig& config, int r_effective, BlockTrace* trace,
                         bool capture_attention) {
    state.validate();
    const std::string prefix = "blocks." + std::to_string(block_index) + ".";

    // One-step-ahead attention: the map is computed on the tokens entering
    // the block and drives the fusion of those same tokens.
    std::vector<Matrix> values;
    Matrix normed = norm(state.features, weights, prefix + "norm1");
    AttentionMaps maps =
        attention_maps(normed, state.sizes, block_index, weights, config, &values);

    ReduceResult reduced = mctf_reduce(state, maps.column_means, config.criteria, r_effective,
                                       config.matching_mode, config.pooling_mode);

    Matrix attn_out;
    if (config.attention_mode == AttentionMode::kApproximated) {
        std::vector<Matrix> contexts;
        contexts.reserve(config.heads);
        for (int h = 0; h < config.heads; ++h) {
            Matrix v = std::move(values[h]);
            Matrix a = std::move(maps.per_head[h]);
            v = pool_rows(v, reduced.plan.pass1, config.pooling_mode);
            a = aggregate_pass(a, reduced.plan.pass1);
            if (reduced.plan.has_pass2) {
                v = pool_rows(v, reduced.plan.pass2, config.pooling_mode);
                a = aggregate_pass(a, reduced.plan.pass2);
            }
            contexts.push_back(matmul(a, v));
        }
        attn_out = linear(concat_heads(contexts), weights, prefix + "proj");
    } else {
        // Precise mode recomputes the attention from the fused tokens
        // instead of aggregating the pre-fusion map.
        std::vector<Matrix> fused_values;
        Matrix fused_normed = norm(reduced.state.features, weights, prefix + "norm1");
        AttentionMaps fused_maps = attention_maps(fused_normed, reduced.state.sizes, block_index,
                                                  weights, config, &fused_values);
        std::vector<Matrix> contexts;
        contexts.reserve(config.heads);
        for (int h = 0; h < config.heads; ++h)
            contexts.push_back(matmul(fused_maps.per_head[h], fused_values[h]));
        attn_out = linear(concat_heads(contexts), weights, prefix + "proj");
    }

    TokenState out = std::move(reduced.state);
    out.features = add(out.features, attn_out);
    out.features = add(out.features, mlp_block(out.features, block_index, weights));

    if (trace) {
        trace->tokens_in = state.tokens();
        trace->tokens_out = out.tokens();
        trace->r_requested = r_effective;
        trace->r_effective = reduced.plan.r_effective;
        trace->informativeness = maps.column_means;
        trace->plan = std::move(reduced.plan);
        if (capture_attention) trace->attention_mean = std::move(maps.head_mean);
    }
    return out;
}

int effective_r(int n_tokens, const ViTConfig& config) {
    const int fusible = n_tokens - 1;
    int r = std::min(config.r_per_layer, n_tokens - config.safeguard_min_tokens);
    r = std::min(r, fusible - 1);
    if (config.matching_mode == MatchingMode::kOneWay) r = std::min(r, (fusible + 1) / 2);
    return std::max(r, 0);
}

std::vector<int> token_schedule(const ViTConfig& config) {
    config.validate();
    std::vector<int> schedule;
    schedule.reserve(config.depth);
    int n = config.tokens();
    for (int i = 0; i < config.depth; ++i) {
        schedule.push_back(n);
        n -= effective_r(n, config);
    }
    return schedule;
}

std::vector<float> model_forward(const TokenState& tokens, const ModelWeights& weights,
                                 const ViTConfig& config, ModelTrace* trace,
                                 bool capture_attention) {
    config.validate();
    validate_weights(weights, config);
    tokens.validate();

    TokenState state = tokens;
    if (trace) {
        trace->schedule.clear();
        trace->blocks.clear();
    }
    for (int i = 0; i < config.depth; ++i) {
        const int r = effective_r(state.tokens(), config);
        if (trace) {
            trace->schedule.push_back(state.tokens());
            trace->blocks.emplace_back();
        }
        state = block_forward(state, i, weights, config, r, trace ? &trace->blocks.back() : nullptr,
                              capture_attention);
    }

    Matrix final = norm(state.features, weights, "norm");
    Matrix cls(1, config.embed_dim);
    std::copy(final.row(0), final.row(0) + final.cols(), cls.row(0));
    Matrix logits = matmul(cls, weights.get("head.weight"));
    add_bias_rows(logits, weights.get("head.bias"));

    std::vector<float> out(logits.row(0), logits.row(0) + logits.cols());
    if (trace) {
        trace->final_tokens = state.tokens();
        trace->final_cls.assign(final.row(0), final.row(0) + final.cols());
        trace->logits = out;
    }
    return out;
}

}  // namespace mctf
