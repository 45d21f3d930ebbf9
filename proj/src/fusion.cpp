#include "mctf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace mctf {

namespace {

// Normalized pooling weights for one group; falls back to uniform when the
// raw weights sum to zero.
std::vector<float> group_weights(std::span<const int> members, std::span<const float> a,
                                 std::span<const int> s, PoolingMode mode, bool* fell_back) {
    std::vector<float> w(members.size(), 1.0f);
    if (mode != PoolingMode::kAverage) {
        double sum = 0.0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const int i = members[k];
            w[k] = a[i] * static_cast<float>(s[i]);
            sum += w[k];
        }
        if (sum <= 0.0) {
            if (fell_back) *fell_back = true;
            std::fill(w.begin(), w.end(), 1.0f);
        }
    }
    float total = 0.0f;
    for (float v : w) total += v;
    for (float& v : w) v /= total;
    return w;
}

void pool_group_into(const Matrix& m, std::span<const int> members,
                     std::span<const float> weights, PoolingMode mode, float* out) {
    const int cols = m.cols();
    if (members.size() == 1) {  // singleton groups pass through bit-exact
        const float* src = m.row(members[0]);
        std::copy(src, src + cols, out);
        return;
    }
    if (mode == PoolingMode::kMax) {
        const float* first = m.row(members[0]);
        std::copy(first, first + cols, out);
        for (std::size_t k = 1; k < members.size(); ++k) {
            const float* src = m.row(members[k]);
            for (int j = 0; j < cols; ++j) out[j] = std::max(out[j], src[j]);
        }
        return;
    }
    std::fill(out, out + cols, 0.0f);
    for (std::size_t k = 0; k < members.size(); ++k) {
        const float* src = m.row(members[k]);
        const float w = weights[k];
        for (int j = 0; j < cols; ++j) out[j] += w * src[j];
    }
}

}  // namespace

Pooled delta_pool(std::span<const std::vector<float>> tokens, std::span<const float> a,
                  std::span<const int> s, PoolingMode mode) {
    if (tokens.empty()) throw std::invalid_argument("delta_pool: empty group");
    if (a.size() != tokens.size() || s.size() != tokens.size())
        throw ShapeError("delta_pool: tracker lengths disagree");
    const int cols = static_cast<int>(tokens[0].size());
    Matrix m(static_cast<int>(tokens.size()), cols);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (static_cast<int>(tokens[i].size()) != cols) throw ShapeError("delta_pool: ragged tokens");
        std::copy(tokens[i].begin(), tokens[i].end(), m.row(static_cast<int>(i)));
    }
    std::vector<int> members(tokens.size());
    std::iota(members.begin(), members.end(), 0);

    bool fell_back = false;
    const std::vector<float> w = group_weights(members, a, s, mode, &fell_back);
    if (fell_back) std::cerr << "delta_pool: zero weights, using uniform average\n";

    Pooled out;
    out.features.resize(cols);
    pool_group_into(m, members, w, mode, out.features.data());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.size += s[i];
        out.info += a[i];
    }
    return out;
}

Matrix pool_rows(const Matrix& m, const PassPlan& pass, PoolingMode mode) {
    if (pass.tokens_in != m.rows()) throw ShapeError("pool_rows: plan/matrix row mismatch");
    Matrix out(pass.tokens_out, m.cols());
    for (int g = 0; g < pass.tokens_out; ++g)
        pool_group_into(m, pass.groups[g], pass.weights[g], mode, out.row(g));
    return out;
}

Matrix aggregate_pass(const Matrix& attention, const PassPlan& pass) {
    if (attention.rows() != attention.cols()) throw ShapeError("aggregate_pass: map not square");
    if (attention.rows() != pass.tokens_in) throw ShapeError("aggregate_pass: plan/map mismatch");
    const int n_out = pass.tokens_out;
    Matrix out(n_out, n_out);
    for (int g = 0; g < n_out; ++g) {
        const auto& rows = pass.groups[g];
        const auto& w = pass.weights[g];
        float* o = out.row(g);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const float* src = attention.row(rows[k]);
            const float wk = rows.size() == 1 ? 1.0f : w[k];
            for (int h = 0; h < n_out; ++h) {
                float col_sum = 0.0f;  // merged keys are summed
                for (int j : pass.groups[h]) col_sum += src[j];
                o[h] += wk * col_sum;
            }
        }
    }
    return out;
}

namespace {

// Shared skeleton for building a pass: groups from the target-side edges,
// unmatched sources as singletons, ordered by smallest member index.
PassPlan build_pass(const EdgeSelection& sel, int tokens_in, std::span<const int> sources,
                    std::span<const int> targets, std::span<const float> a,
                    std::span<const int> s, PoolingMode mode, int budget) {
    PassPlan pass;
    pass.selection = sel;
    pass.tokens_in = tokens_in;
    pass.budget = budget;

    std::vector<char> covered(tokens_in, 0);
    std::vector<std::vector<int>> target_members(targets.size());
    for (std::size_t j = 0; j < targets.size(); ++j) target_members[j] = {targets[j]};
    for (const Edge& e : sel.edges) {
        target_members[e.tgt].push_back(sources[e.src]);
        covered[sources[e.src]] = 1;
    }
    for (std::size_t j = 0; j < targets.size(); ++j)
        if (target_members[j].size() > 1) covered[targets[j]] = 1;

    for (int i = 0; i < tokens_in; ++i)
        if (!covered[i]) pass.groups.push_back({i});
    for (auto& g : target_members) {
        if (g.size() > 1) {
            std::sort(g.begin(), g.end());
            pass.groups.push_back(std::move(g));
        }
    }
    std::sort(pass.groups.begin(), pass.groups.end(),
              [](const auto& x, const auto& y) { return x.front() < y.front(); });

    pass.tokens_out = static_cast<int>(pass.groups.size());
    pass.weights.reserve(pass.groups.size());
    for (const auto& g : pass.groups) {
        bool fell_back = false;
        pass.weights.push_back(group_weights(g, a, s, mode, &fell_back));
        if (fell_back) std::cerr << "mctf_reduce: zero pooling weights, using uniform average\n";
    }
    return pass;
}

PassPlan identity_pass(int tokens) {
    PassPlan pass;
    pass.tokens_in = pass.tokens_out = tokens;
    pass.groups.reserve(tokens);
    pass.weights.reserve(tokens);
    for (int i = 0; i < tokens; ++i) {
        pass.groups.push_back({i});
        pass.weights.push_back({1.0f});
    }
    return pass;
}

TokenState apply_pass(const TokenState& state, const PassPlan& pass, PoolingMode mode) {
    TokenState out;
    out.cls_present = state.cls_present;
    out.features = pool_rows(state.features, pass, mode);
    out.sizes.resize(pass.tokens_out);
    out.info.resize(pass.tokens_out);
    for (int g = 0; g < pass.tokens_out; ++g) {
        int size_sum = 0;
        float info_sum = 0.0f;
        for (int i : pass.groups[g]) {
            size_sum += state.sizes[i];
            info_sum += state.info[i];
        }
        out.sizes[g] = size_sum;
        out.info[g] = pass.groups[g].size() == 1 ? state.info[pass.groups[g][0]] : info_sum;
    }
    return out;
}

}  // namespace

ReduceResult mctf_reduce(const TokenState& state, std::span<const float> a_next,
                         const CriteriaTemperatures& temps, int r, MatchingMode matching,
                         PoolingMode pooling, std::optional<int> pass1_budget) {
    state.validate();
    if (a_next.size() != static_cast<std::size_t>(state.tokens()))
        throw ShapeError("mctf_reduce: a_next length != tokens");

    TokenState cur = state;
    cur.info.assign(a_next.begin(), a_next.end());

    const int n = cur.tokens();
    const int fusible = n - (cur.cls_present ? 1 : 0);

    ReduceResult res;
    res.plan.tokens_in = n;
    res.plan.r_requested = r;

    const int r_total = std::clamp(r, 0, std::max(0, fusible - 1));
    const SplitIndices split = split_alternating(n, cur.cls_present);
    const int n_a = static_cast<int>(split.alpha.size());
    const int n_b = static_cast<int>(split.beta.size());

    if (r_total == 0 || n_a == 0 || n_b == 0) {
        res.plan.pass1 = identity_pass(n);
        res.plan.groups = res.plan.pass1.groups;
        res.plan.tokens_out = n;
        res.state = cur;
        return res;
    }

    // Budget split. The second pass needs at least one surviving alpha target.
    int r1, r2;
    if (matching == MatchingMode::kOneWay) {
        r1 = std::min(r_total, n_a);
        r2 = 0;
    } else {
        r1 = pass1_budget ? std::clamp(*pass1_budget, 0, r_total) : (r_total + 1) / 2;
        r1 = std::min(r1, n_a);
        r2 = std::min(r_total - r1, n_b);
        if (r2 > 0 && r1 == n_a) {
            r1 = n_a - 1;
            r2 = std::min(r_total - r1, n_b);
        }
        const int leftover = r_total - r1 - r2;
        if (leftover > 0) r1 = std::min(r1 + leftover, r2 > 0 ? n_a - 1 : n_a);
    }

    const AttractionMatrix w1 = attraction_matrix(cur, split.alpha, split.beta, temps);

    const EdgeSelection sel1 = bipartite_soft_match(w1, r1);
    res.plan.pass1 =
        build_pass(sel1, n, split.alpha, split.beta, cur.info, cur.sizes, pooling, r1);
    TokenState mid = apply_pass(cur, res.plan.pass1, pooling);

    if (r2 <= 0) {
        res.plan.groups = res.plan.pass1.groups;
        res.plan.tokens_out = res.plan.pass1.tokens_out;
        res.plan.r_effective = static_cast<int>(sel1.edges.size());
        res.state = std::move(mid);
        return res;
    }

    // Opposite direction on the updated sets. Weights are reused from the
    // first pass: a fused target keeps its original beta entry, surviving
    // sources are original alpha rows, so w2 is a transposed restriction.
    std::vector<int> alpha_pos(n, -1), beta_pos(n, -1);
    for (int i = 0; i < n_a; ++i) alpha_pos[split.alpha[i]] = i;
    for (int j = 0; j < n_b; ++j) beta_pos[split.beta[j]] = j;

    std::vector<int> src2, tgt2;  // indices into the intermediate token list
    std::vector<int> src2_beta, tgt2_alpha;
    for (int g = 0; g < res.plan.pass1.tokens_out; ++g) {
        const int anchor = res.plan.pass1.groups[g].front();
        if (beta_pos[anchor] >= 0 ||
            (res.plan.pass1.groups[g].size() > 1)) {  // beta group (possibly fused)
            int beta_orig = -1;
            for (int i : res.plan.pass1.groups[g])
                if (beta_pos[i] >= 0) beta_orig = i;
            if (beta_orig >= 0) {
                src2.push_back(g);
                src2_beta.push_back(beta_orig);
                continue;
            }
        }
        if (alpha_pos[anchor] >= 0) {
            tgt2.push_back(g);
            tgt2_alpha.push_back(anchor);
        }
    }

    AttractionMatrix w2;
    w2.weights = Matrix(static_cast<int>(src2.size()), static_cast<int>(tgt2.size()));
    for (int i = 0; i < w2.sources(); ++i)
        for (int j = 0; j < w2.targets(); ++j)
            w2.weights.at(i, j) = w1.weights.at(alpha_pos[tgt2_alpha[j]], beta_pos[src2_beta[i]]);

    const EdgeSelection sel2 = bipartite_soft_match(w2, r2);
    res.plan.pass2 = build_pass(sel2, res.plan.pass1.tokens_out, src2, tgt2, mid.info,
                                mid.sizes, pooling, r2);
    res.plan.has_pass2 = true;
    res.state = apply_pass(mid, res.plan.pass2, pooling);

    res.plan.groups.reserve(res.plan.pass2.tokens_out);
    for (const auto& g2 : res.plan.pass2.groups) {
        std::vector<int> composed;
        for (int mid_idx : g2)
            composed.insert(composed.end(), res.plan.pass1.groups[mid_idx].begin(),
                            res.plan.pass1.groups[mid_idx].end());
        std::sort(composed.begin(), composed.end());
        res.plan.groups.push_back(std::move(composed));
    }
    res.plan.tokens_out = res.plan.pass2.tokens_out;
    res.plan.r_effective =
        static_cast<int>(sel1.edges.size()) + static_cast<int>(sel2.edges.size());
    return res;
}

Matrix aggregate_attention(const Matrix& attention, const FusionPlan& plan,
                           std::span<const float> a, std::span<const int> s) {
    if (attention.rows() != attention.cols())
        throw ShapeError("aggregate_attention: map not square");
    if (attention.rows() != plan.tokens_in)
        throw ShapeError("aggregate_attention: plan/map mismatch");
    if (a.size() != static_cast<std::size_t>(plan.tokens_in) ||
        s.size() != static_cast<std::size_t>(plan.tokens_in))
        throw ShapeError("aggregate_attention: tracker lengths disagree");
    for (int i = 0; i < attention.rows(); ++i) {
        float sum = 0.0f;
        for (int j = 0; j < attention.cols(); ++j) sum += attention.at(i, j);
        if (std::fabs(sum - 1.0f) > 1e-5f)
            throw std::invalid_argument("aggregate_attention: input row " + std::to_string(i) +
                                        " does not sum to 1");
    }

    PassPlan flat;
    flat.tokens_in = plan.tokens_in;
    flat.tokens_out = plan.tokens_out;
    flat.groups = plan.groups;
    flat.weights.reserve(plan.groups.size());
    for (const auto& g : plan.groups) {
        bool fell_back = false;
        flat.weights.push_back(group_weights(g, a, s, PoolingMode::kWeighted, &fell_back));
        if (fell_back) std::cerr << "aggregate_attention: zero weights, using uniform average\n";
    }
    return aggregate_pass(attention, flat);
}

}  // namespace mctf
