#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mctf/criteria.hpp"
#include "mctf/matching.hpp"

namespace mctf {

enum class PoolingMode { kWeighted, kAverage, kMax };
enum class MatchingMode { kBidirectional, kOneWay };

/// Result of pooling one group of tokens.
struct Pooled {
    std::vector<float> features;
    int size = 0;
    float info = 0.0f;
};

/// Weighted pooling of a token group. Weighted mode combines with the
/// a*s weights, average uses uniform weights, max takes the elementwise
/// maximum. Size pools as the sum of sizes and info as the sum of scores in
/// every mode. A group whose weights sum to zero falls back to the uniform
/// average (logged to stderr).
Pooled delta_pool(std::span<const std::vector<float>> tokens, std::span<const float> a,
                  std::span<const int> s, PoolingMode mode);

/// One matching pass: selected edges, the groups they induce over the
/// pre-pass token indices, and the normalized pooling weights per group.
struct PassPlan {
    EdgeSelection selection;
    std::vector<std::vector<int>> groups;      // output index -> pre-pass indices, sorted
    std::vector<std::vector<float>> weights;   // per group, aligned with members
    int tokens_in = 0;
    int tokens_out = 0;
    int budget = 0;
};

/// Full reduction plan for one step: the alpha->beta pass, the optional
/// beta->alpha pass on the updated sets, and the composed groups over the
/// original input indices. Groups partition the inputs exactly.
struct FusionPlan {
    PassPlan pass1;
    PassPlan pass2;
    bool has_pass2 = false;
    std::vector<std::vector<int>> groups;      // output index -> original indices, sorted
    int tokens_in = 0;
    int tokens_out = 0;
    int r_requested = 0;
    int r_effective = 0;
};

struct ReduceResult {
    TokenState state;
    FusionPlan plan;
};

/// Applies one full reduction step: replaces the informativeness scores with
/// a_next, splits the fusible tokens alternately, matches alpha->beta with
/// budget ceil(r/2), then beta->alpha with the remainder on the updated sets
/// (weights reused from the first pass, fused targets represented by their
/// original entry). One-way mode takes the whole budget in the first pass.
/// r is clamped so at least one token survives; the class token never fuses.
/// pass1_budget overrides the even split (still clamped for feasibility).
ReduceResult mctf_reduce(const TokenState& state, std::span<const float> a_next,
                         const CriteriaTemperatures& temps, int r,
                         MatchingMode matching = MatchingMode::kBidirectional,
                         PoolingMode pooling = PoolingMode::kWeighted,
                         std::optional<int> pass1_budget = std::nullopt);

/// Pools matrix rows group-wise for one pass. Weighted/average modes use the
/// plan's stored weights; max takes the elementwise maximum.
Matrix pool_rows(const Matrix& m, const PassPlan& pass, PoolingMode mode);

/// Fuses a square attention map along both axes for one pass: merged key
/// columns are summed, merged query rows are combined with the plan weights.
Matrix aggregate_pass(const Matrix& attention, const PassPlan& pass);

/// One-shot aggregation over a plan's composed groups with a*s row weights.
/// Requires every input row to sum to 1 within 1e-5; output rows keep that
/// property.
Matrix aggregate_attention(const Matrix& attention, const FusionPlan& plan,
                           std::span<const float> a, std::span<const int> s);

}  // namespace mctf
