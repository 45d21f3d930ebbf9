#pragma once

#include <vector>

#include "mctf/criteria.hpp"

namespace mctf {

/// Alternating split of the fusible tokens into the source and target halves.
/// Indices refer to positions in the original token list.
struct SplitIndices {
    std::vector<int> alpha;  // sources
    std::vector<int> beta;   // targets
};

/// Even fusible ordinal -> alpha, odd -> beta. The class token (index 0 when
/// present) goes to neither. Fewer than two fusible tokens yields empty sets.
SplitIndices split_alternating(int n_tokens, bool cls_present);

struct Edge {
    int src = 0;
    int tgt = 0;
    bool operator==(const Edge&) const = default;
};

/// Chosen edges of one matching pass, sorted by source index.
/// At most one edge per source; edge count == min(r, sources).
struct EdgeSelection {
    std::vector<Edge> edges;
    double objective = 0.0;  // sum of selected weights
};

/// Relaxed bipartite matching: keep each source row's maximum-weight edge
/// (ties to the lowest target index), then select the r of those with the
/// largest weights (ties to the lowest source index). r is clamped to the
/// source count.
EdgeSelection bipartite_soft_match(const AttractionMatrix& w, int r);

/// Exhaustive oracle over the same restricted objective: enumerates every
/// edge set with exactly min(r, sources) edges and at most one edge per
/// source, scoring non-argmax edges as zero. Guarded to <= 8 sources.
EdgeSelection brute_force_match(const AttractionMatrix& w, int r);

}  // namespace mctf
