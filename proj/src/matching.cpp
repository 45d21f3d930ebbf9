#include "mctf/matching.hpp"

#include <algorithm>
#include <stdexcept>

namespace mctf {

SplitIndices split_alternating(int n_tokens, bool cls_present) {
    SplitIndices split;
    const int first = cls_present ? 1 : 0;
    const int fusible = n_tokens - first;
    if (fusible < 2) return split;
    for (int ordinal = 0; ordinal < fusible; ++ordinal) {
        const int idx = first + ordinal;
        if (ordinal % 2 == 0)
            split.alpha.push_back(idx);
        else
            split.beta.push_back(idx);
    }
    return split;
}

namespace {

// Per-row argmax, ties to the lowest target index.
std::vector<int> row_argmax(const Matrix& w) {
    std::vector<int> best(w.rows(), 0);
    for (int i = 0; i < w.rows(); ++i) {
        const float* row = w.row(i);
        int arg = 0;
        for (int j = 1; j < w.cols(); ++j) {
            if (row[j] > row[arg]) arg = j;
        }
        best[i] = arg;
    }
    return best;
}

}  // namespace

EdgeSelection bipartite_soft_match(const AttractionMatrix& w, int r) {
    EdgeSelection sel;
    const int n_src = w.sources();
    if (n_src == 0 || w.targets() == 0 || r <= 0) return sel;
    const int take = std::min(r, n_src);

    const std::vector<int> best = row_argmax(w.weights);
    std::vector<int> order(n_src);
    for (int i = 0; i < n_src; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return w.weights.at(a, best[a]) > w.weights.at(b, best[b]);
    });
    order.resize(take);
    std::sort(order.begin(), order.end());

    sel.edges.reserve(take);
    for (int i : order) {
        sel.edges.push_back({i, best[i]});
        sel.objective += static_cast<double>(w.weights.at(i, best[i]));
    }
    return sel;
}

EdgeSelection brute_force_match(const AttractionMatrix& w, int r) {
    const int n_src = w.sources();
    const int n_tgt = w.targets();
    if (n_src > 8) throw std::invalid_argument("brute_force_match: instance too large (> 8 sources)");

    EdgeSelection best_sel;
    if (n_src == 0 || n_tgt == 0 || r <= 0) return best_sel;
    const int take = std::min(r, n_src);

    // Restricted weights: only each row's argmax edge carries value.
    const std::vector<int> arg = row_argmax(w.weights);
    Matrix restricted(n_src, n_tgt);
    for (int i = 0; i < n_src; ++i) restricted.at(i, arg[i]) = w.weights.at(i, arg[i]);

    std::vector<Edge> current;
    bool found = false;
    double best_obj = 0.0;
    std::vector<Edge> best_edges;

    // Every source picks no edge or one target; exactly `take` edges overall.
    auto recurse = [&](auto&& self, int src, int used, double obj) -> void {
        if (used == take) {
            if (!found || obj > best_obj) {
                found = true;
                best_obj = obj;
                best_edges = current;
            }
            return;
        }
        if (src == n_src || n_src - src < take - used) return;
        for (int j = 0; j < n_tgt; ++j) {
            current.push_back({src, j});
            self(self, src + 1, used + 1, obj + static_cast<double>(restricted.at(src, j)));
            current.pop_back();
        }
        self(self, src + 1, used, obj);
    };
    recurse(recurse, 0, 0, 0.0);

    best_sel.edges = best_edges;
    best_sel.objective = found ? best_obj : 0.0;
    return best_sel;
}

}  // namespace mctf
