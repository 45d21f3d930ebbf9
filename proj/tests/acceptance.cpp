// Acceptance suite: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mctf/commands.hpp"
#include "mctf/consistency.hpp"
#include "mctf/flops.hpp"
#include "mctf/image.hpp"
#include "mctf/matching.hpp"

using namespace mctf;

namespace {

struct Criterion {
    std::string name;
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// --- criterion 1: FLOPs table reproduction ---------------------------------
Criterion flops_tables() {
    Criterion c{"1 FLOPs table reproduction"};
    const auto t0 = std::chrono::steady_clock::now();

    auto reduction = [](ViTConfig cfg, int r) {
        cfg.r_per_layer = r;
        return model_macs(cfg, token_schedule(cfg), /*include_overhead=*/true);
    };

    const FlopsReport t_base = reduction(deit_tiny(), 0);
    const FlopsReport s_base = reduction(deit_small(), 0);
    c.expect(std::fabs(t_base.gmacs() - 1.26) / 1.26 <= 0.03,
             "deit-t base " + fmt(t_base.gmacs()) + " G vs 1.26 +-3%");
    c.expect(std::fabs(s_base.gmacs() - 4.61) / 4.61 <= 0.03,
             "deit-s base " + fmt(s_base.gmacs()) + " G vs 4.61 +-3%");

    const double t16 = reduction(deit_tiny(), 16).reduction_percent;
    const double s16 = reduction(deit_small(), 16).reduction_percent;
    const double t20 = reduction(deit_tiny(), 20).reduction_percent;
    const double s20 = reduction(deit_small(), 20).reduction_percent;
    c.expect(std::fabs(t16 - 43.65) <= 1.5, "deit-t r16 " + fmt(t16) + "% vs 43.65 +-1.5");
    c.expect(std::fabs(s16 - 43.60) <= 1.5, "deit-s r16 " + fmt(s16) + "% vs 43.60 +-1.5");
    c.expect(std::fabs(t20 - 52.38) <= 1.5, "deit-t r20 " + fmt(t20) + "% vs 52.38 +-1.5");
    c.expect(std::fabs(s20 - 52.49) <= 1.5, "deit-s r20 " + fmt(s20) + "% vs 52.49 +-1.5");
    c.expect(seconds_since(t0) < 10.0, "runtime over 10 s");
    if (c.ok)
        c.detail = "bases " + fmt(t_base.gmacs()) + "/" + fmt(s_base.gmacs()) + " G, r16 " +
                   fmt(t16) + "/" + fmt(s16) + "%, r20 " + fmt(t20) + "/" + fmt(s20) +
                   "% (overhead included)";
    return c;
}

// --- criterion 2: matching oracle equivalence ------------------------------
Criterion oracle_equivalence() {
    Criterion c{"2 matching oracle equivalence"};
    const auto t0 = std::chrono::steady_clock::now();
    const OracleCheckResult res = run_oracle_check(424242, 500);
    c.expect(res.failures == 0, std::to_string(res.failures) + " objective mismatches");
    c.expect(seconds_since(t0) < 5.0, "runtime over 5 s");
    if (c.ok) c.detail = "500/500 exact in " + fmt(seconds_since(t0)) + " s";
    return c;
}

// --- criterion 3: reduction invariant suite --------------------------------
Criterion reduction_invariants() {
    Criterion c{"3 reduction invariant suite"};
    Rng rng(777);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const bool cls = trial % 3 != 0;
        const int n = 4 + rng.uniform_int(14);
        const int fusible = n - (cls ? 1 : 0);
        if (fusible < 2) continue;

        TokenState s;
        s.features = Matrix(n, 6);
        for (float& v : s.features.data()) v = rng.uniform(-1.0f, 1.0f);
        s.sizes.resize(n);
        s.info.resize(n);
        s.cls_present = cls;
        for (int i = 0; i < n; ++i) {
            s.sizes[i] = 1 + rng.uniform_int(4);
            s.info[i] = 0.01f + rng.uniform(0.0f, 1.0f);
        }
        std::vector<float> a(n);
        for (float& v : a) v = 0.01f + rng.uniform(0.0f, 1.0f);
        const int r = rng.uniform_int(fusible);

        const ReduceResult res = mctf_reduce(s, a, CriteriaTemperatures{}, r);
        ++checked;

        c.expect(res.state.tokens() == n - r, "count contract broke");
        int before = 0, after = 0;
        for (int v : s.sizes) before += v;
        for (int v : res.state.sizes) after += v;
        c.expect(before == after, "size conservation broke");

        for (std::size_t g = 0; g < res.plan.groups.size(); ++g) {
            for (int col = 0; col < s.features.cols(); ++col) {
                float lo = 1e30f, hi = -1e30f;
                for (int idx : res.plan.groups[g]) {
                    lo = std::min(lo, s.features.at(idx, col));
                    hi = std::max(hi, s.features.at(idx, col));
                }
                const float v = res.state.features.at(static_cast<int>(g), col);
                c.expect(v >= lo - 1e-5f && v <= hi + 1e-5f, "pooled feature left envelope");
            }
        }

        Matrix att(n, n);
        for (int i = 0; i < n; ++i) {
            float sum = 0.0f;
            for (int j = 0; j < n; ++j) {
                att.at(i, j) = 0.05f + rng.uniform(0.0f, 1.0f);
                sum += att.at(i, j);
            }
            for (int j = 0; j < n; ++j) att.at(i, j) /= sum;
        }
        const Matrix agg = aggregate_attention(att, res.plan, a, s.sizes);
        for (int i = 0; i < agg.rows(); ++i) {
            float sum = 0.0f;
            for (int j = 0; j < agg.cols(); ++j) sum += agg.at(i, j);
            c.expect(std::fabs(sum - 1.0f) <= 1e-5f, "aggregated row sum drifted");
        }
        if (!c.ok) break;
    }
    if (c.ok) c.detail = std::to_string(checked) + " random reductions, zero failures";
    return c;
}

// --- criterion 4: one-step-ahead / approximation sanity ---------------------
Criterion approximation_sanity() {
    Criterion c{"4 one-step-ahead and approximation sanity"};
    ViTConfig cfg = deit_small();
    cfg.r_per_layer = 0;
    const ModelWeights w = random_weights(cfg, 7);
    const TokenState tokens = patch_embed(random_image(cfg.image_size, 7), cfg.image_size, w, cfg);

    const std::vector<float> approx0 = model_forward(tokens, w, cfg);
    ViTConfig precise_cfg = cfg;
    precise_cfg.attention_mode = AttentionMode::kPrecise;
    const std::vector<float> precise0 = model_forward(tokens, w, precise_cfg);
    float max_diff = 0.0f;
    for (std::size_t i = 0; i < approx0.size(); ++i)
        max_diff = std::max(max_diff, std::fabs(approx0[i] - precise0[i]));
    c.expect(max_diff <= 1e-5f, "r=0 modes differ by " + fmt(max_diff));

    ViTConfig fused = cfg;
    fused.r_per_layer = 16;
    ModelTrace trace;
    const std::vector<float> logits = model_forward(tokens, w, fused, &trace);
    const std::vector<int> golden{197, 181, 165, 149, 133, 117, 101, 85, 69, 53, 37, 21};
    c.expect(trace.schedule == golden, "schedule left the golden path");
    c.expect(trace.final_tokens == 10, "safeguard did not clamp to 10");
    for (float v : logits)
        if (!std::isfinite(v)) c.expect(false, "non-finite logit");

    const FlopsReport fa = model_macs(fused, trace.schedule, false);
    ViTConfig fp = fused;
    fp.attention_mode = AttentionMode::kPrecise;
    const FlopsReport fpr = model_macs(fp, trace.schedule, false);
    c.expect(fpr.total_macs > fa.total_macs, "precise not above approximated");
    const double gap = fpr.gmacs() - fa.gmacs();
    c.expect(std::fabs(gap - 0.4) <= 0.3, "mode gap " + fmt(gap) + " G outside 0.4 +-0.3");
    if (c.ok)
        c.detail = "r=0 max logit gap " + fmt(max_diff) + ", schedule golden, MAC gap " +
                   fmt(gap) + " G";
    return c;
}

// --- criterion 5: monotone-transform invariance ----------------------------
Criterion monotone_invariance() {
    Criterion c{"5 monotone-transform invariance"};
    Rng rng(838383);
    for (int trial = 0; trial < 100; ++trial) {
        const int n_src = 1 + rng.uniform_int(7);
        const int n_tgt = 1 + rng.uniform_int(7);
        AttractionMatrix w;
        w.weights = Matrix(n_src, n_tgt);
        for (float& v : w.weights.data()) v = 1.0f - rng.uniform(0.0f, 1.0f);
        const int r = rng.uniform_int(n_src + 1);
        const EdgeSelection base = bipartite_soft_match(w, r);
        for (float lambda : {0.5f, 2.0f, 10.0f}) {
            AttractionMatrix powed;
            powed.weights = Matrix(n_src, n_tgt);
            for (std::size_t i = 0; i < powed.weights.size(); ++i)
                powed.weights.data()[i] = std::pow(w.weights.data()[i], lambda);
            c.expect(bipartite_soft_match(powed, r).edges == base.edges,
                     "edge set changed under w^" + fmt(lambda));
        }
        if (!c.ok) break;
    }
    if (c.ok) c.detail = "100 instances x {0.5, 2, 10}, edge sets identical";
    return c;
}

// --- criterion 6: consistency loss contracts -------------------------------
Criterion consistency_contracts() {
    Criterion c{"6 consistency loss contracts"};
    ViTConfig cfg;
    cfg.depth = 2;
    cfg.embed_dim = 16;
    cfg.heads = 2;
    cfg.image_size = 32;
    cfg.patch_size = 8;
    cfg.num_classes = 2;
    cfg.r_per_layer = 3;
    const ModelWeights w = random_weights(cfg, 88);
    const TokenState x = patch_embed(random_image(cfg.image_size, 89), cfg.image_size, w, cfg);

    Rng rng1(1);
    const ConsistencyBatchResult zero_lambda = consistency_loss(w, cfg, x, 0, 0.0, 0.4, rng1);
    c.expect(zero_lambda.total == zero_lambda.ce_fixed + zero_lambda.ce_random,
             "lambda=0 total is not the plain CE sum");

    Rng rng2(2);
    const ConsistencyBatchResult forced =
        consistency_loss(w, cfg, x, 1, 3.0, 0.4, rng2, false, cfg.r_per_layer);
    c.expect(forced.mse_cls == 0.0, "forced r'=r left a nonzero MSE");
    c.expect(forced.total == 2.0 * forced.ce_fixed, "forced r'=r total is not 2 CE");

    Rng rng3(3);
    const ConsistencyBatchResult two_cls = consistency_loss(w, cfg, x, 0, 3.0, 0.4, rng3);
    c.expect(!two_cls.gated, "two-class forward fell below the 0.4 gate");

    ViTConfig wide = cfg;
    wide.num_classes = 1000;
    const ModelWeights ww = random_weights(wide, 90);
    const TokenState wx = patch_embed(random_image(wide.image_size, 91), wide.image_size, ww, wide);
    Rng rng4(4);
    const ConsistencyBatchResult thousand = consistency_loss(ww, wide, wx, 0, 3.0, 0.4, rng4);
    c.expect(thousand.gated, "1000-class forward cleared the 0.4 gate");
    c.expect(thousand.total == thousand.ce_fixed + thousand.ce_random,
             "gated total still contains the MSE term");

    Rng rng5(5);
    int counts[4] = {0, 0, 0, 0};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const int v = sample_r_prime(4, rng5);
        c.expect(v >= 0 && v < 4, "r' left {0..r-1}");
        ++counts[v];
    }
    for (int k = 0; k < 4; ++k)
        c.expect(std::fabs(counts[k] / static_cast<double>(draws) - 0.25) <= 0.01,
                 "r' frequency " + fmt(counts[k] / static_cast<double>(draws)) + " off 0.25");
    if (c.ok) c.detail = "collapse, forced r'=r, both gate branches, uniformity all hold";
    return c;
}

// --- criterion 7: byte determinism of the CLI outputs -----------------------
Criterion cli_determinism() {
    Criterion c{"7 CLI byte determinism"};
    nlohmann::ordered_json doc;
    doc["preset"] = "deit-s";
    doc["r"] = 16;
    doc["seed"] = 7;
    RunConfig run = run_config_from_json(doc);

    run.out_path = "acc_fwd_a.json";
    cmd_forward(run);
    run.out_path = "acc_fwd_b.json";
    cmd_forward(run);
    const std::string fwd_a = read_file("acc_fwd_a.json");
    c.expect(!fwd_a.empty() && fwd_a == read_file("acc_fwd_b.json"),
             "forward reports differ between runs");

    const nlohmann::ordered_json report = nlohmann::ordered_json::parse(fwd_a);
    c.expect(report["schedule"].size() == 12 && report["final_tokens"] == 10,
             "report schedule is not the 12-entry path ending at 10");

    run.out_path = "acc_map_a.svg";
    cmd_viz(run);
    run.out_path = "acc_map_b.svg";
    cmd_viz(run);
    const std::string svg = read_file("acc_map_a.svg");
    c.expect(!svg.empty() && svg == read_file("acc_map_b.svg"),
             "SVG maps differ between runs");

    for (const char* f : {"acc_fwd_a.json", "acc_fwd_b.json", "acc_map_a.svg", "acc_map_b.svg"})
        std::remove(f);
    if (c.ok) c.detail = "forward JSON and viz SVG byte-identical across runs";
    return c;
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Criterion> results;
    results.push_back(flops_tables());
    results.push_back(oracle_equivalence());
    results.push_back(reduction_invariants());
    results.push_back(approximation_sanity());
    results.push_back(monotone_invariance());
    results.push_back(consistency_contracts());
    results.push_back(cli_determinism());

    int failures = 0;
    for (const Criterion& c : results) {
        std::printf("[%s] criterion %s%s%s\n", c.ok ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.empty() ? "" : ": ", c.detail.c_str());
        if (!c.ok) ++failures;
    }
    std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(results.size()) - failures,
                results.size(), seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
