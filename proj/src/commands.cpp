#include "mctf/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "mctf/image.hpp"
#include "mctf/matching.hpp"
#include "mctf/svg.hpp"
#include "mctf/weights_io.hpp"

namespace mctf {

namespace {

using ordered_json = nlohmann::ordered_json;

AttentionMode attention_from_string(const std::string& s) {
    if (s == "approx") return AttentionMode::kApproximated;
    if (s == "precise") return AttentionMode::kPrecise;
    throw std::invalid_argument("unknown attention mode: " + s);
}

MatchingMode matching_from_string(const std::string& s) {
    if (s == "bi") return MatchingMode::kBidirectional;
    if (s == "oneway") return MatchingMode::kOneWay;
    throw std::invalid_argument("unknown matching mode: " + s);
}

PoolingMode pooling_from_string(const std::string& s) {
    if (s == "weighted") return PoolingMode::kWeighted;
    if (s == "avg") return PoolingMode::kAverage;
    if (s == "max") return PoolingMode::kMax;
    throw std::invalid_argument("unknown pooling mode: " + s);
}

std::string attention_to_string(AttentionMode m) {
    return m == AttentionMode::kApproximated ? "approx" : "precise";
}
std::string matching_to_string(MatchingMode m) {
    return m == MatchingMode::kBidirectional ? "bi" : "oneway";
}
std::string pooling_to_string(PoolingMode m) {
    switch (m) {
        case PoolingMode::kWeighted: return "weighted";
        case PoolingMode::kAverage: return "avg";
        default: return "max";
    }
}

void apply_criteria_set(ViTConfig& config, const std::string& set) {
    if (set != "s" && set != "si" && set != "sis")
        throw std::invalid_argument("unknown criteria set: " + set + " (want s, si or sis)");
    config.criteria.enable_sim = true;
    config.criteria.enable_info = set == "si" || set == "sis";
    config.criteria.enable_size = set == "sis";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct ResolvedInputs {
    ModelWeights weights;
    TokenState tokens;
    bool has_patch_grid = false;
};

ResolvedInputs resolve_inputs(const RunConfig& run) {
    ResolvedInputs inputs;
    inputs.weights = run.weights_path.empty() ? random_weights(run.config, run.seed)
                                              : load_weights(run.weights_path);
    if (run.input_path.empty()) {
        inputs.tokens = patch_embed(random_image(run.config.image_size, run.seed + 1),
                                    run.config.image_size, inputs.weights, run.config);
        inputs.has_patch_grid = true;
    } else if (run.input_path.ends_with(".ppm") || run.input_path.ends_with(".pgm")) {
        inputs.tokens = patch_embed(load_image(run.input_path), run.config.image_size,
                                    inputs.weights, run.config);
        inputs.has_patch_grid = true;
    } else {
        const ModelWeights container = load_weights(run.input_path);
        if (container.contains("image")) {
            inputs.tokens = patch_embed(container.get("image"), run.config.image_size,
                                        inputs.weights, run.config);
            inputs.has_patch_grid = true;
        } else if (container.contains("tokens")) {
            const Matrix& t = container.get("tokens");
            if (t.cols() != run.config.embed_dim)
                throw std::runtime_error("tokens tensor in " + run.input_path + " is " +
                                         std::to_string(t.cols()) + " wide, config wants " +
                                         std::to_string(run.config.embed_dim));
            inputs.tokens.features = t;
            inputs.tokens.sizes.assign(t.rows(), 1);
            inputs.tokens.info.assign(t.rows(), 1.0f);
            inputs.tokens.cls_present = true;
        } else {
            throw std::runtime_error("input container " + run.input_path +
                                     " has neither an \"image\" nor a \"tokens\" tensor");
        }
    }
    return inputs;
}

ordered_json plan_json(const FusionPlan& plan) {
    ordered_json j;
    j["tokens_in"] = plan.tokens_in;
    j["tokens_out"] = plan.tokens_out;
    j["r_requested"] = plan.r_requested;
    j["r_effective"] = plan.r_effective;
    auto pass_json = [](const PassPlan& pass) {
        ordered_json p;
        p["budget"] = pass.budget;
        p["objective"] = pass.selection.objective;
        ordered_json edges = ordered_json::array();
        for (const Edge& e : pass.selection.edges) edges.push_back({e.src, e.tgt});
        p["edges"] = std::move(edges);
        p["groups"] = pass.groups;
        p["weights"] = pass.weights;
        return p;
    };
    j["pass1"] = pass_json(plan.pass1);
    if (plan.has_pass2) j["pass2"] = pass_json(plan.pass2);
    j["groups"] = plan.groups;
    return j;
}

// Final group id of every token that entered the model, composed across the
// first `layers` block plans.
std::vector<int> compose_groups(const ModelTrace& trace, int layers) {
    const int n0 = trace.schedule.empty() ? 0 : trace.schedule.front();
    std::vector<int> current(n0);
    for (int i = 0; i < n0; ++i) current[i] = i;
    for (int b = 0; b < layers; ++b) {
        const FusionPlan& plan = trace.blocks[b].plan;
        std::vector<int> input_to_group(plan.tokens_in, -1);
        for (std::size_t g = 0; g < plan.groups.size(); ++g)
            for (int idx : plan.groups[g]) input_to_group[idx] = static_cast<int>(g);
        for (int& c : current) c = input_to_group[c];
    }
    return current;
}

}  // namespace

RunConfig run_config_from_json(const ordered_json& doc) {
    RunConfig run;
    if (doc.contains("preset")) run.preset = doc["preset"].get<std::string>();
    run.config = preset_config(run.preset);

    auto get_int = [&](const char* key, int& slot) {
        if (doc.contains(key)) slot = doc[key].get<int>();
    };
    get_int("depth", run.config.depth);
    get_int("embed_dim", run.config.embed_dim);
    get_int("heads", run.config.heads);
    get_int("image_size", run.config.image_size);
    get_int("patch_size", run.config.patch_size);
    get_int("num_classes", run.config.num_classes);
    get_int("r", run.config.r_per_layer);
    get_int("safeguard_min_tokens", run.config.safeguard_min_tokens);
    if (doc.contains("mlp_ratio")) run.config.mlp_ratio = doc["mlp_ratio"].get<float>();
    if (doc.contains("attention"))
        run.config.attention_mode = attention_from_string(doc["attention"].get<std::string>());
    if (doc.contains("matching"))
        run.config.matching_mode = matching_from_string(doc["matching"].get<std::string>());
    if (doc.contains("pooling"))
        run.config.pooling_mode = pooling_from_string(doc["pooling"].get<std::string>());
    if (doc.contains("criteria")) run.criteria_set = doc["criteria"].get<std::string>();
    apply_criteria_set(run.config, run.criteria_set);
    if (doc.contains("tau_sim")) run.config.criteria.tau_sim = doc["tau_sim"].get<float>();
    if (doc.contains("tau_info")) run.config.criteria.tau_info = doc["tau_info"].get<float>();
    if (doc.contains("tau_size")) run.config.criteria.tau_size = doc["tau_size"].get<float>();
    if (doc.contains("proportional_attention"))
        run.config.proportional_attention = doc["proportional_attention"].get<bool>();
    if (doc.contains("weights")) {
        const std::string w = doc["weights"].get<std::string>();
        run.weights_path = w == "random" ? "" : w;
    }
    if (doc.contains("input")) {
        const std::string in = doc["input"].get<std::string>();
        run.input_path = in == "random" ? "" : in;
    }
    if (doc.contains("seed")) run.seed = doc["seed"].get<std::uint32_t>();
    if (doc.contains("sweep")) {
        const auto& s = doc["sweep"];
        run.sweep = {s.at(0).get<int>(), s.at(1).get<int>()};
    }
    if (doc.contains("layer")) run.viz_layer = doc["layer"].get<int>();
    if (doc.contains("out")) run.out_path = doc["out"].get<std::string>();
    if (doc.contains("layer_csv")) run.layer_csv_path = doc["layer_csv"].get<std::string>();
    if (doc.contains("timing")) run.include_timing = doc["timing"].get<bool>();
    if (doc.contains("include_overhead"))
        run.include_overhead = doc["include_overhead"].get<bool>();
    return run;
}

ordered_json config_echo(const RunConfig& run) {
    const ViTConfig& c = run.config;
    ordered_json j;
    j["preset"] = run.preset;
    j["depth"] = c.depth;
    j["embed_dim"] = c.embed_dim;
    j["heads"] = c.heads;
    j["mlp_ratio"] = c.mlp_ratio;
    j["image_size"] = c.image_size;
    j["patch_size"] = c.patch_size;
    j["num_classes"] = c.num_classes;
    j["r"] = c.r_per_layer;
    j["safeguard_min_tokens"] = c.safeguard_min_tokens;
    j["attention"] = attention_to_string(c.attention_mode);
    j["matching"] = matching_to_string(c.matching_mode);
    j["pooling"] = pooling_to_string(c.pooling_mode);
    j["criteria"] = run.criteria_set;
    j["tau_sim"] = c.criteria.tau_sim;
    j["tau_info"] = c.criteria.tau_info;
    j["tau_size"] = c.criteria.tau_size;
    j["proportional_attention"] = c.proportional_attention;
    j["weights"] = run.weights_path.empty() ? "random" : run.weights_path;
    j["input"] = run.input_path.empty() ? "random" : run.input_path;
    j["seed"] = run.seed;
    return j;
}

int cmd_forward(const RunConfig& run) {
    if (run.out_path.empty()) throw std::invalid_argument("forward: --out is required");
    run.config.validate();
    const ResolvedInputs inputs = resolve_inputs(run);

    const auto t0 = std::chrono::steady_clock::now();
    ModelTrace trace;
    const std::vector<float> logits = model_forward(inputs.tokens, inputs.weights, run.config, &trace);
    const auto t1 = std::chrono::steady_clock::now();

    const FlopsReport flops = model_macs(run.config, trace.schedule, run.include_overhead);

    ordered_json j;
    j["command"] = "forward";
    j["config"] = config_echo(run);
    j["schedule"] = trace.schedule;
    j["final_tokens"] = trace.final_tokens;
    j["logits"] = logits;
    ordered_json f;
    f["total_macs"] = flops.total_macs;
    f["baseline_macs"] = flops.baseline_total_macs;
    f["mctf_overhead_macs"] = flops.overhead_macs;
    f["overhead_included"] = flops.overhead_included;
    f["reduction_percent"] = flops.reduction_percent;
    j["flops"] = std::move(f);
    if (run.include_timing)
        j["timing_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();

    write_text_file(run.out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_flops(const RunConfig& run) {
    if (run.out_path.empty()) throw std::invalid_argument("flops: --out is required");
    run.config.validate();
    int lo = run.config.r_per_layer, hi = run.config.r_per_layer;
    if (run.sweep) {
        lo = run.sweep->first;
        hi = run.sweep->second;
    }
    if (lo < 0 || hi < lo) throw std::invalid_argument("flops: invalid sweep range");

    const int count = hi - lo + 1;
    std::vector<FlopsReport> reports(count);
    std::vector<std::vector<int>> schedules(count);

    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("MCTF_THREADS")) threads = std::max(1, std::atoi(cap));
    threads = std::max(1, std::min(threads, count));

    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            ViTConfig c = run.config;
            c.r_per_layer = lo + i;
            schedules[i] = token_schedule(c);
            reports[i] = model_macs(c, schedules[i], run.include_overhead);
        }
    };
    if (threads == 1) {
        worker(0, count);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (count + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(count, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    ordered_json j;
    j["command"] = "flops";
    j["config"] = config_echo(run);
    j["include_overhead"] = run.include_overhead;
    ordered_json rows = ordered_json::array();
    std::string csv = "r,total_macs,gmacs,reduction_percent\n";
    char line[128];
    for (int i = 0; i < count; ++i) {
        const FlopsReport& rep = reports[i];
        ordered_json row;
        row["r"] = lo + i;
        row["total_macs"] = rep.total_macs;
        row["gmacs"] = rep.gmacs();
        row["reduction_percent"] = rep.reduction_percent;
        row["schedule"] = schedules[i];
        rows.push_back(std::move(row));
        std::snprintf(line, sizeof(line), "%d,%llu,%.6f,%.4f\n", lo + i,
                      static_cast<unsigned long long>(rep.total_macs), rep.gmacs(),
                      rep.reduction_percent);
        csv += line;
    }
    j["rows"] = std::move(rows);
    j["baseline_macs"] = reports[0].baseline_total_macs;

    write_text_file(run.out_path + ".json", j.dump(2) + "\n");
    write_text_file(run.out_path + ".csv", csv);
    if (!run.layer_csv_path.empty())
        write_text_file(run.layer_csv_path, flops_report_csv(reports[0]));
    return 0;
}

OracleCheckResult run_oracle_check(std::uint32_t seed, int instances, bool corrupt_comparator) {
    Rng rng(seed);
    OracleCheckResult res;
    res.total = instances;
    for (int i = 0; i < instances; ++i) {
        const int n_src = 1 + rng.uniform_int(7);
        const int n_tgt = 1 + rng.uniform_int(7);
        const int r = rng.uniform_int(n_src + 1);
        AttractionMatrix w;
        w.weights = Matrix(n_src, n_tgt);
        for (float& v : w.weights.data()) v = 1.0f - rng.uniform(0.0f, 1.0f);  // (0, 1]

        EdgeSelection greedy = bipartite_soft_match(w, r);
        const EdgeSelection oracle = brute_force_match(w, r);
        if (corrupt_comparator && i == instances / 2) greedy.objective += 1.0;

        if (greedy.objective != oracle.objective ||
            greedy.edges.size() != static_cast<std::size_t>(std::min(r, n_src))) {
            ++res.failures;
            std::ostringstream dump;
            dump << "instance " << i << ": " << n_src << "x" << n_tgt << " r=" << r
                 << " greedy=" << greedy.objective << " oracle=" << oracle.objective << "\nW=";
            for (int row = 0; row < n_src; ++row) {
                dump << "[";
                for (int col = 0; col < n_tgt; ++col) dump << w.weights.at(row, col) << " ";
                dump << "]";
            }
            dump << "\n";
            res.failure_log += dump.str();
        }
    }
    return res;
}

int cmd_oracle_check(std::uint32_t seed, int instances) {
    const OracleCheckResult res = run_oracle_check(seed, instances);
    if (res.failures > 0) {
        std::cerr << res.failure_log;
        std::cout << (res.total - res.failures) << "/" << res.total << " passed, "
                  << res.failures << " FAILED\n";
        return 1;
    }
    std::cout << res.total << "/" << res.total << " passed\n";
    return 0;
}

int cmd_viz(const RunConfig& run) {
    if (run.out_path.empty()) throw std::invalid_argument("viz: --out is required");
    run.config.validate();
    const ResolvedInputs inputs = resolve_inputs(run);
    if (!inputs.has_patch_grid)
        throw std::runtime_error(
            "viz needs a patch grid: give an image input (PPM/PGM, an \"image\" tensor or "
            "seeded-random), not raw tokens");

    ModelTrace trace;
    model_forward(inputs.tokens, inputs.weights, run.config, &trace);
    const int layers = run.viz_layer > 0 ? run.viz_layer : run.config.depth;
    if (layers > run.config.depth)
        throw std::invalid_argument("viz: layer exceeds depth");

    const std::vector<int> token_group = compose_groups(trace, layers);
    const int side = run.config.patches_per_side();
    std::vector<int> patch_group(side * side);
    for (int p = 0; p < side * side; ++p) patch_group[p] = token_group[p + 1];

    write_text_file(run.out_path, render_group_map(side, patch_group));
    return 0;
}

int cmd_trace(const RunConfig& run) {
    if (run.out_path.empty()) throw std::invalid_argument("trace: --out is required");
    run.config.validate();
    const ResolvedInputs inputs = resolve_inputs(run);

    ModelTrace trace;
    const std::vector<float> logits = model_forward(inputs.tokens, inputs.weights, run.config, &trace);

    ordered_json j;
    j["command"] = "trace";
    j["config"] = config_echo(run);
    j["schedule"] = trace.schedule;
    j["final_tokens"] = trace.final_tokens;
    ordered_json blocks = ordered_json::array();
    for (const BlockTrace& b : trace.blocks) {
        ordered_json bj;
        bj["tokens_in"] = b.tokens_in;
        bj["tokens_out"] = b.tokens_out;
        bj["r_requested"] = b.r_requested;
        bj["r_effective"] = b.r_effective;
        bj["informativeness"] = b.informativeness;
        bj["plan"] = plan_json(b.plan);
        blocks.push_back(std::move(bj));
    }
    j["blocks"] = std::move(blocks);
    j["logits"] = logits;

    write_text_file(run.out_path, j.dump(2) + "\n");
    return 0;
}

nlohmann::ordered_json consistency_result_json(const ConsistencyBatchResult& result) {
    ordered_json j;
    j["ce_fixed"] = result.ce_fixed;
    j["ce_random"] = result.ce_random;
    j["mse_cls"] = result.mse_cls;
    j["r_prime_drawn"] = result.r_prime_drawn;
    j["gated"] = result.gated;
    j["total"] = result.total;
    return j;
}

}  // namespace mctf
